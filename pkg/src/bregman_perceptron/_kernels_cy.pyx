# cython: language_level=3
"""Compiled kernels; bit-identical twins of ``_kernels_py``.

Same loop structure and accumulation order as the pure-Python module —
compiled with fp-contraction off so results match bit for bit.
"""

from libc.math cimport fabs

BACKEND_NAME = "cython"


def matvec_transposed(double[::1] w, Py_ssize_t rows, Py_ssize_t cols,
                      double[::1] x, Py_ssize_t x_off, double[::1] out):
    cdef Py_ssize_t i, j, base
    cdef double xi
    for j in range(cols):
        out[j] = 0.0
    for i in range(rows):
        xi = x[x_off + i]
        base = i * cols
        for j in range(cols):
            out[j] += w[base + j] * xi


def affine_transposed(double[::1] w, Py_ssize_t rows, Py_ssize_t cols,
                      double[::1] x, Py_ssize_t x_off, double[::1] b,
                      double[::1] out):
    cdef Py_ssize_t i, j, base
    cdef double xi
    for j in range(cols):
        out[j] = 0.0
    for i in range(rows):
        xi = x[x_off + i]
        base = i * cols
        for j in range(cols):
            out[j] += w[base + j] * xi
    for j in range(cols):
        out[j] += b[j]


def matmul_affine(double[::1] xs, Py_ssize_t s, Py_ssize_t m,
                  double[::1] w, Py_ssize_t n, double[::1] b,
                  double[::1] out):
    cdef Py_ssize_t r, j, k, ob, xb, wb
    cdef double xv
    for r in range(s):
        ob = r * n
        xb = r * m
        for j in range(n):
            out[ob + j] = 0.0
        for k in range(m):
            xv = xs[xb + k]
            wb = k * n
            for j in range(n):
                out[ob + j] += w[wb + j] * xv
        for j in range(n):
            out[ob + j] += b[j]


def outer(double[::1] e, Py_ssize_t n, double[::1] x, Py_ssize_t m,
          double[::1] out):
    cdef Py_ssize_t i, j, base
    cdef double xi
    for i in range(m):
        xi = x[i]
        base = i * n
        for j in range(n):
            out[base + j] = xi * e[j]


def add_outer(double[::1] g, double[::1] e, Py_ssize_t n,
              double[::1] x, Py_ssize_t x_off, Py_ssize_t m):
    cdef Py_ssize_t i, j, base
    cdef double xi
    for i in range(m):
        xi = x[x_off + i]
        base = i * n
        for j in range(n):
            g[base + j] += xi * e[j]


def axpy(double alpha, double[::1] a, double[::1] b, double[::1] out):
    cdef Py_ssize_t t
    for t in range(a.shape[0]):
        out[t] = b[t] + alpha * a[t]


def scale_inplace(double[::1] a, double alpha):
    cdef Py_ssize_t t
    for t in range(a.shape[0]):
        a[t] *= alpha


def l1_norm(double[::1] a):
    cdef Py_ssize_t t
    cdef double total = 0.0
    for t in range(a.shape[0]):
        total += fabs(a[t])
    return total


def soft_threshold(double[::1] a, double theta, double[::1] out):
    cdef Py_ssize_t t
    cdef double v
    for t in range(a.shape[0]):
        v = a[t]
        if v > theta:
            out[t] = v - theta
        elif v < -theta:
            out[t] = v + theta
        else:
            out[t] = 0.0


def dot(double[::1] a, double[::1] b):
    cdef Py_ssize_t t
    cdef double total = 0.0
    for t in range(a.shape[0]):
        total += a[t] * b[t]
    return total


def count_zeros(double[::1] a):
    cdef Py_ssize_t t, count = 0
    for t in range(a.shape[0]):
        if a[t] == 0.0:
            count += 1
    return count

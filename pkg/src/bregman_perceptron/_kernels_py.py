"""Pure-Python reference kernels.

Every routine here has a compiled twin in ``_kernels_cy``; the two must be
bit-identical, so all loops accumulate in the same fixed order (ascending
index) and nothing is allowed to reassociate or skip floating-point work.
Buffers are flat ``array('d')`` objects (row-major for matrices).
"""

from __future__ import annotations

BACKEND_NAME = "python"


def matvec_transposed(w, rows, cols, x, x_off, out):
    # out[j] = sum_i w[i, j] * x[x_off + i], i ascending
    for j in range(cols):
        out[j] = 0.0
    for i in range(rows):
        xi = x[x_off + i]
        base = i * cols
        for j in range(cols):
            out[j] += w[base + j] * xi


def affine_transposed(w, rows, cols, x, x_off, b, out):
    # out[j] = (sum_i w[i, j] * x[x_off + i]) + b[j]
    for j in range(cols):
        out[j] = 0.0
    for i in range(rows):
        xi = x[x_off + i]
        base = i * cols
        for j in range(cols):
            out[j] += w[base + j] * xi
    for j in range(cols):
        out[j] += b[j]


def matmul_affine(xs, s, m, w, n, b, out):
    # Row r of out = affine_transposed(w, m, n, row r of xs, b);
    # same per-element op sequence as affine_transposed.
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


def outer(e, n, x, m, out):
    # out[i, j] = x[i] * e[j]
    for i in range(m):
        xi = x[i]
        base = i * n
        for j in range(n):
            out[base + j] = xi * e[j]


def add_outer(g, e, n, x, x_off, m):
    # g[i, j] += x[x_off + i] * e[j]
    for i in range(m):
        xi = x[x_off + i]
        base = i * n
        for j in range(n):
            g[base + j] += xi * e[j]


def axpy(alpha, a, b, out):
    # out[t] = b[t] + alpha * a[t]
    for t in range(len(a)):
        out[t] = b[t] + alpha * a[t]


def scale_inplace(a, alpha):
    for t in range(len(a)):
        a[t] *= alpha


def l1_norm(a):
    total = 0.0
    for v in a:
        total += abs(v)
    return total


def soft_threshold(a, theta, out):
    # out[t] = sign(a[t]) * max(|a[t]| - theta, 0)
    for t in range(len(a)):
        v = a[t]
        if v > theta:
            out[t] = v - theta
        elif v < -theta:
            out[t] = v + theta
        else:
            out[t] = 0.0


def dot(a, b):
    total = 0.0
    for t in range(len(a)):
        total += a[t] * b[t]
    return total


def count_zeros(a):
    count = 0
    for v in a:
        if v == 0.0:
            count += 1
    return count

"""Minimal dense linear algebra: 64-bit vectors and row-major matrices.

Values are immutable once constructed and every kernel accumulates in a
fixed (ascending-index) order, so results are reproducible bit for bit —
including across the compiled and pure-Python kernel backends. Problem
sizes here are small (hundreds by tens), which is why this module carries
its own kernels instead of an external linear-algebra dependency.
"""

from __future__ import annotations

import math
from array import array
from typing import Iterable, Iterator

from ._backend import kernels


class ShapeMismatchError(ValueError):
    """Operands have incompatible shapes; the message names both."""


def _check_finite(buf: array, what: str) -> None:
    for v in buf:
        if not math.isfinite(v):
            raise ValueError(f"{what} contains a non-finite entry ({v!r})")


class DenseVector:
    """Immutable vector of 64-bit floats."""

    __slots__ = ("_data",)

    def __init__(self, values: Iterable[float]):
        buf = array("d", (float(v) for v in values))
        if len(buf) == 0:
            raise ValueError("DenseVector must not be empty")
        _check_finite(buf, "DenseVector")
        self._data = buf

    @classmethod
    def _wrap(cls, buf: array) -> "DenseVector":
        # Internal: adopt a kernel-produced buffer without copy or checks.
        v = object.__new__(cls)
        v._data = buf
        return v

    def __len__(self) -> int:
        return len(self._data)

    def __getitem__(self, i: int) -> float:
        return self._data[i]

    def __iter__(self) -> Iterator[float]:
        return iter(self._data)

    def to_list(self) -> list[float]:
        return list(self._data)

    def tobytes(self) -> bytes:
        """Raw little-endian float64 bytes; used for bitwise comparisons."""
        return self._data.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseVector):
            return NotImplemented
        return self._data == other._data

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("DenseVector is not hashable")

    def __repr__(self) -> str:
        return f"DenseVector({self.to_list()!r})"


class DenseMatrix:
    """Immutable row-major matrix of 64-bit floats."""

    __slots__ = ("_data", "_rows", "_cols")

    def __init__(self, rows: int, cols: int, values: Iterable[float]):
        if rows <= 0 or cols <= 0:
            raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
        buf = array("d", (float(v) for v in values))
        if len(buf) != rows * cols:
            raise ValueError(
                f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {len(buf)}"
            )
        _check_finite(buf, "DenseMatrix")
        self._data = buf
        self._rows = rows
        self._cols = cols

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[float]]) -> "DenseMatrix":
        row_lists = [list(r) for r in rows]
        if not row_lists:
            raise ValueError("matrix needs at least one row")
        cols = len(row_lists[0])
        if any(len(r) != cols for r in row_lists):
            raise ValueError("rows have inconsistent lengths")
        flat = [v for r in row_lists for v in r]
        return cls(len(row_lists), cols, flat)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        if rows <= 0 or cols <= 0:
            raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
        return cls._wrap(rows, cols, array("d", bytes(8 * rows * cols)))

    @classmethod
    def _wrap(cls, rows: int, cols: int, buf: array) -> "DenseMatrix":
        m = object.__new__(cls)
        m._data = buf
        m._rows = rows
        m._cols = cols
        return m

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self._rows, self._cols)

    def __getitem__(self, idx: tuple[int, int]) -> float:
        i, j = idx
        if not (0 <= i < self._rows and 0 <= j < self._cols):
            raise IndexError(f"index {idx} out of range for {self._rows}x{self._cols}")
        return self._data[i * self._cols + j]

    def row(self, i: int) -> DenseVector:
        if not (0 <= i < self._rows):
            raise IndexError(f"row {i} out of range for {self._rows}x{self._cols}")
        start = i * self._cols
        return DenseVector._wrap(self._data[start : start + self._cols])

    def to_rows(self) -> list[list[float]]:
        c = self._cols
        return [list(self._data[i * c : (i + 1) * c]) for i in range(self._rows)]

    def tobytes(self) -> bytes:
        return self._data.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("DenseMatrix is not hashable")

    def __repr__(self) -> str:
        return f"DenseMatrix({self._rows}x{self._cols})"


def matvec_transposed(w: DenseMatrix, x: DenseVector) -> DenseVector:
    """Transpose-multiply: result[j] = sum_i w[i, j] * x[i].

    This is the affine map of the perceptron without its bias; the matrix
    is stored untransposed and the kernel walks it row by row.
    """
    if len(x) != w.rows:
        raise ShapeMismatchError(
            f"matvec_transposed: matrix is {w.rows}x{w.cols}, vector has length {len(x)}"
        )
    out = array("d", bytes(8 * w.cols))
    kernels.matvec_transposed(w._data, w.rows, w.cols, x._data, 0, out)
    return DenseVector._wrap(out)


def outer_product(e: DenseVector, x: DenseVector) -> DenseMatrix:
    """Rank-one matrix with result[i, j] = x[i] * e[j] (shape len(x) x len(e))."""
    m, n = len(x), len(e)
    out = array("d", bytes(8 * m * n))
    kernels.outer(e._data, n, x._data, m, out)
    return DenseMatrix._wrap(m, n, out)


def axpy_matrix(alpha: float, a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Elementwise b + alpha * a; shapes must match."""
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"axpy_matrix: shapes differ, {a.rows}x{a.cols} vs {b.rows}x{b.cols}"
        )
    out = array("d", bytes(8 * a.rows * a.cols))
    kernels.axpy(alpha, a._data, b._data, out)
    return DenseMatrix._wrap(a.rows, a.cols, out)


def axpy_vector(alpha: float, a: DenseVector, b: DenseVector) -> DenseVector:
    """Elementwise b + alpha * a for vectors."""
    if len(a) != len(b):
        raise ShapeMismatchError(
            f"axpy_vector: lengths differ, {len(a)} vs {len(b)}"
        )
    out = array("d", bytes(8 * len(a)))
    kernels.axpy(alpha, a._data, b._data, out)
    return DenseVector._wrap(out)


def l1_norm(w: DenseMatrix) -> float:
    """Elementwise l1 norm: sum of absolute values of all entries."""
    return kernels.l1_norm(w._data)


def zero_fraction(w: DenseMatrix) -> float:
    """Fraction of entries that are exactly zero."""
    return kernels.count_zeros(w._data) / (w.rows * w.cols)

"""Shared helpers for the test suite.

numpy appears here and in tests only, as an independent oracle; the
library itself never imports it.
"""

import random

import pytest

from bregman_perceptron.tensor import DenseMatrix, DenseVector


def random_vector(rng: random.Random, n: int, lo: float = -5.0, hi: float = 5.0) -> DenseVector:
    return DenseVector([rng.uniform(lo, hi) for _ in range(n)])


def random_matrix(rng: random.Random, rows: int, cols: int,
                  lo: float = -5.0, hi: float = 5.0) -> DenseMatrix:
    return DenseMatrix(rows, cols, [rng.uniform(lo, hi) for _ in range(rows * cols)])


def bitwise_equal_vec(a: DenseVector, b: DenseVector) -> bool:
    return a.tobytes() == b.tobytes()


def bitwise_equal_mat(a: DenseMatrix, b: DenseMatrix) -> bool:
    return a.shape == b.shape and a.tobytes() == b.tobytes()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xBEEF)

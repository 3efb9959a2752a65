"""Dense vector/matrix containers and the kernel-backed linear algebra."""

import math
import random

import numpy as np
import pytest

from bregman_perceptron.tensor import (
    DenseMatrix,
    DenseVector,
    ShapeMismatchError,
    axpy_matrix,
    axpy_vector,
    l1_norm,
    matvec_transposed,
    outer_product,
    zero_fraction,
)

from conftest import random_matrix, random_vector


class TestDenseVector:
    def test_basic_container(self):
        v = DenseVector([1.0, -2.5, 3.0])
        assert len(v) == 3
        assert v[1] == -2.5
        assert list(v) == [1.0, -2.5, 3.0]
        assert v.to_list() == [1.0, -2.5, 3.0]

    def test_coerces_to_float64(self):
        v = DenseVector([1, 2, 3])
        assert v.to_list() == [1.0, 2.0, 3.0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            DenseVector([])

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            DenseVector([1.0, bad])

    def test_equality_and_hash(self):
        a = DenseVector([1.0, 2.0])
        b = DenseVector([1.0, 2.0])
        assert a == b
        assert not (a == DenseVector([1.0, 2.0, 3.0]))
        with pytest.raises(TypeError):
            hash(a)

    def test_tobytes_is_raw_float64(self):
        v = DenseVector([1.0, 2.0])
        assert v.tobytes() == np.array([1.0, 2.0]).tobytes()

    def test_to_list_returns_copy(self):
        v = DenseVector([1.0])
        lst = v.to_list()
        lst[0] = 99.0
        assert v[0] == 1.0


class TestDenseMatrix:
    def test_row_major_layout(self):
        m = DenseMatrix(2, 3, [1, 2, 3, 4, 5, 6])
        assert m.shape == (2, 3)
        assert m[0, 2] == 3.0
        assert m[1, 0] == 4.0
        assert m.row(1).to_list() == [4.0, 5.0, 6.0]
        assert m.to_rows() == [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]

    def test_from_rows(self):
        m = DenseMatrix.from_rows([[1, 2], [3, 4]])
        assert m.to_rows() == [[1.0, 2.0], [3.0, 4.0]]

    def test_from_rows_ragged_rejected(self):
        with pytest.raises(ValueError):
            DenseMatrix.from_rows([[1, 2], [3]])
        with pytest.raises(ValueError):
            DenseMatrix.from_rows([])

    def test_zeros(self):
        m = DenseMatrix.zeros(3, 2)
        assert m.to_rows() == [[0.0, 0.0]] * 3

    def test_entry_count_checked(self):
        with pytest.raises(ValueError):
            DenseMatrix(2, 2, [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0), (-1, 2)])
    def test_non_positive_dims_rejected(self, rows, cols):
        with pytest.raises(ValueError):
            DenseMatrix(rows, cols, [])
        with pytest.raises(ValueError):
            DenseMatrix.zeros(rows, cols)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            DenseMatrix(1, 2, [1.0, float("nan")])

    def test_index_bounds(self):
        m = DenseMatrix(2, 2, [1, 2, 3, 4])
        with pytest.raises(IndexError):
            m[2, 0]
        with pytest.raises(IndexError):
            m.row(2)

    def test_equality_and_hash(self):
        a = DenseMatrix(2, 2, [1, 2, 3, 4])
        assert a == DenseMatrix(2, 2, [1, 2, 3, 4])
        # same data, different shape must not compare equal
        assert not (a == DenseMatrix(1, 4, [1, 2, 3, 4]))
        with pytest.raises(TypeError):
            hash(a)


class TestLinearAlgebra:
    """Each op is checked against numpy on randomized shapes."""

    def test_matvec_transposed_oracle(self):
        rng = random.Random(11)
        for _ in range(25):
            m, n = rng.randint(1, 12), rng.randint(1, 12)
            w = random_matrix(rng, m, n)
            x = random_vector(rng, m)
            got = matvec_transposed(w, x)
            want = np.array(w.to_rows()).T @ np.array(x.to_list())
            assert np.allclose(got.to_list(), want, rtol=1e-13, atol=1e-13)

    def test_matvec_transposed_shape_error(self):
        w = DenseMatrix(2, 3, range(6))
        with pytest.raises(ShapeMismatchError):
            matvec_transposed(w, DenseVector([1.0, 2.0, 3.0]))

    def test_outer_product_oracle(self):
        rng = random.Random(12)
        for _ in range(25):
            m, n = rng.randint(1, 10), rng.randint(1, 10)
            x = random_vector(rng, m)
            e = random_vector(rng, n)
            got = outer_product(e, x)
            want = np.outer(np.array(x.to_list()), np.array(e.to_list()))
            assert got.shape == (m, n)
            assert np.allclose(got.to_rows(), want, rtol=1e-15)

    def test_axpy_matrix_oracle(self):
        rng = random.Random(13)
        a = random_matrix(rng, 4, 5)
        b = random_matrix(rng, 4, 5)
        got = axpy_matrix(-0.75, a, b)
        want = np.array(b.to_rows()) - 0.75 * np.array(a.to_rows())
        assert np.allclose(got.to_rows(), want, rtol=1e-15)

    def test_axpy_matrix_shape_error(self):
        with pytest.raises(ShapeMismatchError):
            axpy_matrix(1.0, DenseMatrix.zeros(2, 2), DenseMatrix.zeros(2, 3))

    def test_axpy_vector_oracle(self):
        got = axpy_vector(2.0, DenseVector([1.0, -1.0]), DenseVector([10.0, 10.0]))
        assert got.to_list() == [12.0, 8.0]
        with pytest.raises(ShapeMismatchError):
            axpy_vector(1.0, DenseVector([1.0]), DenseVector([1.0, 2.0]))

    def test_l1_norm_oracle(self):
        rng = random.Random(14)
        w = random_matrix(rng, 6, 7)
        assert l1_norm(w) == pytest.approx(np.abs(np.array(w.to_rows())).sum(), rel=1e-14)

    def test_zero_fraction(self):
        w = DenseMatrix(2, 3, [0.0, 1.0, 0.0, 2.0, 0.0, 3.0])
        assert zero_fraction(w) == 0.5
        assert zero_fraction(DenseMatrix.zeros(4, 4)) == 1.0

    def test_zero_fraction_counts_exact_zeros_only(self):
        w = DenseMatrix(1, 3, [0.0, 1e-300, -0.0])
        # -0.0 == 0.0 in IEEE-754 and must count; denormals must not
        assert zero_fraction(w) == pytest.approx(2.0 / 3.0)

    def test_results_never_non_finite_for_finite_inputs(self):
        rng = random.Random(15)
        for _ in range(10):
            w = random_matrix(rng, 5, 4, -1e3, 1e3)
            x = random_vector(rng, 5, -1e3, 1e3)
            out = matvec_transposed(w, x)
            assert all(math.isfinite(v) for v in out)

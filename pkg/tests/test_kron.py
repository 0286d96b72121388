import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linear_sum_assignment

from hplyap.errors import DimensionCapExceeded
from hplyap.kron import (
    build_level,
    check_dimension,
    hierarchy_matrix,
    kron_power,
    kron_product,
    lift_vector,
    tensor_permutation,
)
from hplyap.sim import expm

from conftest import random_hurwitz

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def small(shape):
    return arrays(np.float64, shape, elements=finite)


def test_kron_identity_gives_block_diagonal():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = kron_product(np.eye(2), b)
    np.testing.assert_array_equal(out[:2, :2], b)
    np.testing.assert_array_equal(out[2:, 2:], b)
    assert not out[:2, 2:].any() and not out[2:, :2].any()


def test_kron_scalar_and_vectors():
    b = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(kron_product([[2.0]], b), 2 * b)
    col = kron_product([[1.0], [2.0]], [[3.0], [4.0]]).ravel()
    np.testing.assert_array_equal(col, [3, 4, 6, 8])


def test_kron_rejects_non_finite():
    with pytest.raises(ValueError):
        kron_product([[np.nan]], [[1.0]])


def test_kron_power_examples():
    a = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_array_equal(kron_power(a, 1), a)
    np.testing.assert_array_equal(kron_power(np.ones(2), 2), np.ones(4))
    np.testing.assert_array_equal(kron_power(np.array([1.0, 2.0]), 2), [1, 2, 2, 4])
    np.testing.assert_allclose(kron_power(a, 3), np.kron(a, np.kron(a, a)))


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_levels_below_one_rejected(bad):
    with pytest.raises(ValueError):
        kron_power(np.eye(2), bad)
    with pytest.raises(ValueError):
        lift_vector([1.0, 2.0], bad)
    with pytest.raises(ValueError):
        hierarchy_matrix(np.eye(2), bad)


def test_lift_vector_examples():
    np.testing.assert_array_equal(lift_vector([1, 2], 1), [1, 2])
    np.testing.assert_array_equal(lift_vector([1, 2], 2), [1, 2, 2, 4])
    np.testing.assert_array_equal(lift_vector(np.zeros(3), 3), np.zeros(27))


def test_hierarchy_scalar_and_level_one():
    for i in range(1, 6):
        np.testing.assert_allclose(hierarchy_matrix([[-0.7]], i), [[-0.7 * i]])
    a = np.array([[0.0, 1.0], [-1.0, -0.9]])
    np.testing.assert_array_equal(hierarchy_matrix(a, 1), a)


def test_hierarchy_rejects_non_square():
    with pytest.raises(ValueError):
        hierarchy_matrix(np.ones((2, 3)), 2)


def test_hierarchy_level_two_eigenvalues():
    a = np.array([[-1.0, 2.0], [0.3, -4.0]])
    l1, l2 = np.linalg.eigvals(a)
    # brute-force assembly, independent of the recursive builder
    brute = np.kron(a, np.eye(2)) + np.kron(np.eye(2), a)
    expected = np.sort_complex(np.array([2 * l1, l1 + l2, l1 + l2, 2 * l2]))
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(brute)), expected, atol=1e-12)
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(hierarchy_matrix(a, 2))), expected, atol=1e-12)


def test_dimension_cap():
    assert check_dimension(3, 2) == 9
    with pytest.raises(DimensionCapExceeded):
        hierarchy_matrix(np.eye(4), 7)
    with pytest.raises(DimensionCapExceeded):
        check_dimension(2, 5, cap=16)


def test_build_level(ex1):
    lv = build_level(ex1, 1)
    np.testing.assert_array_equal(lv.a_mat, ex1.a)
    np.testing.assert_array_equal(lv.b_vec, ex1.b)
    np.testing.assert_array_equal(lv.c_vec, ex1.c)
    lv2 = build_level(ex1, 2)
    assert lv2.a_mat.shape == (4, 4) and lv2.b_vec.shape == (4,) and lv2.c_vec.shape == (4,)
    np.testing.assert_allclose(lv2.b_vec, np.kron(ex1.b, ex1.b))
    for i in (1, 2, 3, 4):
        lv = build_level(ex1, i)
        assert lv.dim == 2**i and lv.b_vec.size == lv.c_vec.size == 2**i


def test_hierarchy_result_is_independent_copy():
    a = np.array([[-1.0, 0.5], [0.0, -2.0]])
    m = hierarchy_matrix(a, 3)
    m[0, 0] = 99.0
    assert hierarchy_matrix(a, 3)[0, 0] == pytest.approx(-3.0)


@settings(max_examples=40, deadline=None)
@given(small((2, 3)), small((3, 2)), small((2, 2)), small((2, 2)))
def test_mixed_product(a, c, b, d):
    lhs = kron_product(a, b) @ kron_product(c, d)
    rhs = kron_product(a @ c, b @ d)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(small((3, 3)), small((3, 3)), st.floats(-1, 1), st.integers(1, 3))
def test_hierarchy_linear(a, delta, lam, i):
    lhs = hierarchy_matrix(a + lam * delta, i)
    rhs = hierarchy_matrix(a, i) + lam * hierarchy_matrix(delta, i)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))


def test_eigenvalue_sums():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        for i in (2, 3):
            a = rng.normal(size=(n, n))
            lam = np.linalg.eigvals(a)
            sums = [sum(c) for c in itertools.product(lam, repeat=i)]
            got = np.linalg.eigvals(hierarchy_matrix(a, i))
            # match the two multisets optimally; sorting is fragile under round-off
            cost = np.abs(got[:, None] - np.array(sums)[None, :])
            rows, cols = linear_sum_assignment(cost)
            assert cost[rows, cols].max() <= 1e-8


def test_hierarchy_flow():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = int(rng.integers(2, 4))
        a = random_hurwitz(rng, n)
        x0 = rng.normal(size=n)
        for i in (1, 2, 3):
            big = hierarchy_matrix(a, i)
            for t in (0.3, 1.0, 2.5):
                lifted = lift_vector(expm(a, t) @ x0, i)
                xi = expm(big, t) @ lift_vector(x0, i)
                assert np.linalg.norm(lifted - xi) <= 1e-9 * np.linalg.norm(xi)


def test_tensor_permutation_swaps_factors():
    x, y = np.array([1.0, 2.0]), np.array([3.0, 5.0])
    idx = tensor_permutation(2, 2, (1, 0))
    np.testing.assert_array_equal(np.kron(x, y)[idx], np.kron(y, x))

import math

import numpy as np
import pytest

from hplyap import certificates as C
from hplyap.errors import DimensionCapExceeded, Infeasible, NoFeasibleAlpha, NumericalFailure, SingularDynamics
from hplyap.kron import build_level, hierarchy_matrix, lift_vector
from hplyap.systems import LtiSystem, UncertainSystem


def test_example1_program(ex1):
    lv = build_level(ex1, 1)
    cert = C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec))
    assert cert.objective_value == pytest.approx(8.0, rel=1e-6)
    np.testing.assert_allclose(cert.p_mat, 0.5 * np.eye(2), atol=1e-4)
    assert cert.solver_report.residuals["ok"]
    # epigraph optimum agrees with the quadratic form of the returned Gram matrix
    recomputed = ex1.c @ np.linalg.solve(cert.p_mat, ex1.c)
    assert cert.objective_value == pytest.approx(recomputed, rel=1e-6)


def test_duplicate_vertex_matches_single(ex1):
    lv = build_level(ex1, 1)
    one = C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec))
    two = C.solve(C.build_impulse_program([lv, lv], lv.b_vec, lv.c_vec))
    assert two.objective_value == pytest.approx(one.objective_value, rel=1e-6)


def test_feasibility_for_minus_identity():
    prob = C.build_feasibility_program([-np.eye(2)], 1)
    cert = C.solve(prob)
    assert np.linalg.eigvalsh(cert.p_mat).min() > 0
    assert C.certificate_residuals(cert.p_mat, [-np.eye(2)], prob.eps_pd)["ok"]
    assert C.certificate_residuals(np.eye(2), [-np.eye(2)], 1e-8)["ok"]


def test_marginal_system_with_strict_margin_is_infeasible():
    nil = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(Infeasible) as info:
        C.solve(C.build_feasibility_program([nil], 1))
    assert info.value.diagnostics["status"] == "primal infeasible"


def test_unstable_vertex_is_infeasible_not_numerical():
    sys = LtiSystem([[0.5, 0.0], [0.0, -1.0]], [1, 1], [1, 1])
    with pytest.raises(Infeasible):
        C.certify_impulse(sys, 2)
    with pytest.raises(Infeasible):
        C.certify_step(sys, 1)


def test_validator_rejects_bad_gram_matrices():
    m = [-np.eye(2)]
    assert not C.certificate_residuals(-np.eye(2), m, 1e-8)["ok"]
    assert not C.certificate_residuals(np.array([[1.0, 0.1], [0.0, 1.0]]), m, 1e-8)["ok"]
    assert not C.certificate_residuals(np.eye(2), [np.eye(2)], 1e-8)["ok"]


def test_step_program_singular_and_minus_identity():
    nil = LtiSystem([[0.0, 1.0], [0.0, 0.0]], [1, 0], [1, 0])
    with pytest.raises(SingularDynamics):
        C.certify_step(nil, 1)
    for i in (1, 2, 3):
        np.testing.assert_allclose(C.inverse_lift(-np.eye(2), i), (-1) ** i * np.eye(2**i))
    sys = LtiSystem(-np.eye(2), [1, 0], [1, 0])
    lv = build_level(sys, 2)
    prob = C.build_step_program(lv, C.inverse_lift(sys.a, 2), lv.b_vec, lv.c_vec)
    v, r = prob.linear_constraints[0]
    np.testing.assert_allclose(v, lv.b_vec)


def test_step_program_example5(ex5):
    cert = C.certify_step(ex5, 1)
    assert cert.solver_report.residuals["ok"]


def test_shift_vertices(ex6):
    zero = UncertainSystem(ex6.a, np.zeros((2, 2)), ex6.b, ex6.c)
    p, m = C.shift_vertices(zero, 0.0)
    np.testing.assert_array_equal(p, ex6.a)
    np.testing.assert_array_equal(m, ex6.a)
    p, m = C.shift_vertices(ex6, 0.15)
    np.testing.assert_allclose(p, [[0.15, 1.0], [-0.5, -0.45]])
    np.testing.assert_allclose(m, [[0.15, 1.0], [-0.7, -0.25]])
    base = C.shift_vertices(ex6, 0.0)
    shifted = C.shift_vertices(ex6, -0.5)
    for b, s in zip(base, shifted):
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(s).real), np.sort(np.linalg.eigvals(b).real) - 0.5)


def test_difference_vertices(ex6):
    zero = UncertainSystem(ex6.a, np.zeros((2, 2)), ex6.b, ex6.c)
    lift = C.build_difference_vertices(zero, 1)
    np.testing.assert_array_equal(lift.a_plus, lift.a_minus)
    lift = C.build_difference_vertices(ex6, 1)
    np.testing.assert_array_equal(lift.a_plus[:2, :2], ex6.a + ex6.delta)
    np.testing.assert_array_equal(lift.a_plus[2:, 2:], ex6.a)
    np.testing.assert_array_equal(lift.a_minus[:2, :2], ex6.a - ex6.delta)
    assert not lift.a_plus[:2, 2:].any() and not lift.a_plus[2:, :2].any()
    np.testing.assert_array_equal(lift.b_bar, np.r_[ex6.b, ex6.b])
    np.testing.assert_array_equal(lift.c_bar, np.r_[ex6.c, -ex6.c])
    lift3 = C.build_difference_vertices(ex6, 3)
    np.testing.assert_array_equal(lift3.b_bar, lift_vector(np.r_[ex6.b, ex6.b], 3))


def test_vertex_certificate_covers_interval(ex6):
    cert = C.certify_impulse(ex6, 2, 0.1)
    rng = np.random.default_rng(3)
    p = cert.p_mat
    for lam in rng.uniform(-1, 1, size=20):
        m = hierarchy_matrix(ex6.a + lam * ex6.delta + 0.1 * np.eye(2), 2)
        lyap = m.T @ p + p @ m
        tol = 1e-7 * np.linalg.norm(p, 2) * np.linalg.norm(m, 2)
        assert np.linalg.eigvalsh(0.5 * (lyap + lyap.T)).max() <= tol


def test_invariant_basis_is_lossless(stiff100):
    lv = build_level(stiff100, 2)
    prob = C.build_impulse_program([lv], lv.b_vec, lv.c_vec)
    reduced = C.solve(prob)
    full = C.solve(prob, symmetry=False)
    assert reduced.solver_report.backend.startswith("cvxopt/invariant")
    assert full.solver_report.backend.startswith("cvxopt/full")
    assert reduced.objective_value == pytest.approx(full.objective_value, rel=1e-5)


def test_invariant_basis_spans_symmetric_invariant_matrices():
    basis = C.invariant_basis(2, 3)
    assert basis.shape[1:] == (8, 8)
    for b in basis:
        np.testing.assert_array_equal(b, b.T)
    # every entry belongs to exactly one basis element
    np.testing.assert_array_equal(basis.sum(axis=0), np.ones((8, 8)))


def test_clarabel_backend_agrees(ex1):
    pytest.importorskip("cvxpy")
    lv = build_level(ex1, 1)
    prob = C.build_impulse_program([lv], lv.b_vec, lv.c_vec)
    cert = C.solve(prob, backend="clarabel")
    assert cert.objective_value == pytest.approx(8.0, rel=1e-5)


def test_unknown_backend(ex1):
    lv = build_level(ex1, 1)
    with pytest.raises(ValueError):
        C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec), backend="nope")


def test_problem_validation():
    with pytest.raises(ValueError):
        C.SdpProblem(dim=2, objective="feasibility", lyapunov=(np.eye(3),))
    with pytest.raises(ValueError):
        C.SdpProblem(dim=2, objective="epigraph", lyapunov=(np.eye(2),))
    with pytest.raises(ValueError):
        C.SdpProblem(dim=2, objective="feasibility", lyapunov=(np.eye(2),), linear_constraints=((np.ones(3), 1.0),))
    with pytest.raises(ValueError):
        C.build_impulse_program([np.eye(2)], np.ones(3), np.ones(2))


def test_dimension_cap_in_solve(ex1):
    lv = build_level(ex1, 3)
    with pytest.raises(DimensionCapExceeded):
        C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec), cap=4)


def test_iteration_cap_gives_numerical_failure(ex1, monkeypatch):
    monkeypatch.setenv(C.MAX_ITERS_ENV, "1")
    lv = build_level(ex1, 1)
    with pytest.raises(NumericalFailure):
        C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec))
    monkeypatch.setenv(C.MAX_ITERS_ENV, "zero")
    with pytest.raises(ValueError):
        C.solve(C.build_impulse_program([lv], lv.b_vec, lv.c_vec))


def test_max_alpha_minus_identity():
    sys = UncertainSystem(-np.eye(2), np.zeros((2, 2)), [1, 0], [1, 0])
    alpha = C.max_alpha(sys, 1, tol=1e-3)
    assert alpha == pytest.approx(1.0, abs=5e-3)
    assert alpha < 1.0


def test_max_alpha_case_study_low_levels(ex6):
    front = C.frontier(ex6, [1, 2], difference=True)
    assert front[1] == pytest.approx(0.156, abs=5e-3)
    assert front[2] == pytest.approx(0.169, abs=5e-3)
    assert front[2] >= front[1]


def test_max_alpha_errors(ex6):
    with pytest.raises(ValueError):
        C.max_alpha(ex6, 1, tol=0)
    with pytest.raises(NoFeasibleAlpha):
        C.max_alpha(ex6, 1, interval=(0.3, 0.5))


def test_feasibility_is_monotone_in_alpha(ex6):
    results = [C.is_alpha_feasible(ex6, 1, a, difference=True) for a in (0.0, 0.1, 0.15, 0.16, 0.2)]
    assert results == sorted(results, reverse=True)
    assert results[0] and not results[-1]


def test_weighted_inverse_form():
    p = np.array([[2.0, 0.5], [0.5, 1.0]])
    w = np.array([1.0, -3.0])
    assert C.weighted_inverse_form(p, w) == pytest.approx(w @ np.linalg.inv(p) @ w, rel=1e-13)
    assert math.isfinite(C.weighted_inverse_form(1e6 * p, w))

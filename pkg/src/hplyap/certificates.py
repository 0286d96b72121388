"""Semidefinite programs that search for lifted Lyapunov certificates.

Every program has one symmetric decision matrix ``Q`` and a mix of

* a positive-definite floor ``Q >= eps_pd * I``,
* Lyapunov constraints ``M^T Q + Q M <= -eps_stab * I``, one per vertex ``M``,
* scalar constraints ``v^T Q v <= r``,
* optionally the objective ``min w Q^{-1} w^T``, handled in epigraph form
  ``min t  s.t.  [[t, w], [w^T, Q]] >= 0``.

The default backend calls cvxopt directly.  When every constraint is
invariant under permutations of the tensor factors (always true for
Kronecker powers and hierarchy generators) the decision matrix is restricted
to permutation-invariant matrices.  Averaging any feasible ``Q`` over the
permutation group keeps it feasible and does not increase the objective, so
the optimum is unchanged while the variable count drops from ``d(d+1)/2`` to
the number of orbits.

Nothing returned by :func:`solve` is trusted on the backend's word: the
Gram matrix is re-checked by dense eigenvalue computations before a
certificate is handed out.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DimensionCapExceeded, Infeasible, NoFeasibleAlpha, NumericalFailure, SingularDynamics
from .kron import DEFAULT_DIMENSION_CAP, HierarchyLevel, hierarchy_matrix, lift_vector, tensor_permutation
from .systems import LtiSystem, UncertainSystem

log = logging.getLogger(__name__)

MAX_ITERS_ENV = "HPLYAP_MAX_ITERS"
DEFAULT_MAX_ITERS = 100

# relative floor on Q, scaled by the natural size of Q fixed by v^T Q v <= r
PD_FLOOR_REL = 1e-8
# relative strict margin used by the alpha bisection
FEASIBILITY_MARGIN = 1e-3
LYAPUNOV_TOL_REL = 1e-7
ASYMMETRY_TOL_REL = 1e-9
# decay-rate defect per unit |M| tolerated in a returned certificate
RATE_DEFECT_TOL = 1e-6
# tolerance multiplier for the fallback backend attempts
LOOSE_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class SdpProblem:
    dim: int
    objective: str  # "feasibility" or "epigraph"
    lyapunov: tuple
    linear_constraints: tuple = ()
    schur_objective_vector: np.ndarray | None = None
    eps_stab: float = 0.0
    eps_pd: float = 1e-8
    level: int = 1
    alpha: float = 0.0
    tensor_shape: tuple | None = None  # (n, i) when the lifted space is (R^n)^{(x) i}

    def __post_init__(self):
        if self.objective not in ("feasibility", "epigraph"):
            raise ValueError(f"unknown objective {self.objective!r}")
        d = self.dim
        mats = tuple(np.asarray(m, dtype=float) for m in self.lyapunov)
        if not mats:
            raise ValueError("at least one Lyapunov vertex is required")
        for m in mats:
            if m.shape != (d, d):
                raise ValueError(f"vertex matrix has shape {m.shape}, expected {(d, d)}")
        lin = []
        for v, r in self.linear_constraints:
            v = np.asarray(v, dtype=float).reshape(-1)
            if v.shape != (d,):
                raise ValueError(f"constraint vector has length {v.size}, expected {d}")
            lin.append((v, float(r)))
        w = self.schur_objective_vector
        if (w is None) != (self.objective == "feasibility"):
            raise ValueError("schur_objective_vector must be given iff objective is 'epigraph'")
        if w is not None:
            w = np.asarray(w, dtype=float).reshape(-1)
            if w.shape != (d,):
                raise ValueError(f"objective vector has length {w.size}, expected {d}")
        if self.eps_stab < 0 or self.eps_pd <= 0:
            raise ValueError("need eps_stab >= 0 and eps_pd > 0")
        object.__setattr__(self, "lyapunov", mats)
        object.__setattr__(self, "linear_constraints", tuple(lin))
        object.__setattr__(self, "schur_objective_vector", w)


@dataclass
class SolverReport:
    status: str
    iterations: int
    backend: str
    residuals: dict = field(default_factory=dict)


@dataclass(eq=False)
class LyapunovCertificate:
    level: int
    p_mat: np.ndarray
    alpha: float
    vertices: list
    objective_value: float | None
    solver_report: SolverReport


# ---------------------------------------------------------------- validation


def certificate_residuals(p, vertices, eps_pd: float) -> dict:
    """Independent eigenvalue check of a candidate Gram matrix.

    Besides the absolute test ``max eig(M^T P + P M) <= 1e-7 |P| |M|`` the
    check bounds the rate defect ``beta = max eig(M^T P + P M, 2P)``; a
    positive ``beta`` means the envelope could grow like ``exp(beta t)``
    on the lifted level, so it is held below ``1e-6 |M|``.
    """
    p = np.asarray(p, dtype=float)
    pnorm = float(np.linalg.norm(p, 2))
    asym = float(np.max(np.abs(p - p.T))) / max(pnorm, np.finfo(float).tiny)
    ps = 0.5 * (p + p.T)
    pd_min = float(np.linalg.eigvalsh(ps)[0])
    pd_ok = pd_min > 0 and pd_min >= eps_pd - LYAPUNOV_TOL_REL * pnorm
    lyap_max, lyap_tol, defects = [], [], []
    for m in vertices:
        m = np.asarray(m, dtype=float)
        lyap = m.T @ ps + ps @ m
        lam = float(np.linalg.eigvalsh(lyap)[-1])
        mnorm = float(np.linalg.norm(m, 2))
        lyap_max.append(lam)
        lyap_tol.append(LYAPUNOV_TOL_REL * pnorm * mnorm)
        if pd_min > 0:
            beta = float(sla.eigh(lyap, 2.0 * ps, eigvals_only=True)[-1])
            defects.append(beta / mnorm if mnorm > 0 else beta)
        else:
            defects.append(math.inf)
    ok = (
        asym <= ASYMMETRY_TOL_REL
        and pd_ok
        and all(lam <= tol for lam, tol in zip(lyap_max, lyap_tol))
        and all(beta <= RATE_DEFECT_TOL for beta in defects)
    )
    return {
        "asymmetry": asym,
        "pd_min_eig": pd_min,
        "pd_floor": float(eps_pd),
        "lyapunov_max_eig": lyap_max,
        "lyapunov_tol": lyap_tol,
        "rate_defect": defects,
        "ok": bool(ok),
    }


def weighted_inverse_form(p, w) -> float:
    """``w P^{-1} w^T`` through a Cholesky solve."""
    w = np.asarray(w, dtype=float).reshape(-1)
    factor = sla.cho_factor(0.5 * (p + p.T), lower=True)
    return float(w @ sla.cho_solve(factor, w))


# ---------------------------------------------------------------- bases


@lru_cache(maxsize=16)
def _invariant_labels(n: int, i: int):
    d = n**i
    digits = np.array(list(itertools.product(range(n), repeat=i)), dtype=np.int64).reshape(d, i)
    codes = digits[:, None, :] * n + digits[None, :, :]
    codes.sort(axis=2)
    _, lab = np.unique(codes.reshape(d * d, i), axis=0, return_inverse=True)
    lab = lab.reshape(d, d)
    # merge the orbit of (J, K) with that of (K, J) so every basis matrix is symmetric
    _, sym = np.unique(np.minimum(lab, lab.T), return_inverse=True)
    sym = sym.reshape(d, d)
    sym.setflags(write=False)
    return sym


def invariant_basis(n: int, i: int) -> np.ndarray:
    """0/1 symmetric matrices spanning the permutation-invariant subspace, shape (m, d, d)."""
    lab = _invariant_labels(n, i)
    m = int(lab.max()) + 1
    return (lab[None, :, :] == np.arange(m)[:, None, None]).astype(float)


def symmetric_basis(d: int) -> np.ndarray:
    rows, cols = np.triu_indices(d)
    basis = np.zeros((rows.size, d, d))
    k = np.arange(rows.size)
    basis[k, rows, cols] = 1.0
    basis[k, cols, rows] = 1.0
    return basis


def _is_invariant(problem: SdpProblem) -> bool:
    if problem.tensor_shape is None:
        return False
    n, i = problem.tensor_shape
    if n**i != problem.dim or i < 2:
        return False
    # adjacent transpositions generate the symmetric group
    perms = []
    for k in range(i - 1):
        order = list(range(i))
        order[k], order[k + 1] = order[k + 1], order[k]
        perms.append(tensor_permutation(n, i, order))
    vecs = [v for v, _ in problem.linear_constraints]
    if problem.schur_objective_vector is not None:
        vecs.append(problem.schur_objective_vector)
    for idx in perms:
        for m in problem.lyapunov:
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m[np.ix_(idx, idx)] - m)) > 1e-12 * scale:
                return False
        for v in vecs:
            scale = max(1.0, float(np.max(np.abs(v))))
            if np.max(np.abs(v[idx] - v)) > 1e-12 * scale:
                return False
    return True


# ---------------------------------------------------------------- backends


def _max_iters() -> int:
    raw = os.environ.get(MAX_ITERS_ENV)
    if not raw:
        return DEFAULT_MAX_ITERS
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{MAX_ITERS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{MAX_ITERS_ENV} must be positive, got {value}")
    return value


@dataclass
class _Scaled:
    """Problem data rescaled to unit-size vectors and vertices (same feasible Q up to ``q_scale``)."""

    q_scale: float
    pd_floor: float
    lyap: list  # (normalized M, rhs margin)
    lin: list  # (unit v, bound)
    w_hat: np.ndarray | None
    w_norm2: float


def _rescale(problem: SdpProblem) -> _Scaled:
    if problem.linear_constraints:
        v0, r0 = problem.linear_constraints[0]
        vv = float(v0 @ v0)
        q_scale = r0 / vv if vv > 0 and r0 > 0 else 1.0
    else:
        q_scale = problem.eps_pd
    lyap = []
    for m in problem.lyapunov:
        mn = float(np.linalg.norm(m, 2))
        if mn == 0.0:
            lyap.append((m, problem.eps_stab / q_scale))
        else:
            lyap.append((m / mn, problem.eps_stab / (q_scale * mn)))
    lin = []
    for v, r in problem.linear_constraints:
        vn = float(np.linalg.norm(v))
        if vn == 0.0:
            if r < 0:
                lin.append((v, r / q_scale))
            continue
        lin.append((v / vn, r / (q_scale * vn * vn)))
    w = problem.schur_objective_vector
    w_hat, w_norm2 = None, 0.0
    if w is not None:
        w_norm2 = float(w @ w)
        if w_norm2 > 0:
            w_hat = w / math.sqrt(w_norm2)
    return _Scaled(q_scale, problem.eps_pd / q_scale, lyap, lin, w_hat, w_norm2)


def _solve_cvxopt(problem: SdpProblem, sc: _Scaled, basis: np.ndarray, max_iters: int, kkt: str = "qr", loosen: float = 1.0):
    from cvxopt import matrix, solvers

    m, d, _ = basis.shape
    epigraph = sc.w_hat is not None
    nvar = m + 1 if epigraph else m
    flat = basis.reshape(m, d * d).T  # column k is vec(B_k)

    c = np.zeros(nvar)
    if epigraph:
        c[-1] = 1.0

    gs, hs = [], []
    g = np.zeros((d * d, nvar))
    g[:, :m] = -flat
    gs.append(g)
    hs.append(-sc.pd_floor * np.eye(d))
    for mat, margin in sc.lyap:
        prod = np.matmul(mat.T[None, :, :], basis)
        lyap = prod + prod.transpose(0, 2, 1)
        g = np.zeros((d * d, nvar))
        g[:, :m] = lyap.reshape(m, d * d).T
        gs.append(g)
        hs.append(-margin * np.eye(d))
    if epigraph:
        big = d + 1
        blk = np.zeros((m + 1, big, big))
        blk[:m, 1:, 1:] = -basis
        blk[m, 0, 0] = -1.0
        gs.append(blk.reshape(m + 1, big * big).T)
        h = np.zeros((big, big))
        h[0, 1:] = sc.w_hat
        h[1:, 0] = sc.w_hat
        hs.append(h)

    kwargs = {}
    if sc.lin:
        gl = np.zeros((len(sc.lin), nvar))
        hl = np.zeros(len(sc.lin))
        for row, (v, r) in enumerate(sc.lin):
            gl[row, :m] = np.einsum("i,kij,j->k", v, basis, v)
            hl[row] = r
        kwargs["Gl"] = matrix(gl)
        kwargs["hl"] = matrix(hl)

    options = {
        "show_progress": False,
        "maxiters": max_iters,
        "abstol": loosen * float(os.environ.get("HPLYAP_ABSTOL", 1e-9)),
        "reltol": loosen * float(os.environ.get("HPLYAP_RELTOL", 1e-8)),
        "feastol": loosen * float(os.environ.get("HPLYAP_FEASTOL", 1e-9)),
    }
    try:
        sol = solvers.sdp(
            matrix(c),
            Gs=[matrix(np.asfortranarray(gk)) for gk in gs],
            hs=[matrix(hk) for hk in hs],
            options=options,
            kktsolver=kkt,
            **kwargs,
        )
    except (ArithmeticError, ValueError) as exc:
        return "error", None, None, 0, {"message": str(exc)}
    status = sol["status"]
    x = None if sol["x"] is None else np.array(sol["x"]).reshape(-1)
    q = None if x is None else np.tensordot(x[:m], basis, axes=1)
    t = None if (x is None or not epigraph) else float(x[m])
    diag = {
        "gap": sol.get("gap"),
        "primal_infeasibility": sol.get("primal infeasibility"),
        "dual_infeasibility": sol.get("dual infeasibility"),
    }
    return status, q, t, int(sol.get("iterations", 0)), diag


def _solve_cvxpy(problem: SdpProblem, sc: _Scaled, solver: str, max_iters: int):
    import cvxpy as cp

    d = problem.dim
    q = cp.Variable((d, d), symmetric=True)
    cons = [q >> sc.pd_floor * np.eye(d)]
    for mat, margin in sc.lyap:
        cons.append(mat.T @ q + q @ mat << -margin * np.eye(d))
    for v, r in sc.lin:
        cons.append(v @ q @ v <= r)
    t = None
    if sc.w_hat is not None:
        t = cp.Variable((1, 1))
        w = sc.w_hat.reshape(1, -1)
        cons.append(cp.bmat([[t, w], [w.T, q]]) >> 0)
        prob = cp.Problem(cp.Minimize(t), cons)
    else:
        prob = cp.Problem(cp.Minimize(0), cons)
    opts = {"max_iter": max_iters} if solver == "CLARABEL" else {}
    try:
        prob.solve(solver=solver, **opts)
    except cp.error.SolverError as exc:
        return "error", None, None, 0, {"message": str(exc)}
    status = {
        "optimal": "optimal",
        "optimal_inaccurate": "unknown",
        "infeasible": "primal infeasible",
        "infeasible_inaccurate": "primal infeasible",
        "unbounded": "dual infeasible",
    }.get(prob.status, "unknown")
    qv = None if q.value is None else np.array(q.value)
    tv = None if (t is None or t.value is None) else float(np.asarray(t.value).reshape(-1)[0])
    iters = getattr(prob.solver_stats, "num_iters", None) or 0
    return status, qv, tv, int(iters), {"cvxpy_status": prob.status}


# ---------------------------------------------------------------- solve


def solve(
    problem: SdpProblem,
    backend: str = "cvxopt",
    symmetry: bool = True,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> LyapunovCertificate:
    """Solve ``problem`` and return a validated certificate.

    Raises :class:`Infeasible` when the backend proves infeasibility and
    :class:`NumericalFailure` when it stalls or its answer fails the
    independent eigenvalue check.
    """
    if problem.dim > cap:
        raise DimensionCapExceeded(f"program dimension {problem.dim} exceeds cap {cap}")
    max_iters = _max_iters()
    sc = _rescale(problem)
    for v, r in sc.lin:
        if not np.any(v) and r < 0:
            raise Infeasible("scalar constraint 0 <= r with r < 0", {"status": "primal infeasible"})

    invariant = symmetry and _is_invariant(problem)
    if backend == "cvxopt":
        basis = invariant_basis(*problem.tensor_shape) if invariant else symmetric_basis(problem.dim)
        base_name = "cvxopt" + ("/invariant" if invariant else "/full")
        # the Cholesky KKT path is fast on epigraph programs but its infeasibility
        # verdicts are unreliable; QR is slower and detects infeasibility cleanly.
        # Looser tolerances are a last resort: the validator still has the final word.
        plan = [("chol", 1.0), ("qr", 1.0)] if problem.objective == "epigraph" else [("qr", 1.0)]
        plan += [("qr", LOOSE_FACTOR), ("ldl", LOOSE_FACTOR)]
        attempts = [
            (
                f"{base_name}/{kkt}" + ("" if loose == 1.0 else "/loose"),
                lambda kkt=kkt, loose=loose: _solve_cvxopt(problem, sc, basis, max_iters, kkt, loose),
            )
            for kkt, loose in plan
        ]
    elif backend in ("clarabel", "scs"):
        attempts = [(f"cvxpy/{backend}", lambda: _solve_cvxpy(problem, sc, backend.upper(), max_iters))]
    else:
        raise ValueError(f"unknown backend {backend!r}")

    failure = None
    for backend_name, run in attempts:
        status, q, t, iters, extra = run()
        diag = {"status": status, "iterations": iters, "backend": backend_name, **extra}
        if status == "primal infeasible":
            raise Infeasible("semidefinite program is infeasible", diag)
        if q is None or status in ("error", "dual infeasible"):
            failure = NumericalFailure(f"backend {backend_name} failed with status {status!r}", diag)
            continue
        p = sc.q_scale * 0.5 * (q + q.T)
        residuals = certificate_residuals(p, problem.lyapunov, problem.eps_pd)
        if residuals["ok"]:
            break
        failure = NumericalFailure(
            f"backend {backend_name} returned a point that fails validation (status {status!r})",
            {**diag, "residuals": residuals},
        )
    else:
        raise failure

    objective = None
    if problem.schur_objective_vector is not None:
        if sc.w_hat is None:
            objective = 0.0
        else:
            objective = t * sc.w_norm2 / sc.q_scale
        residuals["objective_recomputed"] = weighted_inverse_form(p, problem.schur_objective_vector)
    report_status = "optimal" if status == "optimal" else "inaccurate"
    return LyapunovCertificate(
        level=problem.level,
        p_mat=p,
        alpha=problem.alpha,
        vertices=list(problem.lyapunov),
        objective_value=objective,
        solver_report=SolverReport(report_status, iters, backend_name, residuals),
    )


# ---------------------------------------------------------------- program builders


def _vertex_matrix(item):
    return np.asarray(item.a_mat if isinstance(item, HierarchyLevel) else item, dtype=float)


def _tensor_shape(dim: int, level: int):
    if level < 2:
        return None
    n = int(round(dim ** (1.0 / level)))
    return (n, level) if n**level == dim else None


def _pd_floor(v) -> float:
    vv = float(np.dot(v, v))
    return PD_FLOOR_REL / vv if vv > 0 else PD_FLOOR_REL


def build_impulse_program(
    levels: Sequence,
    b_lift,
    c_lift,
    *,
    level: int | None = None,
    alpha: float = 0.0,
    eps_stab: float = 0.0,
) -> SdpProblem:
    """``min c Q^{-1} c^T`` subject to ``b^T Q b <= 1`` and one Lyapunov LMI per vertex."""
    mats = [_vertex_matrix(item) for item in levels]
    if not mats:
        raise ValueError("need at least one vertex")
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise ValueError("all vertices must share one dimension")
    if level is None:
        level = levels[0].level if isinstance(levels[0], HierarchyLevel) else 1
    b_lift = np.asarray(b_lift, dtype=float).reshape(-1)
    c_lift = np.asarray(c_lift, dtype=float).reshape(-1)
    if b_lift.size != dim or c_lift.size != dim:
        raise ValueError(f"lifted b/c must have length {dim}")
    return SdpProblem(
        dim=dim,
        objective="epigraph",
        lyapunov=tuple(mats),
        linear_constraints=((b_lift, 1.0),),
        schur_objective_vector=c_lift,
        eps_stab=eps_stab,
        eps_pd=_pd_floor(b_lift),
        level=level,
        alpha=alpha,
        tensor_shape=_tensor_shape(dim, level),
    )


def inverse_lift(a, i: int) -> np.ndarray:
    """``kron_power(inv(a), i)``, refusing numerically singular ``a``."""
    a = np.asarray(a, dtype=float)
    if np.linalg.cond(a) > 1e12:
        raise SingularDynamics("state matrix is singular; the step response has no finite equilibrium")
    inv = np.linalg.solve(a, np.eye(a.shape[0]))
    out = inv
    for _ in range(i - 1):
        out = np.kron(inv, out)
    return out


def build_step_program(level: HierarchyLevel, a_inv_lift, b_lift, c_lift, *, eps_stab: float = 0.0) -> SdpProblem:
    """Impulse program with the input replaced by ``kron_power(A^{-1} b, i)``."""
    a_inv_lift = np.asarray(a_inv_lift, dtype=float)
    if a_inv_lift.shape != (level.dim, level.dim):
        raise ValueError(f"a_inv_lift must be {level.dim}x{level.dim}")
    return build_impulse_program(
        [level], a_inv_lift @ np.asarray(b_lift, dtype=float), c_lift, level=level.level, eps_stab=eps_stab
    )


def build_feasibility_program(vertices: Sequence, level: int, *, margin: float = FEASIBILITY_MARGIN, alpha: float = 0.0) -> SdpProblem:
    """Strict common-Lyapunov feasibility: ``Q >= I`` and ``M^T Q + Q M <= -margin*|M| I``.

    The cone of solutions is invariant under positive scaling, so the floor
    ``Q >= I`` only fixes the scale and any positive margin encodes strict
    feasibility.
    """
    mats = [_vertex_matrix(v) for v in vertices]
    dim = mats[0].shape[0]
    scale = max(float(np.linalg.norm(m, 2)) for m in mats)
    return SdpProblem(
        dim=dim,
        objective="feasibility",
        lyapunov=tuple(mats),
        eps_stab=margin * scale if scale > 0 else margin,
        eps_pd=1.0,
        level=level,
        alpha=alpha,
        tensor_shape=_tensor_shape(dim, level),
    )


# ---------------------------------------------------------------- vertices


def shift_vertices(sys: UncertainSystem, alpha: float):
    """``(A + Delta + alpha I, A - Delta + alpha I)``."""
    eye = np.eye(sys.n)
    return sys.a + sys.delta + alpha * eye, sys.a - sys.delta + alpha * eye


@dataclass(frozen=True, eq=False)
class DifferenceLift:
    """Augmented data whose impulse response is ``h(t) - c e^{At} b``."""

    a_plus: np.ndarray
    a_minus: np.ndarray
    b_bar: np.ndarray
    c_bar: np.ndarray
    level: int

    @property
    def base_dim(self) -> int:
        return self.a_plus.shape[0]


def build_difference_vertices(sys: UncertainSystem, i: int = 1) -> DifferenceLift:
    a_plus = sla.block_diag(sys.a + sys.delta, sys.a)
    a_minus = sla.block_diag(sys.a - sys.delta, sys.a)
    b_bar = lift_vector(np.concatenate([sys.b, sys.b]), i)
    c_bar = lift_vector(np.concatenate([sys.c, -sys.c]), i)
    return DifferenceLift(a_plus, a_minus, b_bar, c_bar, i)


def lifted_vertices(base_vertices: Sequence, i: int, cap: int = DEFAULT_DIMENSION_CAP) -> list:
    return [hierarchy_matrix(m, i, cap) for m in base_vertices]


# ---------------------------------------------------------------- pipelines


def _as_uncertain(sys) -> UncertainSystem:
    return sys if isinstance(sys, UncertainSystem) else UncertainSystem.from_lti(sys)


def _base_vertices(sys, alpha: float, difference: bool):
    if difference:
        lift = build_difference_vertices(_as_uncertain(sys), 1)
        eye = np.eye(lift.base_dim)
        return [lift.a_plus + alpha * eye, lift.a_minus + alpha * eye]
    if isinstance(sys, LtiSystem):
        return [sys.a + alpha * np.eye(sys.n)]
    if not np.any(sys.delta):
        return [sys.a + alpha * np.eye(sys.n)]
    return list(shift_vertices(sys, alpha))


def _reject_unstable(base_vertices, i: int) -> None:
    """Raise Infeasible when some vertex has an eigenvalue with positive real part.

    If ``M v = lam v`` with ``Re lam > 0`` then ``v* (M^T Q + Q M) v = 2 Re(lam) v* Q v > 0``
    for every ``Q > 0``, so no Lyapunov LMI can hold.  The lifted generator of level
    ``i`` has abscissa ``i`` times the base one, so checking the base vertices suffices.
    """
    for m in base_vertices:
        abscissa = float(np.max(np.linalg.eigvals(m).real))
        if abscissa > 1e-9 * max(1.0, float(np.linalg.norm(m, 2))):
            raise Infeasible(
                f"a vertex has spectral abscissa {abscissa:.6g} > 0; no level-{i} certificate exists",
                {"status": "primal infeasible", "spectral_abscissa": abscissa, "backend": "eigenvalue test"},
            )


def certify_impulse(sys, i: int, alpha: float = 0.0, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> LyapunovCertificate:
    """Best level-``i`` impulse certificate for an LTI or interval LTV system.

    With ``alpha != 0`` the certified vertices are shifted by ``alpha I`` and
    the resulting bound decays (or grows) like ``exp(-alpha t)``.
    """
    base = _base_vertices(sys, alpha, False)
    _reject_unstable(base, i)
    verts = lifted_vertices(base, i, cap)
    prob = build_impulse_program(verts, lift_vector(sys.b, i), lift_vector(sys.c, i), level=i, alpha=alpha)
    return solve(prob, cap=cap, **solve_kw)


def certify_step(sys: LtiSystem, i: int, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> LyapunovCertificate:
    a_inv = inverse_lift(sys.a, i)
    _reject_unstable([sys.a], i)
    level = HierarchyLevel(i, hierarchy_matrix(sys.a, i, cap), lift_vector(sys.b, i), lift_vector(sys.c, i))
    prob = build_step_program(level, a_inv, level.b_vec, level.c_vec)
    return solve(prob, cap=cap, **solve_kw)


def certify_difference(sys: UncertainSystem, i: int, alpha: float = 0.0, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> LyapunovCertificate:
    lift = build_difference_vertices(sys, i)
    base = _base_vertices(sys, alpha, True)
    _reject_unstable(base, i)
    verts = lifted_vertices(base, i, cap)
    prob = build_impulse_program(verts, lift.b_bar, lift.c_bar, level=i, alpha=alpha)
    return solve(prob, cap=cap, **solve_kw)


def is_alpha_feasible(sys, i: int, alpha: float, *, difference: bool = False, margin: float = FEASIBILITY_MARGIN, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> bool:
    """True iff a strict level-``i`` certificate for the ``alpha``-shifted vertices is found and validated."""
    verts = lifted_vertices(_base_vertices(sys, alpha, difference), i, cap)
    prob = build_feasibility_program(verts, i, margin=margin, alpha=alpha)
    try:
        solve(prob, cap=cap, **solve_kw)
    except Infeasible:
        return False
    except NumericalFailure as exc:
        log.info("alpha=%g: numerical failure treated as infeasible (%s)", alpha, exc)
        return False
    return True


def default_alpha_interval(sys, difference: bool = False) -> tuple:
    a = sys.a
    sigma = abs(float(np.max(np.linalg.eigvals(a).real)))
    if sigma == 0.0:
        sigma = 1.0
    return (-2.0 * sigma, 2.0 * sigma)


def max_alpha(
    sys,
    i: int,
    interval: tuple | None = None,
    tol: float = 1e-3,
    *,
    difference: bool = False,
    margin: float = FEASIBILITY_MARGIN,
    max_iter: int = 60,
    cap: int = DEFAULT_DIMENSION_CAP,
    lo_known_feasible: bool = False,
    **solve_kw,
) -> float:
    """Largest ``alpha`` (within ``tol``) for which the shifted vertices admit a level-``i`` certificate.

    Feasibility is monotone: if ``Q`` works for ``alpha`` then
    ``M - k I`` only adds ``-2k Q`` to each Lyapunov block, so every smaller
    ``alpha`` works too.  The upper end is clipped to minus the largest
    spectral abscissa among the vertices, beyond which no certificate exists.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = interval if interval is not None else default_alpha_interval(sys, difference)
    base = _base_vertices(sys, 0.0, difference)
    abscissa = max(float(np.max(np.linalg.eigvals(m).real)) for m in base)
    hi = min(hi, -abscissa)

    def feasible(alpha):
        return is_alpha_feasible(sys, i, alpha, difference=difference, margin=margin, cap=cap, **solve_kw)

    if lo >= hi or not (lo_known_feasible or feasible(lo)):
        raise NoFeasibleAlpha(f"no certificate at the lower end alpha={lo:g} (level {i})")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def frontier(sys, levels, tol: float = 1e-3, *, interval: tuple | None = None, difference: bool = False, **kw) -> dict:
    """``{i: max_alpha(sys, i)}`` for each level, warm-starting from divisor levels.

    If ``Q`` certifies level ``d`` then ``kron_power(Q, i // d)`` certifies level
    ``i`` for the same alpha and margin, so ``max_alpha`` of any divisor of ``i``
    is a feasible lower end for ``i``.
    """
    lo, hi = interval if interval is not None else default_alpha_interval(sys, difference)
    out = {}
    for i in sorted(set(int(k) for k in levels)):
        known = [a for d, a in out.items() if i % d == 0 and a > lo]
        start = max(known) if known else lo
        out[i] = max_alpha(sys, i, (start, hi), tol, difference=difference, lo_known_feasible=bool(known), **kw)
    return out

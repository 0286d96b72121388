"""Turn certificates into numeric bounds and time-dependent envelopes.

Every envelope has the form ``|y(t) - center(t)| <= magnitude * exp(-alpha (t - t_start))``
for ``t >= t_start``.  The magnitude always comes from the same formula,

    (w P^{-1} w^T)^(1/2i) * (v^T P v)^(1/2i),

with ``w`` the lifted output row and ``v`` the lifted initial state.  The
envelope kinds differ in the choice of ``v`` and in what the certificate covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import (
    DifferenceLift,
    LyapunovCertificate,
    build_difference_vertices,
    certify_difference,
    certify_impulse,
    certify_step,
    weighted_inverse_form,
)
from .errors import SingularDynamics
from .kron import DEFAULT_DIMENSION_CAP, HierarchyLevel, build_level, lift_vector
from .systems import LtiSystem, UncertainSystem

KINDS = ("constant_impulse", "step", "exponential", "difference", "tail")
CENTERS = ("zero", "constant", "nominal_impulse")


@dataclass(eq=False)
class Envelope:
    kind: str
    magnitude: float
    alpha: float = 0.0
    t_start: float = 0.0
    center_kind: str = "zero"
    center_value: float = 0.0
    nominal: LtiSystem | None = None
    certificate: LyapunovCertificate | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.center_kind not in CENTERS:
            raise ValueError(f"unknown center kind {self.center_kind!r}")
        if not (self.magnitude >= 0):
            raise ValueError(f"envelope magnitude must be >= 0, got {self.magnitude}")
        if self.kind == "difference" and (self.center_kind != "nominal_impulse" or self.nominal is None):
            raise ValueError("a difference envelope must be centered on the nominal impulse response")
        if self.center_kind == "nominal_impulse" and self.nominal is None:
            raise ValueError("nominal_impulse center needs the nominal system")

    def radius(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.alpha == 0.0:
            return np.full(t.shape, self.magnitude)
        if self.magnitude == 0.0:
            return np.zeros(t.shape)
        return self.magnitude * np.exp(-self.alpha * (t - self.t_start))

    def center(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.center_kind == "zero":
            return np.zeros(t.shape)
        if self.center_kind == "constant":
            return np.full(t.shape, self.center_value)
        from .sim import impulse_response

        flat = t.reshape(-1)
        return impulse_response(self.nominal, flat).outputs.reshape(t.shape)

    def lower(self, t) -> np.ndarray:
        return self.center(t) - self.radius(t)

    def upper(self, t) -> np.ndarray:
        return self.center(t) + self.radius(t)


def lifted_bound(p, v, w, i: int) -> float:
    """``(w P^{-1} w^T)^(1/2i) (v^T P v)^(1/2i)`` evaluated in log space."""
    v = np.asarray(v, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    p = 0.5 * (np.asarray(p, dtype=float) + np.asarray(p, dtype=float).T)
    out_form = weighted_inverse_form(p, w)
    in_form = float(v @ p @ v)
    if out_form <= 0.0 or in_form <= 0.0:
        return 0.0
    return math.exp((math.log(out_form) + math.log(in_form)) / (2 * i))


def _check_level(cert: LyapunovCertificate, level: HierarchyLevel):
    if cert.level != level.level:
        raise ValueError(f"certificate is for level {cert.level}, hierarchy level is {level.level}")
    if cert.p_mat.shape != (level.dim, level.dim):
        raise ValueError(f"certificate dimension {cert.p_mat.shape[0]} != lifted dimension {level.dim}")


def _check_vertices(cert: LyapunovCertificate, nominal_lifted: np.ndarray, what: str):
    # the two shifted vertices average to the shifted nominal generator (the lift is linear)
    i = cert.level
    expected = nominal_lifted + i * cert.alpha * np.eye(nominal_lifted.shape[0])
    mean = np.mean(np.stack(cert.vertices), axis=0)
    scale = max(1.0, float(np.max(np.abs(expected))))
    if np.max(np.abs(mean - expected)) > 1e-9 * scale:
        raise ValueError(f"certificate vertices do not match the {what} shifted by alpha={cert.alpha:g}")


def impulse_bound(cert: LyapunovCertificate, level: HierarchyLevel) -> Envelope:
    """Constant bound ``|h(t)| <= magnitude`` for all ``t >= 0``."""
    _check_level(cert, level)
    _check_vertices(cert, level.a_mat, "nominal generator")
    if cert.alpha < 0:
        raise ValueError("a certificate with alpha < 0 does not give a constant bound")
    mag = lifted_bound(cert.p_mat, level.b_vec, level.c_vec, level.level)
    return Envelope("constant_impulse", mag, 0.0, 0.0, "zero", 0.0, None, cert)


def step_bound(cert: LyapunovCertificate, level: HierarchyLevel, sys: LtiSystem) -> Envelope:
    """``|s(t) + c A^{-1} b| <= magnitude`` for all ``t >= 0``."""
    _check_level(cert, level)
    _check_vertices(cert, level.a_mat, "nominal generator")
    if np.linalg.cond(sys.a) > 1e12:
        raise SingularDynamics("step bound needs an invertible state matrix")
    a_inv_b = np.linalg.solve(sys.a, sys.b)
    mag = lifted_bound(cert.p_mat, lift_vector(a_inv_b, level.level), level.c_vec, level.level)
    center = -float(sys.c @ a_inv_b)
    return Envelope("step", mag, 0.0, 0.0, "constant", center, None, cert)


def exponential_impulse_envelope(cert: LyapunovCertificate, level: HierarchyLevel) -> Envelope:
    """``|h(t)| <= exp(-alpha t) * magnitude`` from a certificate of the alpha-shifted vertices.

    ``e^{alpha t} phi(t)`` solves the shifted system, whose impulse response
    the certificate bounds by ``magnitude``.
    """
    _check_level(cert, level)
    _check_vertices(cert, level.a_mat, "nominal generator")
    mag = lifted_bound(cert.p_mat, level.b_vec, level.c_vec, level.level)
    return Envelope("exponential", mag, float(cert.alpha), 0.0, "zero", 0.0, None, cert)


def difference_envelope(cert: LyapunovCertificate, lift: DifferenceLift, sys: UncertainSystem) -> Envelope:
    """``|h(t) - c e^{At} b| <= exp(-alpha t) * magnitude``."""
    if cert.level != lift.level:
        raise ValueError(f"certificate is for level {cert.level}, augmented data for level {lift.level}")
    from .kron import hierarchy_matrix

    nominal = hierarchy_matrix(0.5 * (lift.a_plus + lift.a_minus), lift.level)
    if cert.p_mat.shape != nominal.shape:
        raise ValueError("certificate dimension does not match the augmented lift")
    _check_vertices(cert, nominal, "augmented generator")
    mag = lifted_bound(cert.p_mat, lift.b_bar, lift.c_bar, lift.level)
    return Envelope("difference", mag, float(cert.alpha), 0.0, "nominal_impulse", 0.0, sys.nominal, cert)


def tail_bound(
    cert: LyapunovCertificate,
    level: HierarchyLevel,
    state_at_t0,
    t0: float,
    *,
    center: float = 0.0,
) -> Envelope:
    """Restart the bound at ``t0`` from the simulated state ``x(t0)``.

    For step responses pass the shifted state ``x(t0) + A^{-1} b`` and
    ``center = -c A^{-1} b``.
    """
    if t0 < 0:
        raise ValueError("t0 must be non-negative")
    _check_level(cert, level)
    _check_vertices(cert, level.a_mat, "nominal generator")
    v = lift_vector(state_at_t0, level.level)
    mag = lifted_bound(cert.p_mat, v, level.c_vec, level.level)
    center_kind = "zero" if center == 0.0 else "constant"
    return Envelope("tail", mag, float(cert.alpha), float(t0), center_kind, float(center), None, cert)


# ---------------------------------------------------------------- one-call pipelines


def certified_impulse_envelope(sys, i: int, alpha: float = 0.0, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> Envelope:
    """Solve and bound in one call; constant when ``alpha == 0``, exponential otherwise."""
    cert = certify_impulse(sys, i, alpha, cap=cap, **solve_kw)
    level = build_level(sys.nominal if isinstance(sys, UncertainSystem) else sys, i, cap)
    if alpha == 0.0:
        return impulse_bound(cert, level)
    return exponential_impulse_envelope(cert, level)


def certified_step_envelope(sys: LtiSystem, i: int, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> Envelope:
    cert = certify_step(sys, i, cap=cap, **solve_kw)
    return step_bound(cert, build_level(sys, i, cap), sys)


def certified_difference_envelope(sys: UncertainSystem, i: int, alpha: float = 0.0, *, cap: int = DEFAULT_DIMENSION_CAP, **solve_kw) -> Envelope:
    cert = certify_difference(sys, i, alpha, cap=cap, **solve_kw)
    return difference_envelope(cert, build_difference_vertices(sys, i), sys)

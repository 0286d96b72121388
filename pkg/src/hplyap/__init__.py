"""Certified impulse- and step-response bounds from homogeneous polynomial Lyapunov functions."""

from .bounds import (
    Envelope,
    certified_difference_envelope,
    certified_impulse_envelope,
    certified_step_envelope,
    difference_envelope,
    exponential_impulse_envelope,
    impulse_bound,
    step_bound,
    tail_bound,
)
from .certificates import (
    LyapunovCertificate,
    SdpProblem,
    certify_difference,
    certify_impulse,
    certify_step,
    max_alpha,
    solve,
)
from .errors import (
    DimensionCapExceeded,
    HplyapError,
    Infeasible,
    NoFeasibleAlpha,
    NumericalFailure,
    SingularDynamics,
    SystemFileError,
)
from .io import parse_system, write_system
from .kron import build_level, hierarchy_matrix, kron_power, lift_vector
from .sim import check_containment, impulse_response, ltv_impulse_samples, step_response
from .systems import LtiSystem, UncertainSystem, stiff_system

__version__ = "0.1.0"

__all__ = [
    "DimensionCapExceeded",
    "Envelope",
    "HplyapError",
    "Infeasible",
    "LtiSystem",
    "LyapunovCertificate",
    "NoFeasibleAlpha",
    "NumericalFailure",
    "SdpProblem",
    "SingularDynamics",
    "SystemFileError",
    "UncertainSystem",
    "build_level",
    "certified_difference_envelope",
    "certified_impulse_envelope",
    "certified_step_envelope",
    "certify_difference",
    "certify_impulse",
    "certify_step",
    "check_containment",
    "difference_envelope",
    "exponential_impulse_envelope",
    "hierarchy_matrix",
    "impulse_bound",
    "impulse_response",
    "kron_power",
    "lift_vector",
    "ltv_impulse_samples",
    "max_alpha",
    "parse_system",
    "solve",
    "step_bound",
    "step_response",
    "stiff_system",
    "tail_bound",
    "write_system",
]

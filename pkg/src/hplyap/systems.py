"""Single-input single-output system descriptions.

``LtiSystem`` is the triple (A, b, c) of ``x' = Ax + bu, y = cx``.
``UncertainSystem`` adds a direction ``delta`` so that the state matrix may
wander over ``{A + lam * delta : lam in [-1, 1]}`` in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_matrix(value, name):
    arr = np.array(value, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _as_vector(value, n, name):
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = _as_matrix(self.a, "A")
        n = a.shape[0]
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _as_vector(self.b, n, "b"))
        object.__setattr__(self, "c", _as_vector(self.c, n, "c"))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def spectral_abscissa(self) -> float:
        return float(np.max(np.linalg.eigvals(self.a).real))


@dataclass(frozen=True, eq=False)
class UncertainSystem:
    a: np.ndarray
    delta: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        a = _as_matrix(self.a, "A")
        n = a.shape[0]
        delta = _as_matrix(self.delta, "Delta")
        if delta.shape != a.shape:
            raise ValueError(f"Delta must have shape {a.shape}, got {delta.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "b", _as_vector(self.b, n, "b"))
        object.__setattr__(self, "c", _as_vector(self.c, n, "c"))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def nominal(self) -> LtiSystem:
        return LtiSystem(self.a, self.b, self.c, self.name)

    def frozen(self, lam: float) -> LtiSystem:
        """The LTI member with ``A + lam * delta``."""
        return LtiSystem(self.a + lam * self.delta, self.b, self.c, self.name)

    @classmethod
    def from_lti(cls, sys: LtiSystem) -> "UncertainSystem":
        return cls(sys.a, np.zeros_like(sys.a), sys.b, sys.c, sys.name)


def stiff_system(n: int, m: float, name: str | None = None) -> LtiSystem:
    """Diagonal stiff family: ``A = diag(-m**k)``, ``b = 1``, ``c = (1, -2, 2, -2, ...)``.

    Its impulse response never exceeds 1 in magnitude while the best
    quadratic bound approaches ``2n - 1`` as ``m`` grows.
    """
    a = np.diag([-(float(m) ** k) for k in range(n)])
    b = np.ones(n)
    c = np.array([1.0] + [(-1.0) ** (k + 2) * 2.0 for k in range(1, n)])
    return LtiSystem(a, b, c, name or f"stiff_n{n}_M{m:g}")

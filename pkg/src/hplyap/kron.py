"""Kronecker powers and the lifted hierarchy of LTI generators.

If ``x(t)`` solves ``x' = A x`` then ``kron_power(x(t), i)`` solves
``xi' = hierarchy_matrix(A, i) @ xi``.  A quadratic Lyapunov function for the
lifted system is a homogeneous polynomial Lyapunov function of degree ``2i``
for the original one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionCapExceeded
from .systems import LtiSystem

DEFAULT_DIMENSION_CAP = 4096


def kron_product(a, b) -> np.ndarray:
    """Kronecker product; block ``(r, s)`` of the result is ``a[r, s] * b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("kron_product operands must be finite")
    return np.kron(a, b)


def _check_level(i):
    if int(i) != i or i < 1:
        raise ValueError(f"hierarchy level must be an integer >= 1, got {i!r}")
    return int(i)


def check_dimension(n: int, i: int, cap: int = DEFAULT_DIMENSION_CAP) -> int:
    """Return ``n**i``, raising if it exceeds ``cap``."""
    dim = n ** _check_level(i)
    if dim > cap:
        raise DimensionCapExceeded(
            f"level {i} of a {n}-state system lifts to dimension {dim} > cap {cap}"
        )
    return dim


def kron_power(a, i: int) -> np.ndarray:
    """``a`` Kronecker-multiplied with itself ``i`` times, ``a (x) kron_power(a, i - 1)``."""
    i = _check_level(i)
    a = np.asarray(a, dtype=float)
    out = a
    for _ in range(i - 1):
        out = np.kron(a, out)
    return out


def lift_vector(x, i: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    return kron_power(x, i)


@lru_cache(maxsize=64)
def _hierarchy_chain(shape, raw: bytes, i: int):
    a = np.frombuffer(raw, dtype=float).reshape(shape)
    n = shape[0]
    levels = [a.copy()]
    for k in range(2, i + 1):
        prev = levels[-1]
        levels.append(np.kron(np.eye(n), prev) + np.kron(a, np.eye(n ** (k - 1))))
    for m in levels:
        m.setflags(write=False)
    return tuple(levels)


def hierarchy_matrices(a, i: int, cap: int = DEFAULT_DIMENSION_CAP) -> tuple:
    """All generators of levels ``1..i``, built bottom-up and memoized."""
    a = np.ascontiguousarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"hierarchy_matrix needs a square matrix, got shape {a.shape}")
    check_dimension(a.shape[0], i, cap)
    return _hierarchy_chain(a.shape, a.tobytes(), int(i))


def hierarchy_matrix(a, i: int, cap: int = DEFAULT_DIMENSION_CAP) -> np.ndarray:
    """Generator of level ``i``: ``I (x) A_{i-1} + A (x) I``, with level 1 equal to ``a``.

    The map ``a -> hierarchy_matrix(a, i)`` is linear, which is what lets a
    certificate at two vertex matrices cover the whole segment between them.
    """
    return np.array(hierarchy_matrices(a, i, cap)[-1])


@dataclass(frozen=True, eq=False)
class HierarchyLevel:
    level: int
    a_mat: np.ndarray
    b_vec: np.ndarray
    c_vec: np.ndarray

    @property
    def dim(self) -> int:
        return self.a_mat.shape[0]


def build_level(sys: LtiSystem, i: int, cap: int = DEFAULT_DIMENSION_CAP) -> HierarchyLevel:
    i = _check_level(i)
    return HierarchyLevel(
        level=i,
        a_mat=hierarchy_matrix(sys.a, i, cap),
        b_vec=lift_vector(sys.b, i),
        c_vec=lift_vector(sys.c, i),
    )


def tensor_permutation(n: int, i: int, perm) -> np.ndarray:
    """Index map permuting the ``i`` tensor factors of ``(R^n)^{(x) i}``.

    Returns ``idx`` such that ``v[idx]`` is ``v`` with its factors reordered
    by ``perm``.
    """
    grid = np.arange(n**i).reshape((n,) * i)
    return np.transpose(grid, perm).reshape(-1)

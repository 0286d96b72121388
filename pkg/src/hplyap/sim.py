"""Reference simulations used to check certified envelopes.

LTI responses are evaluated in closed form through the matrix exponential.
LTV trajectories ``phi' = (A + lam(t) Delta) phi`` use a classical fixed-step
RK4 scheme with ``lam`` piecewise constant between switching instants that
lie on the output grid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import SingularDynamics
from .systems import LtiSystem, UncertainSystem

RK4_STABILITY_RADIUS = 2.5


def expm(a, t: float = 1.0) -> np.ndarray:
    return sla.expm(np.asarray(a, dtype=float) * float(t))


def make_grid(t_final: float = 10.0, dt: float = 1e-3, t_start: float = 0.0) -> np.ndarray:
    if not (dt > 0 and t_final > t_start):
        raise ValueError(f"invalid grid: t_start={t_start}, t_final={t_final}, dt={dt}")
    count = int(round((t_final - t_start) / dt))
    if count < 1 or not math.isclose(t_start + count * dt, t_final, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"t_final - t_start = {t_final - t_start} is not a multiple of dt = {dt}")
    return t_start + dt * np.arange(count + 1)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size < 1 or not np.all(np.isfinite(grid)):
        raise ValueError("grid must be a non-empty finite array")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


@dataclass
class TrajectorySample:
    times: np.ndarray
    outputs: np.ndarray
    states: np.ndarray | None = None
    signal: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)
        if self.outputs.shape != self.times.shape:
            raise ValueError("outputs must match times")
        if self.states is not None and len(self.states) != len(self.times):
            raise ValueError("states must match times")


@dataclass(frozen=True)
class SwitchingSignal:
    """Admissible ``lam(t)`` in ``[-1, 1]``.

    ``kind`` is ``"constant"`` (``value`` forever), ``"random"`` (a fresh
    uniform draw every ``dwell`` time units) or ``"bang_bang"`` (a random
    sign every ``dwell`` time units).
    """

    kind: str = "constant"
    seed: int = 0
    dwell: float = 0.2
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "random", "bang_bang"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "constant" and not -1.0 <= self.value <= 1.0:
            raise ValueError("constant signal value must lie in [-1, 1]")
        if self.kind != "constant" and not self.dwell > 0:
            raise ValueError("dwell must be positive")

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        return {"kind": self.kind, "seed": self.seed, "dwell": self.dwell}

    def segment_values(self, count: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(count, float(self.value))
        rng = np.random.default_rng(self.seed)
        if self.kind == "random":
            return rng.uniform(-1.0, 1.0, size=count)
        return rng.choice([-1.0, 1.0], size=count)

    def on_intervals(self, grid: np.ndarray) -> np.ndarray:
        """Value held on each grid interval ``[grid[k], grid[k+1])``."""
        starts = grid[:-1] - grid[0]
        if self.kind == "constant":
            return np.full(starts.size, float(self.value))
        span = grid[-1] - grid[0]
        nseg = int(math.floor(span / self.dwell + 1e-9)) + 1
        switches = self.dwell * np.arange(1, nseg)
        switches = switches[switches < span - 1e-12]
        if switches.size:
            pos = np.searchsorted(starts, switches - 1e-9 * self.dwell)
            hit = pos < starts.size
            ok = np.zeros(switches.shape, dtype=bool)
            ok[hit] = np.isclose(starts[pos[hit]], switches[hit], rtol=0, atol=1e-9 * max(1.0, span))
            if not np.all(ok):
                raise ValueError(
                    f"switching instants (dwell {self.dwell}) do not fall on the output grid"
                )
        seg = np.floor(starts / self.dwell + 1e-9).astype(int)
        return self.segment_values(nseg)[seg]


def default_signals(seed: int = 0, count: int = 3, dwell: float = 0.2) -> list:
    """The two frozen extremes plus one bang-bang signal and ``count`` random signals."""
    out = [
        SwitchingSignal("constant", value=1.0),
        SwitchingSignal("constant", value=-1.0),
        SwitchingSignal("bang_bang", seed=seed, dwell=dwell),
    ]
    out += [SwitchingSignal("random", seed=seed + k, dwell=dwell) for k in range(count)]
    return out


def impulse_response(sys: LtiSystem, grid, x0=None) -> TrajectorySample:
    """``y(t) = c e^{At} x0`` with ``x0 = b`` by default."""
    grid = _check_grid(grid)
    x0 = sys.b if x0 is None else np.asarray(x0, dtype=float)
    props = sla.expm(sys.a[None, :, :] * grid[:, None, None])
    states = props @ x0
    return TrajectorySample(grid, states @ sys.c, states, {"kind": "lti"})


def step_response(sys: LtiSystem, grid) -> TrajectorySample:
    """``s(t) = c A^{-1} (e^{At} - I) b``."""
    grid = _check_grid(grid)
    if np.linalg.cond(sys.a) > 1e12:
        raise SingularDynamics("step response needs an invertible state matrix")
    a_inv_b = np.linalg.solve(sys.a, sys.b)
    props = sla.expm(sys.a[None, :, :] * grid[:, None, None])
    states = props @ a_inv_b - a_inv_b
    return TrajectorySample(grid, states @ sys.c, states, {"kind": "step"})


def _rk4_propagator(a: np.ndarray, h: float, substeps: int) -> np.ndarray:
    # one RK4 step of a linear constant system is the 4th-order Taylor polynomial of e^{hA}
    ha = h * a
    eye = np.eye(a.shape[0])
    step = eye + ha @ (eye + ha @ (eye / 2 + ha @ (eye / 6 + ha / 24)))
    return np.linalg.matrix_power(step, substeps)


def rk4_substeps(sys: UncertainSystem, dt: float, dwell: float = math.inf) -> int:
    """Substeps per grid interval so the step is at most ``min(dwell, stability step) / 4``."""
    radius = max(
        float(np.max(np.abs(np.linalg.eigvals(sys.a + s * sys.delta)))) for s in (-1.0, 0.0, 1.0)
    )
    h_stab = RK4_STABILITY_RADIUS / radius if radius > 0 else math.inf
    h_max = min(dwell, h_stab) / 4.0
    return max(1, int(math.ceil(dt / h_max - 1e-12))) if math.isfinite(h_max) else 1


def ltv_trajectory(sys: UncertainSystem, signal: SwitchingSignal, grid, x0=None, substeps: int | None = None) -> TrajectorySample:
    grid = _check_grid(grid)
    x0 = sys.b if x0 is None else np.asarray(x0, dtype=float)
    states = np.empty((grid.size, sys.n))
    states[0] = x0
    if grid.size > 1:
        lam = signal.on_intervals(grid)
        dts = np.diff(grid)
        dwell = signal.dwell if signal.kind != "constant" else math.inf
        cache = {}
        x = np.array(x0, dtype=float)
        for k in range(dts.size):
            key = (lam[k], dts[k])
            prop = cache.get(key)
            if prop is None:
                sub = substeps or rk4_substeps(sys, dts[k], dwell)
                prop = _rk4_propagator(sys.a + lam[k] * sys.delta, dts[k] / sub, sub)
                cache[key] = prop
            x = prop @ x
            states[k + 1] = x
    return TrajectorySample(grid, states @ sys.c, states, signal.describe())


def ltv_impulse_samples(sys: UncertainSystem, signals, grid) -> list:
    return [ltv_trajectory(sys, s, grid) for s in signals]


@dataclass
class ContainmentReport:
    max_violation: float
    argmax_time: float
    sample_index: int
    tolerance: float
    min_slack: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def containment_tolerance(magnitude: float) -> float:
    return 1e-6 * max(1.0, float(magnitude))


def check_containment(env, samples) -> ContainmentReport:
    """Largest ``|y - center| - radius`` over all samples at grid points inside the envelope's validity."""
    best = (-math.inf, math.nan, -1)
    min_slack = math.inf
    for idx, sample in enumerate(samples):
        mask = sample.times >= env.t_start - 1e-12
        if not np.any(mask):
            continue
        t = sample.times[mask]
        gap = np.abs(sample.outputs[mask] - env.center(t)) - env.radius(t)
        k = int(np.argmax(gap))
        if gap[k] > best[0]:
            best = (float(gap[k]), float(t[k]), idx)
        min_slack = min(min_slack, float(-np.max(gap)))
    return ContainmentReport(best[0], best[1], best[2], containment_tolerance(env.magnitude), min_slack)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.12g}" for v in row])
    return buf.getvalue()


def write_trajectory_csv(path, sample: TrajectorySample) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, _csv_text(["t", "value"], zip(sample.times, sample.outputs)))


def write_envelope_csv(path, env, grid) -> None:
    grid = _check_grid(grid)
    grid = grid[grid >= env.t_start - 1e-12]
    from .io import atomic_write_text

    atomic_write_text(path, _csv_text(["t", "lower", "upper"], zip(grid, env.lower(grid), env.upper(grid))))

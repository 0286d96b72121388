"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 infeasible, 3 numerical failure,
4 containment failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds, certificates
from .errors import HplyapError, Infeasible, NoFeasibleAlpha, NumericalFailure
from .io import (
    atomic_write_text,
    certificate_json,
    certificate_ref,
    dumps,
    envelope_to_dict,
    parse_system,
)
from .kron import build_level
from .sim import (
    SwitchingSignal,
    check_containment,
    default_signals,
    impulse_response,
    ltv_impulse_samples,
    ltv_trajectory,
    make_grid,
    step_response,
    write_envelope_csv,
    write_trajectory_csv,
)
from .systems import LtiSystem, UncertainSystem

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
EXIT_FAIL = 4

log = logging.getLogger("hplyap")


class InputError(HplyapError):
    pass


def fmt(x: float) -> str:
    return f"{x:.9g}"


# ---------------------------------------------------------------- helpers


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(args) -> np.ndarray:
    return make_grid(args.t_final, args.dt)


def _lti(system) -> LtiSystem:
    return system.nominal if isinstance(system, UncertainSystem) else system


def _is_ltv(system) -> bool:
    return isinstance(system, UncertainSystem) and bool(np.any(system.delta))


def _write_envelope(out: Path, stem: str, env, grid, write_cert: bool = True) -> None:
    ref = None
    if env.certificate is not None:
        ref = certificate_ref(env.certificate)
        if write_cert:
            atomic_write_text(out / f"{stem}_certificate.json", certificate_json(env.certificate))
    atomic_write_text(out / f"{stem}_envelope.json", dumps(envelope_to_dict(env, ref)))
    write_envelope_csv(out / f"{stem}_envelope.csv", env, grid)


def _samples(system, kind: str, grid, seed: int):
    if _is_ltv(system):
        if kind != "impulse":
            raise InputError("only impulse responses are simulated for uncertain systems")
        return ltv_impulse_samples(system, default_signals(seed), grid)
    lti = _lti(system)
    return [impulse_response(lti, grid) if kind == "impulse" else step_response(lti, grid)]


# ---------------------------------------------------------------- commands


def cmd_bound(args) -> int:
    system = parse_system(args.system)
    out = _out_dir(args)
    grid = _grid(args)
    if args.t0 < 0:
        raise InputError("--t0 must be non-negative")
    if args.t0 > 0 and not args.state_from_sim:
        raise InputError("a restart time --t0 > 0 needs --state-from-sim")
    if args.kind == "step":
        if _is_ltv(system):
            raise InputError("step bounds are only available for LTI systems")
        if args.alpha != 0:
            raise InputError("step bounds do not take --alpha")
        lti = _lti(system)
        env = bounds.certified_step_envelope(lti, args.level)
    else:
        env = bounds.certified_impulse_envelope(system, args.level, args.alpha)
    print(fmt(env.magnitude))
    _write_envelope(out, args.kind, env, grid)

    if args.state_from_sim:
        if _is_ltv(system):
            raise InputError("--state-from-sim needs an LTI system")
        lti = _lti(system)
        level = build_level(lti, args.level)
        cert = env.certificate
        if args.kind == "impulse":
            state = impulse_response(lti, [args.t0]).states[0]
            tail = bounds.tail_bound(cert, level, state, args.t0)
        else:
            a_inv_b = np.linalg.solve(lti.a, lti.b)
            state = step_response(lti, [args.t0]).states[0] + a_inv_b
            tail = bounds.tail_bound(cert, level, state, args.t0, center=env.center_value)
        print(f"tail t0={fmt(args.t0)}: {fmt(tail.magnitude)}")
        _write_envelope(out, f"{args.kind}_tail", tail, grid[grid >= args.t0 - 1e-12], write_cert=False)
    return EXIT_OK


def cmd_envelope(args) -> int:
    system = parse_system(args.system)
    if not isinstance(system, UncertainSystem):
        raise InputError("envelope requires Delta")
    out = _out_dir(args)
    grid = _grid(args)
    if args.difference:
        env = bounds.certified_difference_envelope(system, args.level, args.alpha)
        stem = "difference"
        write_trajectory_csv(out / "nominal.csv", impulse_response(system.nominal, grid))
    else:
        env = bounds.certified_impulse_envelope(system, args.level, args.alpha)
        stem = env.kind
    print(fmt(env.magnitude))
    _write_envelope(out, stem, env, grid)
    return EXIT_OK


def cmd_max_alpha(args) -> int:
    system = parse_system(args.system)
    interval = None
    if args.lo is not None or args.hi is not None:
        lo, hi = certificates.default_alpha_interval(system, args.difference)
        interval = (lo if args.lo is None else args.lo, hi if args.hi is None else args.hi)
    # divisor levels are cheap and give a proven-feasible lower end for the requested one
    divisors = [d for d in range(1, args.level + 1) if args.level % d == 0]
    alpha = certificates.frontier(system, divisors, args.tol, interval=interval, difference=args.difference)[args.level]
    print(fmt(alpha))
    out = _out_dir(args)
    at = alpha - args.tol
    if args.difference:
        cert = certificates.certify_difference(system, args.level, at)
    else:
        cert = certificates.certify_impulse(system, args.level, at)
    atomic_write_text(out / "max_alpha_certificate.json", certificate_json(cert))
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = parse_system(args.system)
    out = _out_dir(args)
    grid = _grid(args)
    if args.kind == "ltv":
        if not isinstance(system, UncertainSystem):
            raise InputError("ltv simulation requires Delta")
        seeds = args.seeds if args.seeds is not None else [args.seed + k for k in range(args.count)]
        for s in seeds:
            sig = SwitchingSignal(args.signal, seed=s, dwell=args.dwell)
            path = out / f"ltv_seed{s}.csv"
            write_trajectory_csv(path, ltv_trajectory(system, sig, grid))
            print(path)
        return EXIT_OK
    lti = _lti(system)
    sample = impulse_response(lti, grid) if args.kind == "impulse" else step_response(lti, grid)
    path = out / f"{args.kind}.csv"
    write_trajectory_csv(path, sample)
    print(path)
    return EXIT_OK


def cmd_check(args) -> int:
    system = parse_system(args.system)
    grid = _grid(args)
    if args.difference and not isinstance(system, UncertainSystem):
        raise InputError("--difference requires Delta")
    samples = _samples(system, "impulse", grid, args.seed)
    rows, status = [], EXIT_OK
    print(f"{'level':>5}  {'h_bar':>16}  {'max_slack':>16}  status")
    for i in args.levels:
        if args.difference:
            env = bounds.certified_difference_envelope(system, i, args.alpha)
        else:
            env = bounds.certified_impulse_envelope(system, i, args.alpha)
        rep = check_containment(env, samples)
        verdict = "PASS" if rep.passed else "FAIL"
        print(f"{i:>5}  {fmt(env.magnitude):>16}  {fmt(rep.min_slack):>16}  {verdict}")
        if not rep.passed:
            status = EXIT_FAIL
            print(
                f"  level {i}: violation {rep.max_violation:.3e} at t={fmt(rep.argmax_time)} "
                f"(sample {rep.sample_index})",
                file=sys.stderr,
            )
        rows.append(
            {
                "level": i,
                "magnitude": env.magnitude,
                "alpha": env.alpha,
                "max_violation": rep.max_violation,
                "argmax_time": rep.argmax_time,
                "min_slack": rep.min_slack,
                "status": verdict,
            }
        )
    if args.out is not None:
        atomic_write_text(_out_dir(args) / "check_report.json", dumps({"system": system.name, "levels": rows}))
    return status


# ---------------------------------------------------------------- parser


def _levels(text: str) -> list:
    try:
        levels = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level list {text!r}") from None
    if not levels or any(k < 1 for k in levels):
        raise argparse.ArgumentTypeError("levels must be positive integers")
    return levels


def _positive_int(text: str) -> int:
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", required=True, help="system JSON file or bundled name (e.g. example1)")
    common.add_argument("--level", type=_positive_int, default=1, help="hierarchy level i (default 1)")
    common.add_argument("--alpha", type=float, default=0.0, help="exponential rate (default 0)")
    common.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance (default 1e-3)")
    common.add_argument("--t-final", type=float, default=10.0, help="simulation horizon (default 10)")
    common.add_argument("--dt", type=float, default=1e-3, help="grid spacing (default 1e-3)")
    common.add_argument("--seed", type=int, default=0, help="base seed for switching signals (default 0)")
    common.add_argument("--out", default=None, help="directory for JSON/CSV artifacts (default: current directory)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hplyap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="impulse or step bound for one level")
    p.add_argument("kind", choices=("impulse", "step"))
    p.add_argument("--t0", type=float, default=0.0, help="restart time for a tail bound")
    p.add_argument("--state-from-sim", action="store_true", help="restart from the simulated state x(t0)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("envelope", parents=[common], help="envelope for an uncertain system")
    p.add_argument("--difference", action="store_true", help="center the envelope on the nominal response")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("max-alpha", parents=[common], help="bisect the largest certifiable rate")
    p.add_argument("--difference", action="store_true")
    p.add_argument("--lo", type=float, default=None, help="lower end of the search interval")
    p.add_argument("--hi", type=float, default=None, help="upper end of the search interval")
    p.set_defaults(func=cmd_max_alpha)

    p = sub.add_parser("simulate", parents=[common], help="write simulated trajectories as CSV")
    p.add_argument("kind", choices=("impulse", "step", "ltv"))
    p.add_argument("--seeds", type=lambda s: [int(t) for t in s.split(",")], default=None, help="comma-separated seeds")
    p.add_argument("--count", type=_positive_int, default=3, help="number of seeds when --seeds is absent")
    p.add_argument("--signal", choices=("random", "bang_bang"), default="random")
    p.add_argument("--dwell", type=float, default=0.2)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", parents=[common], help="certify then verify against simulations")
    p.add_argument("--levels", type=_levels, default=None, help="comma-separated levels (default: --level)")
    p.add_argument("--difference", action="store_true")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "check" and args.levels is None:
        args.levels = [args.level]
    if args.out is None and args.command != "check":
        args.out = "."
    try:
        return args.func(args)
    except (Infeasible, NoFeasibleAlpha) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HplyapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

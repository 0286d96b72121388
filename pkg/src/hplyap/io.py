"""System files, certificate/envelope JSON documents and atomic file output."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SystemFileError
from .systems import LtiSystem, UncertainSystem


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x}")
        # shortest repr that round-trips exactly (never more than 17 significant digits)
        return repr(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with insertion-ordered keys and exactly round-tripping floats."""
    return _encode(obj, indent, 0) + "\n"


# ---------------------------------------------------------------- systems


def _parse_error(path, msg):
    return SystemFileError(f"{path}: {msg}")


def _matrix_field(doc, key, path, n=None):
    raw = doc[key]
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise _parse_error(path, f"field '{key}' must be a non-empty array of rows")
    width = len(raw[0])
    for r, row in enumerate(raw):
        if len(row) != width:
            raise _parse_error(path, f"field '{key}' row {r} has {len(row)} entries, expected {width}")
        for c, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise _parse_error(path, f"field '{key}'[{r}][{c}] is not a number")
            if not math.isfinite(v):
                raise _parse_error(path, f"field '{key}'[{r}][{c}] is not finite")
    arr = np.array(raw, dtype=float)
    if arr.shape[0] != arr.shape[1]:
        raise _parse_error(path, f"field '{key}' must be square, got {arr.shape[0]}x{arr.shape[1]}")
    if n is not None and arr.shape != (n, n):
        raise _parse_error(path, f"field '{key}' must be {n}x{n} to match A, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def _vector_field(doc, key, n, path):
    raw = doc[key]
    if isinstance(raw, list) and raw and all(isinstance(r, list) for r in raw):
        # accept a single row or a single column
        raw = [v for row in raw for v in row]
    if not isinstance(raw, list):
        raise _parse_error(path, f"field '{key}' must be an array")
    for k, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise _parse_error(path, f"field '{key}'[{k}] is not a number")
        if not math.isfinite(v):
            raise _parse_error(path, f"field '{key}'[{k}] is not finite")
    if len(raw) != n:
        raise _parse_error(path, f"field '{key}' has length {len(raw)}, expected {n} to match A")
    return np.array(raw, dtype=float)


def system_from_dict(doc, path="<system>"):
    if not isinstance(doc, dict):
        raise _parse_error(path, "top level must be a JSON object")
    for key in ("A", "b", "c"):
        if key not in doc:
            raise _parse_error(path, f"missing field '{key}'")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise _parse_error(path, "field 'name' must be a string")
    a = _matrix_field(doc, "A", path)
    n = a.shape[0]
    b = _vector_field(doc, "b", n, path)
    c = _vector_field(doc, "c", n, path)
    if doc.get("Delta") is not None:
        delta = _matrix_field(doc, "Delta", path, n)
        return UncertainSystem(a, delta, b, c, name)
    return LtiSystem(a, b, c, name)


def system_to_dict(sys) -> dict:
    doc = {"name": sys.name, "A": sys.a.tolist(), "b": sys.b.tolist(), "c": sys.c.tolist()}
    if isinstance(sys, UncertainSystem):
        doc["Delta"] = sys.delta.tolist()
    return doc


def bundled_systems() -> list:
    root = resources.files("hplyap") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def parse_system(path):
    """Read a system file; a bare name such as ``example1`` selects a bundled system."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("hplyap") / "data" / f"{path}.json"
        if "/" not in str(path) and bundled.is_file():
            text = bundled.read_text()
        else:
            raise _parse_error(path, "no such file")
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise _parse_error(path, f"cannot read: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _parse_error(path, f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return system_from_dict(doc, path)


def write_system(path, sys) -> None:
    atomic_write_text(path, dumps(system_to_dict(sys)))


# ---------------------------------------------------------------- certificates and envelopes


def certificate_to_dict(cert) -> dict:
    rep = cert.solver_report
    return {
        "level": cert.level,
        "alpha": cert.alpha,
        "vertices": [np.asarray(m).tolist() for m in cert.vertices],
        "P": np.asarray(cert.p_mat).tolist(),
        "objective_value": cert.objective_value,
        "residuals": rep.residuals,
        "solver": {"status": rep.status, "iterations": rep.iterations, "backend": rep.backend},
    }


def certificate_from_dict(doc):
    from .certificates import LyapunovCertificate, SolverReport

    solver = doc.get("solver", {})
    return LyapunovCertificate(
        level=int(doc["level"]),
        p_mat=np.array(doc["P"], dtype=float),
        alpha=float(doc["alpha"]),
        vertices=[np.array(m, dtype=float) for m in doc["vertices"]],
        objective_value=None if doc.get("objective_value") is None else float(doc["objective_value"]),
        solver_report=SolverReport(
            solver.get("status", "unknown"),
            int(solver.get("iterations", 0)),
            solver.get("backend", ""),
            dict(doc.get("residuals", {})),
        ),
    )


def certificate_json(cert) -> str:
    return dumps(certificate_to_dict(cert))


def certificate_ref(cert) -> str:
    return "sha256:" + hashlib.sha256(certificate_json(cert).encode()).hexdigest()


def envelope_to_dict(env, certificate_ref_value: str | None = None) -> dict:
    if env.center_kind == "zero":
        center = {"type": "zero", "data": None}
    elif env.center_kind == "constant":
        center = {"type": "constant", "data": env.center_value}
    else:
        center = {"type": "nominal_impulse", "data": system_to_dict(env.nominal)}
    if certificate_ref_value is None and env.certificate is not None:
        certificate_ref_value = certificate_ref(env.certificate)
    return {
        "kind": env.kind,
        "magnitude": env.magnitude,
        "alpha": env.alpha,
        "t_start": env.t_start,
        "center": center,
        "certificate_ref": certificate_ref_value,
    }


def envelope_from_dict(doc):
    from .bounds import Envelope

    center = doc["center"]
    kind = center["type"]
    nominal = None
    value = 0.0
    if kind == "constant":
        value = float(center["data"])
    elif kind == "nominal_impulse":
        nominal = system_from_dict(center["data"], "<envelope center>")
        if isinstance(nominal, UncertainSystem):
            nominal = nominal.nominal
    return Envelope(doc["kind"], float(doc["magnitude"]), float(doc["alpha"]), float(doc["t_start"]), kind, value, nominal)

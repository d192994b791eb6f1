"""Reading and writing bodies, polytopes, certificates and descent traces.

Files are JSON documents.  Floats are written with 17 significant digits so a
write/read cycle is bit exact, and keys are emitted in a fixed order so equal
inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .errors import MahlerError, ParseError
from .polygon import Certificate, PolygonSupport
from .polytope import PolytopeV, hull
from .support import GridSupport

Body = Union[GridSupport, PolygonSupport]


def fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(isinstance(x, (int, float, np.integer, np.floating)) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]" if items else "[]"
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}" if items else "{}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def _load(path_or_text) -> dict:
    if isinstance(path_or_text, dict):
        return path_or_text
    try:
        text = Path(path_or_text).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path_or_text}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path_or_text}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path_or_text}: top level must be an object")
    return data


def _floats(data: dict, key: str) -> np.ndarray:
    if key not in data:
        raise ParseError(f"missing field '{key}'")
    try:
        arr = np.asarray(data[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field '{key}' must be a list of numbers") from exc
    if arr.ndim == 0:
        raise ParseError(f"field '{key}' must be a list")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"field '{key}' has non-finite entries")
    return arr


def body_to_dict(body: Body) -> dict:
    if isinstance(body, GridSupport):
        return {"type": "grid", "n": body.n, "samples": body.samples}
    if isinstance(body, PolygonSupport):
        return {"type": "polygon", "normals": body.normals,
                "support_values": body.support_values}
    raise TypeError(f"not a body: {type(body).__name__}")


def body_from_dict(data: dict) -> Body:
    kind = data.get("type")
    if kind == "grid":
        samples = _floats(data, "samples")
        n = data.get("n", samples.size)
        if not isinstance(n, int) or n != samples.size:
            raise ParseError(f"n = {n!r} does not match {samples.size} samples")
        return GridSupport(samples)
    if kind == "polygon":
        normals = _floats(data, "normals")
        values = _floats(data, "support_values")
        if normals.shape != values.shape:
            raise ParseError("normals and support_values differ in length")
        return PolygonSupport.from_support(normals, values)
    raise ParseError(f"unknown body type {kind!r} (expected 'grid' or 'polygon')")


def read_body(path) -> Body:
    return body_from_dict(_load(path))


def write_body(path, body: Body):
    write_json(path, body_to_dict(body))


def polytope_to_dict(P: PolytopeV) -> dict:
    return {"dim": P.dim, "vertices": P.vertices}


def read_polytope(path) -> PolytopeV:
    data = _load(path)
    dim = data.get("dim")
    if dim not in (2, 3):
        raise ParseError(f"dim must be 2 or 3, got {dim!r}")
    verts = _floats(data, "vertices")
    if verts.ndim != 2 or verts.shape[1] != dim:
        raise ParseError(f"vertices must be a list of {dim}-vectors")
    return hull(verts)


def write_polytope(path, P: PolytopeV):
    write_json(path, polytope_to_dict(P))


def certificate_to_dict(cert: Certificate) -> dict:
    frame = cert.normalized_frame or {}
    return {
        "vertex_index": cert.vertex_index,
        "deformation_value": cert.deformation_value,
        "bracket": cert.bracket,
        "quadratic_form": cert.quadratic_form,
        "normalized_frame": {
            "theta0": frame.get("theta0"),
            "theta1": frame.get("theta1"),
            "theta2": frame.get("theta2"),
            "a0": frame.get("a0"),
            "a1": frame.get("a1"),
        },
    }


TRACE_HEADER = "iteration,J,step,topk_fraction,atom_count"


def trace_csv(trace) -> str:
    lines = [TRACE_HEADER]
    for k, val, step, frac, atoms in trace.records():
        lines.append(f"{k},{fmt(val)},{fmt(step)},{fmt(frac)},{atoms}")
    return "\n".join(lines) + "\n"


def error_report(exc: MahlerError) -> dict:
    return {"error": type(exc).__name__, "invariant": exc.invariant, "message": str(exc)}

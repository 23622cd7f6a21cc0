"""JSON instance files.

An instance is ``{"T", "p", "q", "a": [fn], "c": [fn], "B": [[fn]], "K": [[fn2]]}``
where ``fn = {"breakpoints": [...], "pieces": [piece, ...]}`` and ``fn2`` has
the same breakpoints field with ``pieces`` a square grid, ``pieces[u][v]``
covering t in interval u and s in interval v. Breakpoints may omit 0 and T
and are sorted and deduplicated on load.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

import jsonschema
import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .coeff import (
    CLPInstance,
    PiecewiseFn1D,
    PiecewiseFn2D,
    Poly2Piece,
    PolyPiece,
    Sampled2Piece,
    SampledPiece,
    SeparablePiece,
    TableFunction,
)
from .errors import DataError, StructuralError

_number_list = {"type": "array", "items": {"type": "number"}}
_poly = {
    "type": "object",
    "properties": {"kind": {"const": "poly"}, "coeffs": {**_number_list, "minItems": 1, "maxItems": 9}},
    "required": ["kind", "coeffs"],
    "additionalProperties": False,
}
_sampled = {
    "type": "object",
    "properties": {
        "kind": {"const": "sampled"},
        "lipschitz": {"type": "number", "minimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "table": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
    },
    "required": ["kind", "lipschitz", "delta", "table"],
    "additionalProperties": False,
}
_poly2 = {
    "type": "object",
    "properties": {
        "kind": {"const": "poly2"},
        "coeffs": {"type": "array", "minItems": 1, "maxItems": 3, "items": {**_number_list, "minItems": 1, "maxItems": 3}},
    },
    "required": ["kind", "coeffs"],
    "additionalProperties": False,
}
_separable = {
    "type": "object",
    "properties": {"kind": {"const": "separable"}, "t": _poly, "s": _poly},
    "required": ["kind", "t", "s"],
    "additionalProperties": False,
}
_sampled2 = {
    "type": "object",
    "properties": {
        "kind": {"const": "sampled2"},
        "lipschitz": {"type": "number", "minimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "t": {**_number_list, "minItems": 2},
        "s": {**_number_list, "minItems": 2},
        "values": {"type": "array", "items": _number_list},
    },
    "required": ["kind", "lipschitz", "delta", "t", "s", "values"],
    "additionalProperties": False,
}
_fn1 = {
    "type": "object",
    "properties": {"breakpoints": _number_list, "pieces": {"type": "array", "minItems": 1, "items": {"oneOf": [_poly, _sampled]}}},
    "required": ["pieces"],
    "additionalProperties": False,
}
_fn2 = {
    "type": "object",
    "properties": {
        "breakpoints": _number_list,
        "pieces": {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"oneOf": [_poly2, _separable, _sampled2]}}},
    },
    "required": ["pieces"],
    "additionalProperties": False,
}
INSTANCE_SCHEMA = {
    "type": "object",
    "properties": {
        "T": {"type": "number", "exclusiveMinimum": 0},
        "p": {"type": "integer", "minimum": 1},
        "q": {"type": "integer", "minimum": 1},
        "a": {"type": "array", "items": _fn1},
        "c": {"type": "array", "items": _fn1},
        "B": {"type": "array", "items": {"type": "array", "items": _fn1}},
        "K": {"type": "array", "items": {"type": "array", "items": _fn2}},
    },
    "required": ["T", "p", "q", "a", "c", "B", "K"],
    "additionalProperties": False,
}


def _pointer(path) -> str:
    return "/" + "/".join(str(x) for x in path)


def _breakpoints(raw, T: float, where: str) -> tuple[float, ...]:
    pts = sorted({0.0, float(T), *(float(x) for x in raw)})
    tol = 1e-12 * max(1.0, T)
    bad = [x for x in pts if x < -tol or x > T + tol]
    if bad:
        raise StructuralError(f"{where}: breakpoint {bad[0]} outside [0, {T}]")
    return tuple(pts)


def _piece1(d: dict):
    if d["kind"] == "poly":
        return PolyPiece(tuple(d["coeffs"]))
    return SampledPiece(TableFunction.from_rows(d["table"]), float(d["lipschitz"]), float(d["delta"]))


def _piece2(d: dict, where: str):
    kind = d["kind"]
    if kind == "poly2":
        return Poly2Piece(tuple(tuple(r) for r in d["coeffs"]))
    if kind == "separable":
        return SeparablePiece(_piece1(d["t"]), _piece1(d["s"]))
    vals = np.asarray(d["values"], dtype=float)
    if vals.shape != (len(d["t"]), len(d["s"])):
        raise DataError(f"{where}: values grid {vals.shape} does not match t ({len(d['t'])}) x s ({len(d['s'])})")
    interp = RegularGridInterpolator((d["t"], d["s"]), vals, bounds_error=False, fill_value=None)
    return Sampled2Piece(lambda t, s: interp(np.stack([t, s], axis=-1)), float(d["lipschitz"]), float(d["delta"]))


def _fn1(d: dict, T: float, where: str) -> PiecewiseFn1D:
    bps = _breakpoints(d.get("breakpoints", []), T, where)
    if len(d["pieces"]) != len(bps) - 1:
        raise StructuralError(f"{where}: {len(bps) - 1} intervals but {len(d['pieces'])} pieces")
    return PiecewiseFn1D(bps, tuple(_piece1(x) for x in d["pieces"]))


def _fn2(d: dict, T: float, where: str) -> PiecewiseFn2D:
    bps = _breakpoints(d.get("breakpoints", []), T, where)
    M = len(bps) - 1
    rows = d["pieces"]
    if len(rows) != M or any(len(r) != M for r in rows):
        raise StructuralError(f"{where}: needs a {M}x{M} grid of pieces")
    return PiecewiseFn2D(bps, tuple(tuple(_piece2(x, f"{where}[{u}][{v}]") for v, x in enumerate(r)) for u, r in enumerate(rows)))


def instance_from_dict(data: Any) -> CLPInstance:
    errors = sorted(jsonschema.Draft202012Validator(INSTANCE_SCHEMA).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise DataError(f"schema violation at {_pointer(e.absolute_path)}: {e.message}")
    T, p, q = float(data["T"]), data["p"], data["q"]
    if len(data["a"]) != q:
        raise DataError(f"a has {len(data['a'])} entries, expected q={q}")
    if len(data["c"]) != p:
        raise DataError(f"c has {len(data['c'])} entries, expected p={p}")
    for name in ("B", "K"):
        if len(data[name]) != p:
            raise DataError(f"{name} has {len(data[name])} rows, expected p={p}")
        for i, row in enumerate(data[name]):
            if len(row) != q:
                raise DataError(f"{name}[{i}] has {len(row)} entries, expected q={q}")
    return CLPInstance(
        T,
        p,
        q,
        tuple(_fn1(f, T, f"a[{j}]") for j, f in enumerate(data["a"])),
        tuple(_fn1(f, T, f"c[{i}]") for i, f in enumerate(data["c"])),
        tuple(tuple(_fn1(f, T, f"B[{i}][{j}]") for j, f in enumerate(r)) for i, r in enumerate(data["B"])),
        tuple(tuple(_fn2(f, T, f"K[{i}][{j}]") for j, f in enumerate(r)) for i, r in enumerate(data["K"])),
    )


def load_instance(path: Union[str, Path]) -> CLPInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return instance_from_dict(data)


def _piece1_dict(pc) -> dict:
    if isinstance(pc, PolyPiece):
        return {"kind": "poly", "coeffs": list(pc.coeffs)}
    if isinstance(pc, SampledPiece) and isinstance(pc.func, TableFunction):
        return {"kind": "sampled", "lipschitz": pc.lipschitz, "delta": pc.delta, "table": [list(r) for r in zip(pc.func.ts, pc.func.vs)]}
    raise DataError(f"cannot serialize piece of type {type(pc).__name__}")


def _piece2_dict(pc) -> dict:
    if isinstance(pc, Poly2Piece):
        return {"kind": "poly2", "coeffs": [list(r) for r in pc.coeffs]}
    if isinstance(pc, SeparablePiece):
        return {"kind": "separable", "t": _piece1_dict(pc.t_factor), "s": _piece1_dict(pc.s_factor)}
    raise DataError(f"cannot serialize piece of type {type(pc).__name__}")


def instance_to_dict(inst: CLPInstance) -> dict:
    """Inverse of instance_from_dict for polynomial and table pieces."""

    def fn1(f):
        return {"breakpoints": list(f.breakpoints), "pieces": [_piece1_dict(x) for x in f.pieces]}

    def fn2(f):
        return {"breakpoints": list(f.breakpoints), "pieces": [[_piece2_dict(x) for x in r] for r in f.pieces]}

    return {
        "T": inst.T,
        "p": inst.p,
        "q": inst.q,
        "a": [fn1(f) for f in inst.a],
        "c": [fn1(f) for f in inst.c],
        "B": [[fn1(f) for f in r] for r in inst.B],
        "K": [[fn2(f) for f in r] for r in inst.K],
    }


def dump_instance(inst: CLPInstance, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1))

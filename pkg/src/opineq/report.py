"""Check reports and their JSON encoding.

Floats are written with 17 significant digits so that reports round-trip
exactly and diff cleanly between runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

TOL = 1e-9


@dataclass(frozen=True)
class Part:
    """One inequality inside a check.

    Scalar parts read ``lhs <= constant * rhs`` (or ``constant * lhs <= rhs``
    when ``scaled == "lhs"``) and the margin is the difference of the two
    sides.  Order parts compare Hermitian matrices and the margin is the
    smallest eigenvalue of the difference.
    """

    name: str
    lhs: Any
    rhs: Any
    constant: float
    margin: float
    scale: float
    scaled: str = "rhs"

    def passed(self, tol: float = TOL) -> bool:
        return self.margin >= -tol * self.scale


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    lhs: Any
    rhs: Any
    constant: float
    margin: float
    scale: float
    passed: bool
    parts: tuple = ()
    input_digest: dict = field(default_factory=dict)
    witness: Optional[dict] = None
    kind: str = "inequality"
    facts: dict = field(default_factory=dict)

    def with_digest(self, **digest) -> "CheckReport":
        return replace(self, input_digest={**self.input_digest, **digest})

    def to_dict(self, include_values: bool = True) -> dict:
        out = {
            "check_id": self.check_id,
            "kind": self.kind,
            "input_digest": self.input_digest,
            "constant": self.constant,
            "margin": self.margin,
            "scale": self.scale,
            "pass": self.passed,
        }
        if include_values:
            out["lhs"] = encode(self.lhs)
            out["rhs"] = encode(self.rhs)
            out["parts"] = [
                {"name": p.name, "lhs": encode(p.lhs), "rhs": encode(p.rhs),
                 "constant": p.constant, "scaled": p.scaled, "margin": p.margin,
                 "scale": p.scale, "pass": p.passed()}
                for p in self.parts
            ]
        if self.facts:
            out["facts"] = encode(self.facts)
        if self.witness is not None:
            out["witness"] = encode(self.witness)
        return out


def build_report(check_id: str, parts, inputs: dict, tol: float = TOL,
                 kind: str = "inequality", facts: Optional[dict] = None,
                 digest: Optional[dict] = None) -> CheckReport:
    """Aggregate parts: the report's headline is the part with the smallest
    normalized margin, and the check passes iff every part does."""
    parts = tuple(parts)
    worst = min(parts, key=lambda p: p.margin / p.scale)
    ok = all(p.passed(tol) for p in parts)
    dims = sorted({v.shape[0] for v in inputs.values() if isinstance(v, np.ndarray)})
    return CheckReport(
        check_id=check_id,
        lhs=worst.lhs,
        rhs=worst.rhs,
        constant=worst.constant,
        margin=worst.margin,
        scale=worst.scale,
        passed=ok,
        parts=parts,
        input_digest=digest if digest is not None else {"mode": "direct", "dims": dims},
        witness=None if ok else {k: v for k, v in inputs.items()},
        kind=kind,
        facts=facts or {},
    )


def encode(value):
    """Convert arrays (complex allowed) and containers into JSON-ready data."""
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if hasattr(value, "matrix") and isinstance(getattr(value, "matrix"), np.ndarray):
        return encode(value.matrix)
    if hasattr(value, "blocks"):
        return [encode(b) for b in value.blocks]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            if np.all(value.imag == 0):
                return {"re": value.real.tolist()}
            return {"re": value.real.tolist(), "im": value.imag.tolist()}
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def decode_matrix(obj) -> np.ndarray:
    if isinstance(obj, dict):
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(obj, dtype=np.complex128)


def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float at 17 significant digits; key order is kept."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return dumps(encode(obj), indent, _level)

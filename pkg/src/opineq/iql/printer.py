"""Canonical pretty-printer; its output parses back to an equal AST."""
from __future__ import annotations

import json

from ..opconvex import _fmt
from .syntax import Adjoint, BinOp, Binding, Call, FnLit, Num, Program, Var

_PREC = {"+": 1, "-": 1, "*": 2}
_POSTFIX = 3
_ATOM = 4


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Adjoint):
        return _POSTFIX
    return _ATOM


def _wrap(node, need: int) -> str:
    s = show(node)
    return f"({s})" if _prec(node) < need else s


def show(node) -> str:
    if isinstance(node, Num):
        return _fmt(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, FnLit):
        return node.fn.descriptor()
    if isinstance(node, Adjoint):
        return _wrap(node.operand, _POSTFIX) + "'"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        # operators are left-associative: a right child of equal precedence
        # keeps its parentheses
        return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"
    if isinstance(node, Call):
        return f"{node.func}(" + ", ".join(show(a) for a in node.args) + ")"
    raise TypeError(f"cannot print {node!r}")


def _value(v) -> str:
    return json.dumps(v) if isinstance(v, str) else _fmt(v)


def show_binding(b: Binding) -> str:
    kvs = ", ".join(f"{k}={_value(v)}" for k, v in b.params)
    return f"let {b.name} ~ {b.generator}({kvs});"


def pretty(prog: Program) -> str:
    lines = [show_binding(b) for b in prog.bindings]
    lines.append(f"check {show(prog.lhs)} {prog.op} {show(prog.rhs)};")
    return "\n".join(lines) + "\n"

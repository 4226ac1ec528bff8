"""Binding of ensembles and evaluation of parsed queries to CheckReports."""
from __future__ import annotations

import ast as pyast
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from .. import ensembles as en
from .. import linalg
from ..checks import order_part, scalar_part
from ..errors import HypothesisViolation, LinalgError
from ..norms import (
    IsometricColumn,
    KrausMap,
    Schatten,
    norm_from_singular_values,
    real_eigenvalues_of_product,
    require_ab_psd,
    require_posdef,
)
from ..opconvex import kappa
from ..report import TOL, CheckReport, build_report
from .syntax import Adjoint, BinOp, Binding, Call, IqlRuntimeError, Num, Program, Span, Var

MAX_DIM = 64
REAL_TOL = 1e-9


@dataclass(frozen=True)
class Bound:
    """A binding's drawn value together with its generator and parameters."""

    name: str
    generator: str
    params: dict
    value: np.ndarray

    def with_value(self, value) -> "Bound":
        return replace(self, value=linalg.as_matrix(value))


def _fail(node, message):
    sp = getattr(node, "span", None) or Span(0, 0)
    return IqlRuntimeError(message, sp.line, sp.col, getattr(node, "name", "") or
                           getattr(node, "func", "") or getattr(node, "op", ""))


def _int_param(b: Binding, key: str, lo: int, hi: int) -> int:
    v = b.param(key)
    if v is None or not float(v).is_integer() or not lo <= v <= hi:
        raise _fail(b, f"{b.generator}: {key} must be an integer in [{lo}, {hi}]")
    return int(v)


def parse_matrix_literal(text: str) -> np.ndarray:
    """Bracketed row list, e.g. ``[[5, 3], [3, 5]]``; complex entries allowed."""
    try:
        rows = pyast.literal_eval(text)
        m = np.array(rows, dtype=np.complex128)
    except (ValueError, SyntaxError, TypeError) as exc:
        raise ValueError(f"bad matrix literal: {exc}") from None
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("matrix literal must be a non-empty list of rows")
    return m


def _draw(b: Binding, seed: int, index: int, groups: dict) -> np.ndarray:
    g = b.generator
    if g == "fixed":
        try:
            return parse_matrix_literal(b.param("matrix"))
        except ValueError as exc:
            raise _fail(b, str(exc)) from None
    n = _int_param(b, "dim", 1, MAX_DIM)
    try:
        if g == "abpair":
            mode = _int_param(b, "mode", 0, 1) if b.param("mode") is not None else 0
            part = _int_param(b, "part", 1, 2)
            key = ("abpair", b.param("group", 0), n, mode)
            if key not in groups:
                rng = en.substream(seed, f"iql:abpair:{key[1]}:{mode}", index, n)
                groups[key] = en.gen_ab_pair(n, en.AB_MODES[mode], rng=rng)
            return groups[key][part - 1]
        if g == "isocol":
            m = _int_param(b, "m", 1, 16)
            part = _int_param(b, "part", 1, m)
            key = ("isocol", b.param("group", 0), n, m)
            if key not in groups:
                rng = en.substream(seed, f"iql:isocol:{key[1]}:{m}", index, n)
                groups[key] = en.gen_isometric_column(n, m, rng=rng).blocks
            scale = float(b.param("scale", 1.0))
            if not 0 <= scale <= 1:
                raise _fail(b, "isocol: scale must lie in [0, 1]")
            return scale * groups[key][part - 1]
        rng = en.substream(seed, f"iql:{g}:{b.name}", index, n)
        if g == "posdef":
            a, lo = b.param("a"), b.param("b")
            if (a is None) != (lo is None):
                raise _fail(b, "posdef: give both a and b or neither")
            if a is None:
                a, lo = en.random_extremes(rng)
            return en.gen_posdef(n, a, lo, rng=rng)
        if g == "psd":
            return en.gen_psd(n, float(b.param("scale", 1.0)), rng=rng)
        if g == "poscontraction":
            return en.gen_positive_contraction(n, rng=rng)
        if g == "contraction":
            return en.gen_contraction(n, rng=rng).matrix
        if g == "isometry":
            return en.gen_isometry(n, _int_param(b, "k", 1, n), rng=rng).matrix
        if g == "unit":
            return en.gen_unit_vector(n, rng=rng).reshape(n, 1)
    except ValueError as exc:
        if isinstance(exc, IqlRuntimeError):
            raise
        raise _fail(b, f"{g}: {exc}") from None
    raise _fail(b, f"unknown generator {g!r}")


def bind(prog: Program, seed: int = 0, index: int = 0) -> Dict[str, Bound]:
    """Draw every binding for trial ``index``; grouped generators share a draw."""
    groups: dict = {}
    env = {}
    for b in prog.bindings:
        value = linalg.as_matrix(_draw(b, seed, index, groups))
        env[b.name] = Bound(b.name, b.generator, dict(b.params), value)
    return env


def validate(env: Dict[str, Bound], tol: float = 1e-9) -> None:
    """Raise HypothesisViolation if a value has left its generator's class."""
    groups: dict = {}
    for bd in env.values():
        g, v, p = bd.generator, bd.value, bd.params
        if g in ("abpair", "isocol"):
            groups.setdefault((g, p.get("group", 0)), []).append(bd)
        elif g == "unit":
            en.check_instance("unit", v.reshape(-1))
        elif g != "fixed":
            en.check_instance(g, v)
        if g == "posdef" and p.get("a") is not None:
            lam = linalg.eigvalsh(v)
            if lam[0] > p["a"] * (1 + tol) or lam[-1] < p["b"] * (1 - tol):
                raise HypothesisViolation(f"{bd.name}: spectrum left [{p['b']}, {p['a']}]")
    for (g, _), members in groups.items():
        members = sorted(members, key=lambda m: m.params["part"])
        if g == "abpair":
            if len(members) == 2:
                require_ab_psd(members[0].value, members[1].value)
        elif len(members) == int(members[0].params["m"]):
            if all(m.params.get("scale", 1.0) == 1.0 for m in members):
                IsometricColumn(tuple(m.value for m in members))
            else:
                KrausMap(tuple(m.value for m in members))


def _real(node, z: complex, scale: float) -> float:
    if abs(z.imag) > REAL_TOL * max(1.0, scale):
        raise _fail(node, f"{getattr(node, 'func', 'value')} is not real ({z})")
    return float(z.real)


def _count(node, k: int, limit: int, what: str) -> int:
    if not 1 <= k <= limit:
        raise _fail(node, f"{what} index {k} outside 1..{limit}")
    return k


def _hermitian(node, m) -> np.ndarray:
    if m.shape[0] != m.shape[1] or not linalg.is_hermitian(m):
        raise _fail(node, f"{node.func} needs a Hermitian matrix")
    return linalg.hermitian(m)


class _Evaluator:
    def __init__(self, env: Dict[str, np.ndarray]):
        self.env = env

    def __call__(self, node):
        try:
            return self.eval(node)
        except IqlRuntimeError:
            raise
        except (LinalgError, HypothesisViolation, ValueError, ArithmeticError) as exc:
            raise _fail(node, str(exc)) from None

    def eval(self, node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return self.env[node.name]
        if isinstance(node, Adjoint):
            return self(node.operand).conj().T
        if isinstance(node, BinOp):
            return self.binop(node)
        if isinstance(node, Call):
            return self.call(node)
        raise _fail(node, "cannot evaluate")

    def binop(self, node):
        x, y = self(node.left), self(node.right)
        mats = isinstance(x, np.ndarray) and isinstance(y, np.ndarray)
        if node.op == "*":
            if mats:
                if x.shape[1] != y.shape[0]:
                    raise _fail(node, f"shape mismatch {x.shape} * {y.shape}")
                return x @ y
            return x * y
        if mats and x.shape != y.shape:
            raise _fail(node, f"shape mismatch {x.shape} {node.op} {y.shape}")
        return x + y if node.op == "+" else x - y

    def real_spectrum(self, node, arg) -> np.ndarray:
        """Real eigenvalues, descending: Hermitian input, or a product of a
        PSD and a PD factor (similar to a Hermitian matrix)."""
        if isinstance(arg, BinOp) and arg.op == "*":
            x, y = self(arg.left), self(arg.right)
            if x.shape == y.shape and x.shape[0] == x.shape[1] and \
                    linalg.is_hermitian(x) and linalg.is_hermitian(y):
                hx, hy = linalg.hermitian(x), linalg.hermitian(y)
                lx, ly = linalg.eigvalsh(hx), linalg.eigvalsh(hy)
                if lx[-1] >= -REAL_TOL * max(1, abs(lx[0])) and ly[-1] > 0:
                    return real_eigenvalues_of_product(hx, hy)
                if ly[-1] >= -REAL_TOL * max(1, abs(ly[0])) and lx[-1] > 0:
                    return real_eigenvalues_of_product(hy, hx)
        m = self(arg)
        if m.shape[0] != m.shape[1] or not linalg.is_hermitian(m):
            raise _fail(node, f"{node.func} needs a Hermitian matrix or a PSD*PD product")
        return np.asarray(linalg.eigvalsh(m))

    def call(self, node: Call):
        fn, args = node.func, node.args
        if fn == "inv":
            return linalg.inv(self(args[0]))
        if fn == "sqrt":
            return linalg.sqrtm_psd(_hermitian(node, self(args[0])))
        if fn == "f":
            return linalg.apply_fn(_hermitian(node, self(args[1])), args[0].fn)
        if fn == "compress":
            m, p = self(args[0]), self(args[1])
            if m.shape[0] != m.shape[1] or p.shape[0] != m.shape[0]:
                raise _fail(node, f"cannot compress {m.shape} by {p.shape}")
            return p.conj().T @ m @ p
        if fn == "wedge":
            m = self(args[1])
            k = _count(node, int(args[0].value), min(m.shape), "wedge")
            return linalg.compound(m, k)
        if fn in ("fan", "sing"):
            m = self(args[1])
            mu = linalg.svd(m).values
            k = _count(node, int(args[0].value), len(mu), fn)
            return float(np.sum(mu[:k])) if fn == "fan" else float(mu[k - 1])
        if fn == "schatten":
            return norm_from_singular_values(linalg.svd(self(args[1])).values,
                                             Schatten(args[0].value))
        if fn == "trace":
            m = self(args[0])
            if m.shape[0] != m.shape[1]:
                raise _fail(node, "trace of a non-square matrix")
            return _real(node, complex(np.trace(m)), float(np.abs(m).max(initial=0)))
        if fn == "rho":
            lam = self.real_spectrum(node, args[0])
            return float(max(abs(lam[0]), abs(lam[-1])))
        if fn == "eig":
            lam = self.real_spectrum(node, args[1])
            return float(lam[_count(node, int(args[0].value), len(lam), "eig") - 1])
        if fn in ("kappa1", "kappa2"):
            hi, lo = -np.inf, np.inf
            for a in args:
                spec = require_posdef(_hermitian(node, self(a)))
                hi, lo = max(hi, spec.largest), min(lo, spec.smallest)
            k = kappa(hi, lo)
            return k.kappa1 if fn == "kappa1" else k.kappa2
        if fn == "ip":
            x, m, y = (self(a) for a in args)
            if x.shape[1] != 1 or y.shape[1] != 1 or m.shape != (x.shape[0], y.shape[0]):
                raise _fail(node, "ip needs vectors x, y and a matching matrix")
            z = complex((x.conj().T @ m @ y)[0, 0])
            return _real(node, z, float(np.abs(m).max(initial=0)))
        raise _fail(node, f"unknown function {fn!r}")


def evaluate_env(prog: Program, env: Dict[str, Bound], tol: float = TOL,
                 check_id: str = "iql", digest: Optional[dict] = None) -> CheckReport:
    """Evaluate the comparison on explicit binding values."""
    values = {k: b.value for k, b in env.items()}
    ev = _Evaluator(values)
    lhs, rhs = ev(prog.lhs), ev(prog.rhs)
    if prog.op == "<=":
        part = scalar_part("iql", lhs, rhs)
    else:
        if lhs.shape != rhs.shape or lhs.shape[0] != lhs.shape[1]:
            raise _fail(prog.lhs, f"cannot compare shapes {lhs.shape} and {rhs.shape}")
        for side, m in ((prog.lhs, lhs), (prog.rhs, rhs)):
            if not linalg.is_hermitian(m):
                raise _fail(side, "'<=L' needs Hermitian sides")
        part = order_part("iql", lhs, rhs)
    dims = sorted({v.shape[0] for v in values.values()})
    return build_report(check_id, [part], values, tol,
                        digest=digest or {"mode": "iql", "dims": dims})


def evaluate(prog: Program, seed: int = 0, index: int = 0, tol: float = TOL,
             check_id: str = "iql") -> CheckReport:
    """Bind ensembles for (seed, index) and evaluate the query."""
    env = bind(prog, seed, index)
    dims = sorted({b.value.shape[0] for b in env.values()})
    return evaluate_env(prog, env, tol, check_id,
                        {"mode": "iql", "seed": seed, "index": index, "dims": dims})

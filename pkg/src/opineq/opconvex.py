"""Operator convex functions on [0, inf) and Kantorovich constants.

The catalog covers the closed forms appearing in the integral
representation  f(t) = alpha + beta t + gamma t^2 + int lambda t^2/(lambda+t) dmu,
restricted to finite atomic measures, together with the powers t^p,
1 <= p <= 2, and the inverse t -> 1/t as a separately tagged limit case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Tuple, Union

import numpy as np


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _check_domain(t: np.ndarray, strict: bool) -> None:
    if strict and np.any(t <= 0):
        raise ValueError("argument must be > 0")
    if not strict and np.any(t < 0):
        raise ValueError("argument must be >= 0")


@dataclass(frozen=True)
class Quadratic:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    domain = (0.0, False)
    limit_case = False

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"quadratic coefficient {name}={v} must be finite and >= 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        _check_domain(t, False)
        return self.alpha + self.beta * t + self.gamma * t * t

    @property
    def at_zero(self) -> float:
        return self.alpha

    def descriptor(self) -> str:
        return f"quad({_fmt(self.alpha)},{_fmt(self.beta)},{_fmt(self.gamma)})"


@dataclass(frozen=True)
class Power:
    p: float

    domain = (0.0, False)
    limit_case = False

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(f"power p={self.p} outside [1, 2]")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        _check_domain(t, False)
        if self.p == 1.0:
            return t.copy()
        if self.p == 2.0:
            return t * t
        with np.errstate(divide="ignore"):
            return np.where(t > 0, np.exp(self.p * np.log(np.where(t > 0, t, 1.0))), 0.0)

    @property
    def at_zero(self) -> float:
        return 0.0

    def descriptor(self) -> str:
        return f"pow({_fmt(self.p)})"


@dataclass(frozen=True)
class Kernel:
    """t -> lam t^2 / (lam + t)."""

    lam: float

    domain = (0.0, False)
    limit_case = False

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"kernel parameter lambda={self.lam} must be > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        _check_domain(t, False)
        return self.lam * t * t / (self.lam + t)

    @property
    def at_zero(self) -> float:
        return 0.0

    def descriptor(self) -> str:
        return f"ker({_fmt(self.lam)})"


@dataclass(frozen=True)
class Inverse:
    """t -> 1/t on (0, inf); only admitted by checks on strictly positive spectra."""

    domain = (0.0, True)
    limit_case = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        _check_domain(t, True)
        return 1.0 / t

    @property
    def at_zero(self):
        return None

    def descriptor(self) -> str:
        return "inv"


Atom = Union[Quadratic, Power, Kernel]


@dataclass(frozen=True)
class FiniteSum:
    """Nonnegative combination of catalog members (the inverse excluded)."""

    terms: Tuple[Tuple[float, "OperatorConvexFn"], ...]

    domain = (0.0, False)
    limit_case = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(w), f) for w, f in self.terms))
        if not self.terms:
            raise ValueError("empty sum")
        for w, f in self.terms:
            if not (math.isfinite(w) and w >= 0):
                raise ValueError(f"sum weight {w} must be finite and >= 0")
            if isinstance(f, Inverse):
                raise ValueError("the inverse cannot appear inside a sum")
            if not isinstance(f, (Quadratic, Power, Kernel, FiniteSum)):
                raise TypeError(f"not a catalog function: {f!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return sum(w * f(t) for w, f in self.terms)

    @property
    def at_zero(self) -> float:
        return sum(w * f.at_zero for w, f in self.terms)

    def descriptor(self) -> str:
        return "sum(" + ",".join(f"{_fmt(w)}*{f.descriptor()}" for w, f in self.terms) + ")"


OperatorConvexFn = Union[Quadratic, Power, Kernel, Inverse, FiniteSum]


def evaluate(f: OperatorConvexFn, t):
    """Scalar (or elementwise) evaluation; domain violations raise ValueError."""
    out = f(t)
    return float(out) if np.ndim(out) == 0 else out


def vanishes_at_zero(f: OperatorConvexFn) -> bool:
    """True when f(0) <= 0, which for this catalog means f(0) = 0."""
    v = f.at_zero
    return v is not None and v <= 0


@dataclass(frozen=True)
class KantorovichConstants:
    a: float
    b: float
    kappa1: float
    kappa2: float

    @property
    def inverse_kappa2(self) -> float:
        return 4 * self.a * self.b / (self.a + self.b) ** 2


def kappa(a: float, b: float) -> KantorovichConstants:
    """Constants for a positive spectrum with extremal eigenvalues a, b.

    kappa1 = (a+b)/(2 sqrt(ab)) and kappa2 = (a+b)^2/(4ab); the arguments
    may come in either order.
    """
    a, b = float(a), float(b)
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"extremal eigenvalues must be positive, got a={a}, b={b}")
    if a < b:
        a, b = b, a
    # scale out before forming the product so huge or tiny spectra do not overflow
    r = b / a
    k1 = (1 + r) / (2 * math.sqrt(r))
    k2 = (1 + r) ** 2 / (4 * r)
    return KantorovichConstants(a, b, max(k1, 1.0), max(k2, 1.0))


def convexity_selfcheck(f: OperatorConvexFn, grid) -> bool:
    """Midpoint convexity and nonnegativity of the scalar function on a grid."""
    t = np.asarray(sorted(float(x) for x in grid))
    vals = np.asarray(f(t), dtype=float)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        return False
    for i, j in combinations_with_replacement(range(t.size), 2):
        mid = float(f((t[i] + t[j]) / 2))
        chord = (vals[i] + vals[j]) / 2
        if mid > chord + 1e-12 * max(1.0, abs(vals[i]), abs(vals[j])):
            return False
    return True


def catalog() -> list:
    """Representative members of every catalog family."""
    return [
        Quadratic(1.0, 0.0, 1.0),
        Quadratic(0.0, 1.0, 0.0),
        Quadratic(0.5, 2.0, 0.25),
        Power(1.0),
        Power(1.25),
        Power(1.5),
        Power(2.0),
        Kernel(0.1),
        Kernel(1.0),
        Kernel(100.0),
        FiniteSum(((1.0, Quadratic(0.0, 1.0, 0.0)), (2.0, Kernel(5.0)))),
        FiniteSum(((0.3, Power(1.7)), (1.5, Kernel(0.5)), (0.2, Quadratic(1.0, 0.0, 0.0)))),
        Inverse(),
    ]


def random_member(rng: np.random.Generator, include_inverse: bool = True,
                  vanishing: bool = False) -> OperatorConvexFn:
    """Draw a catalog function; ``vanishing`` restricts to f(0) = 0."""
    kinds = ["power", "kernel", "quadratic", "sum"]
    if include_inverse and not vanishing:
        kinds.append("inverse")
    kind = kinds[rng.integers(len(kinds))]
    if kind == "power":
        return Power(float(rng.uniform(1.0, 2.0)))
    if kind == "kernel":
        return Kernel(float(10 ** rng.uniform(-1, 2)))
    if kind == "inverse":
        return Inverse()
    if kind == "quadratic":
        alpha = 0.0 if vanishing else float(rng.uniform(0, 2))
        return Quadratic(alpha, float(rng.uniform(0, 2)), float(rng.uniform(0, 2)))
    m = int(rng.integers(2, 4))
    terms = []
    for _ in range(m):
        sub = random_member(rng, include_inverse=False, vanishing=vanishing)
        while isinstance(sub, FiniteSum):
            sub = random_member(rng, include_inverse=False, vanishing=vanishing)
        terms.append((float(rng.uniform(0, 2)), sub))
    return FiniteSum(tuple(terms))

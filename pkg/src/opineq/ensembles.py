"""Seeded random instances for every hypothesis class.

Each instance is drawn from its own counter-based Philox stream keyed by
``(seed, crc32(key), index, *extra)``, so trials never share draw order and
can be generated in any order or in parallel.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import linalg
from .errors import HypothesisViolation
from .norms import (
    AB_PSD_TOL,
    Contraction,
    IsometricColumn,
    Isometry,
    require_ab_psd,
)

MASK64 = (1 << 64) - 1
COND_CAP = 100.0
AB_MODES = ("commuting-psd", "conjugated")


def key_hash(key: str) -> int:
    return zlib.crc32(key.encode("utf-8"))


def substream(seed: int, key: str = "", index: int = 0, *extra: int) -> np.random.Generator:
    """Independent generator for one trial."""
    words = [int(seed) & MASK64, key_hash(key), int(index) & MASK64]
    words.extend(int(e) & MASK64 for e in extra)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def _rng(rng, seed, index, key):
    return rng if rng is not None else substream(seed, key, index)


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def orthonormalize(g: np.ndarray) -> np.ndarray:
    """QR with the phases of R's diagonal moved into Q (Haar for Gaussian G)."""
    q, r = np.linalg.qr(g)
    d = r.diagonal()
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * ph


def haar_unitary(n: int, seed: int = 0, index: int = 0, *, rng=None) -> np.ndarray:
    rng = _rng(rng, seed, index, "unitary")
    return orthonormalize(complex_gaussian(rng, (n, n)))


def _conjugate(u: np.ndarray, lam) -> np.ndarray:
    return linalg.hermitian((u * np.asarray(lam, dtype=float)) @ u.conj().T)


def gen_posdef(n: int, a: float, b: float, seed: int = 0, index: int = 0, *,
               rng=None, force_endpoints: bool = True) -> np.ndarray:
    """Positive definite Z = U diag(lambda) U* with spectrum in [b, a].

    With endpoint forcing (default) lambda_1 = a and lambda_n = b exactly.
    """
    a, b = float(a), float(b)
    if not (a >= b > 0):
        raise ValueError(f"need a >= b > 0, got a={a}, b={b}")
    if force_endpoints and n < 2 and a != b:
        raise ValueError("endpoint forcing needs n >= 2")
    if a == b:
        return linalg.hermitian(a * np.eye(n))
    rng = _rng(rng, seed, index, "posdef")
    if force_endpoints:
        lam = np.concatenate([[a], np.sort(rng.uniform(b, a, n - 2))[::-1], [b]])
    else:
        lam = np.sort(rng.uniform(b, a, n))[::-1]
    return _conjugate(haar_unitary(n, rng=rng), lam)


def gen_psd(n: int, scale: float = 1.0, seed: int = 0, index: int = 0, *, rng=None,
            zero_prob: float = 0.2) -> np.ndarray:
    """Positive semidefinite matrix; each eigenvalue is zero with probability
    ``zero_prob`` (rank-deficient draws), otherwise uniform in (0, scale]."""
    rng = _rng(rng, seed, index, "psd")
    lam = scale * rng.uniform(0, 1, n)
    lam[rng.uniform(size=n) < zero_prob] = 0.0
    return _conjugate(haar_unitary(n, rng=rng), lam)


def gen_ab_pair(n: int, mode: str, seed: int = 0, index: int = 0, *, rng=None,
                cond_cap: float = COND_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """A pair (A, B) with AB >= 0.

    commuting-psd: A = U d1 U*, B = U d2 U* with a common unitary.
    conjugated: A = T invertible (condition number <= cond_cap), B = T^-1 S
    with S >= 0, so AB = S while A and B are not Hermitian.
    """
    if mode not in AB_MODES:
        raise ValueError(f"unknown pair mode {mode!r}; expected one of {AB_MODES}")
    rng = _rng(rng, seed, index, "abpair")
    if mode == "commuting-psd":
        u = haar_unitary(n, rng=rng)
        d1 = rng.uniform(0, 1, n)
        d2 = rng.uniform(0, 1, n)
        a, b = _conjugate(u, d1), _conjugate(u, d2)
    else:
        sigma = np.exp(rng.uniform(0, np.log(cond_cap), n))
        sigma /= sigma.min()
        u, v = haar_unitary(n, rng=rng), haar_unitary(n, rng=rng)
        t = (u * sigma) @ v.conj().T
        s = gen_psd(n, rng=rng)
        a, b = t, (v / sigma) @ u.conj().T @ s
    require_ab_psd(a, b, AB_PSD_TOL)
    return linalg.as_matrix(a), linalg.as_matrix(b)


def gen_isometry(n: int, k: int, seed: int = 0, index: int = 0, *, rng=None) -> Isometry:
    if not 1 <= k <= n:
        raise ValueError(f"isometry rank k={k} outside 1..{n}")
    rng = _rng(rng, seed, index, "isometry")
    return Isometry(orthonormalize(complex_gaussian(rng, (n, k))))


def gen_isometric_column(n: int, m: int, seed: int = 0, index: int = 0, *,
                         rng=None) -> IsometricColumn:
    """First n columns of a Haar (mn x mn) unitary, cut into m square blocks."""
    if m < 1:
        raise ValueError("need m >= 1 blocks")
    rng = _rng(rng, seed, index, "isocol")
    w = haar_unitary(m * n, rng=rng)[:, :n]
    return IsometricColumn(tuple(w[i * n:(i + 1) * n] for i in range(m)))


def gen_contraction(n: int, seed: int = 0, index: int = 0, *, rng=None) -> Contraction:
    """Gaussian matrix divided by (its norm times 1 + u), u uniform in [0, 1]."""
    rng = _rng(rng, seed, index, "contraction")
    g = complex_gaussian(rng, (n, n))
    top = linalg.svd(g).values[0]
    return Contraction(g / (top * (1 + rng.uniform(0, 1))))


def gen_positive_contraction(n: int, seed: int = 0, index: int = 0, *, rng=None) -> np.ndarray:
    """Hermitian X with spectrum in [0, 1]."""
    rng = _rng(rng, seed, index, "poscontraction")
    return _conjugate(haar_unitary(n, rng=rng), rng.uniform(0, 1, n))


def gen_unit_vector(n: int, seed: int = 0, index: int = 0, *, rng=None) -> np.ndarray:
    rng = _rng(rng, seed, index, "unit")
    g = complex_gaussian(rng, n)
    return g / np.linalg.norm(g)


def random_extremes(rng: np.random.Generator, max_ratio: float = 100.0) -> Tuple[float, float]:
    """Random (a, b): b log-uniform in [0.1, 10], a/b log-uniform in [1, max_ratio]."""
    b = float(10 ** rng.uniform(-1, 1))
    return b * float(np.exp(rng.uniform(0, np.log(max_ratio)))), b


@dataclass(frozen=True)
class EnsembleSpec:
    """Serializable description of one generated instance."""

    kind: str
    dim: int
    params: dict = field(default_factory=dict)
    seed: int = 0
    index: int = 0

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ValueError(f"unknown generator {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    def generate(self):
        rng = substream(self.seed, f"{self.kind}:{self.canonical_params()}", self.index, self.dim)
        return GENERATORS[self.kind](self.dim, rng, **self.params)

    def canonical_params(self) -> str:
        return json.dumps(self.params, sort_keys=True, separators=(",", ":"))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "params": dict(self.params),
                "seed": self.seed, "index": self.index}

    def digest(self) -> str:
        return f"{self.kind}(dim={self.dim},{self.canonical_params()})@{self.seed}#{self.index}"


GENERATORS = {
    "posdef": lambda n, rng, a=None, b=None: gen_posdef(
        n, *((a, b) if a is not None else random_extremes(rng)), rng=rng),
    "psd": lambda n, rng, scale=1.0: gen_psd(n, scale, rng=rng),
    "abpair": lambda n, rng, mode="commuting-psd": gen_ab_pair(n, mode, rng=rng),
    "isometry": lambda n, rng, k=1: gen_isometry(n, int(k), rng=rng),
    "isocol": lambda n, rng, m=2: gen_isometric_column(n, int(m), rng=rng),
    "contraction": lambda n, rng: gen_contraction(n, rng=rng),
    "poscontraction": lambda n, rng: gen_positive_contraction(n, rng=rng),
    "unit": lambda n, rng: gen_unit_vector(n, rng=rng),
}


def check_instance(kind: str, value) -> None:
    """Re-validate a generated value against its hypothesis class."""
    from .norms import require_posdef, require_psd

    if kind == "posdef":
        require_posdef(value)
    elif kind == "psd":
        require_psd(value)
    elif kind == "poscontraction":
        spec = require_psd(value, "X")
        if spec.largest > 1 + 1e-9:
            raise HypothesisViolation("X exceeds I")
    elif kind == "abpair":
        require_ab_psd(*value)
    elif kind == "isometry":
        Isometry(value.matrix if isinstance(value, Isometry) else value)
    elif kind == "isocol":
        IsometricColumn(value.blocks if isinstance(value, IsometricColumn) else value)
    elif kind == "contraction":
        Contraction(value.matrix if isinstance(value, Contraction) else value)
    elif kind == "unit":
        if abs(np.linalg.norm(value) - 1) > 1e-10:
            raise HypothesisViolation("vector is not of unit norm")
    else:
        raise ValueError(f"unknown generator {kind!r}")

"""Symmetric norms, majorization, Loewner order, compressions and the
validated structured maps (isometries, isometric columns, contractions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import HypothesisViolation, ShapeError, UnsupportedInputError

ORDER_TOL = 1e-9
AB_PSD_TOL = 1e-8
ISOMETRY_TOL = 1e-10
CONTRACTION_TOL = 1e-10


@dataclass(frozen=True)
class NormKind:
    """A symmetric norm: ``fan`` (param k), ``schatten`` (param p),
    ``operator`` or ``trace``.

    operator == fan:1 == schatten:inf and trace == fan:n == schatten:1.
    """

    tag: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.tag == "fan":
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise ValueError(f"Fan index must be an integer >= 1, got {self.param}")
            object.__setattr__(self, "param", int(self.param))
        elif self.tag == "schatten":
            if self.param is None or not self.param >= 1:
                raise ValueError(f"Schatten exponent must be >= 1, got {self.param}")
            object.__setattr__(self, "param", float(self.param))
        elif self.tag in ("operator", "trace"):
            if self.param is not None:
                raise ValueError(f"{self.tag} norm takes no parameter")
        else:
            raise ValueError(f"unknown norm kind {self.tag!r}")

    def __str__(self):
        if self.tag == "fan":
            return f"fan:{self.param}"
        if self.tag == "schatten":
            p = self.param
            return "schatten:inf" if math.isinf(p) else f"schatten:{p:g}"
        return {"operator": "op", "trace": "trace"}[self.tag]


def Fan(k: int) -> NormKind:
    return NormKind("fan", k)


def Schatten(p: float) -> NormKind:
    return NormKind("schatten", p)


Operator = NormKind("operator")
Trace = NormKind("trace")


def parse_norm(text: str) -> NormKind:
    """Parse ``fan:k``, ``schatten:p``, ``op`` or ``trace``."""
    t = text.strip().lower()
    if t in ("op", "operator", "inf"):
        return Operator
    if t == "trace":
        return Trace
    tag, sep, arg = t.partition(":")
    if not sep:
        raise ValueError(f"cannot parse norm {text!r}")
    if tag == "fan":
        return Fan(int(arg))
    if tag == "schatten":
        return Schatten(float(arg))
    raise ValueError(f"cannot parse norm {text!r}")


def norm_from_singular_values(mu: np.ndarray, kind: NormKind) -> float:
    mu = np.asarray(mu, dtype=float)
    if kind.tag == "operator":
        return float(mu[0])
    if kind.tag == "trace":
        return float(mu.sum())
    if kind.tag == "fan":
        if kind.param > mu.size:
            raise ValueError(f"Fan index {kind.param} exceeds {mu.size}")
        return float(mu[: kind.param].sum())
    p = kind.param
    top = float(mu[0])
    if math.isinf(p) or top == 0.0:
        return top
    return top * float(np.sum((mu / top) ** p)) ** (1.0 / p)


def sym_norm(m, kind: NormKind) -> float:
    """Unitarily invariant norm of M from its singular values."""
    return norm_from_singular_values(linalg.svd(m).values, kind)


def fan_norms(m) -> np.ndarray:
    """All Fan k-norms, k = 1..min(rows, cols)."""
    return np.cumsum(linalg.svd(m).values)


def require_posdef(z, name: str = "Z") -> linalg.Spectrum:
    try:
        spec = linalg.herm_eig(z)
    except linalg.NotHermitianError as exc:
        raise HypothesisViolation(f"{name} is not Hermitian") from exc
    if not spec.smallest > 0:
        raise HypothesisViolation(
            f"{name} is not positive definite (smallest eigenvalue {spec.smallest:.3e})"
        )
    return spec


def require_psd(a, name: str = "A", tol: float = ORDER_TOL) -> linalg.Spectrum:
    try:
        spec = linalg.herm_eig(a)
    except linalg.NotHermitianError as exc:
        raise HypothesisViolation(f"{name} is not Hermitian") from exc
    scale = max(1.0, abs(spec.largest))
    if spec.smallest < -tol * scale:
        raise HypothesisViolation(
            f"{name} is not positive semidefinite (smallest eigenvalue {spec.smallest:.3e})"
        )
    return spec


def spectral_radius(m, factors: Optional[Tuple] = None) -> float:
    """Largest |eigenvalue|.

    With ``factors=(A, Z)``, A >= 0 and Z > 0, M = AZ is similar to
    Z^{1/2} A Z^{1/2} and the radius is that matrix's top eigenvalue.
    Without factors only Hermitian input is supported.
    """
    if factors is not None:
        return float(real_eigenvalues_of_product(*factors)[0])
    a = linalg.as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeError("spectral radius of a non-square matrix")
    if not linalg.is_hermitian(a):
        raise UnsupportedInputError(
            "spectral radius needs a Hermitian matrix or an (A, Z) factorization"
        )
    lam = linalg.eigvalsh(a)
    return float(max(abs(lam[0]), abs(lam[-1])))


def real_eigenvalues_of_product(a, z) -> np.ndarray:
    """Eig(AZ) for A >= 0, Z > 0, descending, via Z^{1/2} A Z^{1/2}."""
    require_psd(a, "A")
    require_posdef(z, "Z")
    zh = linalg.sqrtm_psd(z)
    lam = np.array(linalg.eigvalsh(zh @ linalg.hermitian(a) @ zh))
    return np.maximum(lam, 0.0)


class Majorization(NamedTuple):
    holds: bool
    slack: np.ndarray


def weak_majorize(x: Sequence[float], y: Sequence[float], tol: float = ORDER_TOL,
                  sort: bool = True) -> Majorization:
    """x weakly majorized by y: every leading partial sum of x is at most y's.

    The slack vector holds partial_sum(y) - partial_sum(x).  With
    ``sort=False`` unsorted input is rejected instead of sorted.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if sort:
        x = np.sort(x)[::-1]
        y = np.sort(y)[::-1]
    elif np.any(np.diff(x) > 0) or np.any(np.diff(y) > 0):
        raise ValueError("inputs must be sorted nonincreasing")
    sx, sy = np.cumsum(x), np.cumsum(y)
    slack = sy - sx
    scale = max(1.0, float(np.max(np.abs(sx), initial=0)), float(np.max(np.abs(sy), initial=0)))
    return Majorization(bool(np.all(slack >= -tol * scale)), slack)


class Order(NamedTuple):
    holds: bool
    margin: float
    scale: float


def loewner_geq(a, b, tol: float = ORDER_TOL) -> Order:
    """A >= B in the Loewner order; margin is the smallest eigenvalue of A - B."""
    ha, hb = linalg.hermitian(a), linalg.hermitian(b)
    if ha.shape != hb.shape:
        raise ShapeError(f"cannot compare {ha.shape} with {hb.shape}")
    margin = float(linalg.eigvalsh(ha - hb)[-1])
    scale = max(1.0, op_norm_hermitian(ha), op_norm_hermitian(hb))
    return Order(margin >= -tol * scale, margin, scale)


def op_norm_hermitian(h) -> float:
    lam = linalg.eigvalsh(h)
    return float(max(abs(lam[0]), abs(lam[-1])))


@dataclass(frozen=True, eq=False)
class Isometry:
    """n x k matrix with orthonormal columns spanning a subspace."""

    matrix: np.ndarray

    def __post_init__(self):
        p = linalg.as_matrix(self.matrix)
        n, k = p.shape
        if k > n:
            raise HypothesisViolation(f"isometry cannot have more columns ({k}) than rows ({n})")
        err = np.linalg.norm(p.conj().T @ p - np.eye(k))
        if err > k * ISOMETRY_TOL:
            raise HypothesisViolation(f"columns are not orthonormal (defect {err:.3e})")
        object.__setattr__(self, "matrix", p)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def projection(self) -> np.ndarray:
        return linalg.hermitian(self.matrix @ self.matrix.conj().T)


def _as_isometry(p) -> Isometry:
    return p if isinstance(p, Isometry) else Isometry(p)


def compress(z, p) -> np.ndarray:
    """Compression P* Z P of Z onto the range of the isometry P (k x k)."""
    pm = _as_isometry(p).matrix
    zh = linalg.hermitian(z)
    if zh.shape[0] != pm.shape[0]:
        raise ShapeError(f"cannot compress {zh.shape} onto isometry {pm.shape}")
    return linalg.hermitian(pm.conj().T @ zh @ pm)


def expand(c, p) -> np.ndarray:
    """Projection form E Z E = P (P* Z P) P* of a compression."""
    pm = _as_isometry(p).matrix
    return linalg.hermitian(pm @ linalg.hermitian(c) @ pm.conj().T)


@dataclass(frozen=True, eq=False)
class IsometricColumn:
    """Blocks A_1..A_m (n x n) with sum A_i* A_i = I."""

    blocks: Tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(linalg.as_matrix(b) for b in self.blocks)
        if not blocks:
            raise HypothesisViolation("isometric column needs at least one block")
        n = blocks[0].shape[1]
        if any(b.shape != (n, n) for b in blocks):
            raise HypothesisViolation("isometric column blocks must all be n x n")
        err = np.linalg.norm(sum(b.conj().T @ b for b in blocks) - np.eye(n))
        if err > n * ISOMETRY_TOL:
            raise HypothesisViolation(f"sum of A_i* A_i differs from I by {err:.3e}")
        object.__setattr__(self, "blocks", blocks)

    def congruence(self, zs) -> np.ndarray:
        """sum A_i* Z_i A_i."""
        if len(zs) != len(self.blocks):
            raise ShapeError(f"{len(zs)} matrices for {len(self.blocks)} blocks")
        return linalg.hermitian(sum(a.conj().T @ z @ a for a, z in zip(self.blocks, zs)))


@dataclass(frozen=True, eq=False)
class Contraction:
    matrix: np.ndarray

    def __post_init__(self):
        a = linalg.as_matrix(self.matrix)
        mu = linalg.svd(a).values
        if mu[0] > 1 + CONTRACTION_TOL:
            raise HypothesisViolation(f"not a contraction (norm {mu[0]:.12g})")
        object.__setattr__(self, "matrix", a)


@dataclass(frozen=True, eq=False)
class KrausMap:
    """Completely positive map X -> sum A_i* X A_i with sum A_i* A_i <= I."""

    blocks: Tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(linalg.as_matrix(b) for b in self.blocks)
        if not blocks:
            raise HypothesisViolation("Kraus family needs at least one operator")
        n = blocks[0].shape[1]
        m = blocks[0].shape[0]
        if any(b.shape != (m, n) for b in blocks):
            raise HypothesisViolation("Kraus operators must share a shape")
        gram = linalg.hermitian(sum(b.conj().T @ b for b in blocks))
        top = float(linalg.eigvalsh(gram)[0])
        if top > 1 + CONTRACTION_TOL:
            raise HypothesisViolation(f"sum A_i* A_i exceeds I (top eigenvalue {top:.12g})")
        object.__setattr__(self, "blocks", blocks)

    def __call__(self, x) -> np.ndarray:
        return linalg.hermitian(sum(a.conj().T @ x @ a for a in self.blocks))


def require_ab_psd(a, b, tol: float = AB_PSD_TOL) -> np.ndarray:
    """Check that the product AB is positive semidefinite (hence Hermitian).

    A and B themselves need not be Hermitian.
    """
    am, bm = linalg.as_matrix(a), linalg.as_matrix(b)
    if am.shape[1] != bm.shape[0] or am.shape[0] != bm.shape[1]:
        raise ShapeError(f"AB and BA need compatible shapes, got {am.shape}, {bm.shape}")
    prod = am @ bm
    size = float(np.linalg.norm(prod))
    if linalg.symmetrization_defect(prod) > tol * size:
        raise HypothesisViolation("AB is not Hermitian")
    lam = linalg.eigvalsh(linalg.hermitian(prod, tol=tol))
    if lam[-1] < -tol * size:
        raise HypothesisViolation(f"AB is not positive semidefinite (eigenvalue {lam[-1]:.3e})")
    return prod


def normality_defect(m) -> float:
    """||M M* - M* M||_F relative to ||M||_F^2."""
    a = linalg.as_matrix(m)
    size = float(np.linalg.norm(a)) ** 2
    if size == 0:
        return 0.0
    return float(np.linalg.norm(a @ a.conj().T - a.conj().T @ a)) / size

"""Dense complex linear algebra for desk-scale matrices.

Hermitian eigenproblems are solved with cyclic Jacobi rotations; singular
values come from the eigendecomposition of the Gram matrix, and matrix
functions are applied through the spectral decomposition.  Every routine
returns fresh, read-only arrays.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Callable, NamedTuple, Optional

import numba
import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    NonFiniteError,
    NotHermitianError,
    ShapeError,
    SingularMatrixError,
)

EIG_TOL = 1e-13
MAX_SWEEPS = 64
HERMITIAN_DEFECT_TOL = 1e-8
SV_CLAMP = 1e-12
INVERSE_TOL = 1e-8
# eigenvalues this far below a closed domain boundary (relative to the
# spectral scale) are treated as roundoff and clamped onto it
DOMAIN_SLACK = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array (a copy)."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    return _frozen(a)


def symmetrization_defect(m: np.ndarray) -> float:
    """Frobenius norm of the skew-Hermitian part."""
    return float(np.linalg.norm((m - m.conj().T) / 2))


def hermitian(m, tol: float = HERMITIAN_DEFECT_TOL) -> np.ndarray:
    """Return (M + M*)/2 with a real diagonal.

    Raises NotHermitianError when the skew part exceeds ``tol * ||M||_F``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"Hermitian matrix must be square, got {a.shape}")
    defect = symmetrization_defect(a)
    limit = tol * float(np.linalg.norm(a))
    if defect > limit:
        raise NotHermitianError(defect, limit)
    h = (a + a.conj().T) / 2
    h[np.diag_indices_from(h)] = h.diagonal().real
    return _frozen(h)


def is_hermitian(m, tol: float = HERMITIAN_DEFECT_TOL) -> bool:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return symmetrization_defect(a) <= tol * float(np.linalg.norm(a))


@numba.njit(cache=True)
def _jacobi_kernel(h, tol, max_sweeps):
    n = h.shape[0]
    a = h.copy()
    v = np.eye(n, dtype=np.complex128)
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += a[i, j].real ** 2 + a[i, j].imag ** 2
    norm = math.sqrt(norm)
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        off = math.sqrt(off)
        if off <= tol * norm:
            return a, v, sweep, off
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                # phase-rotate q so that the (p, q) entry is real, then
                # apply the classical real rotation
                ph = (apq / mag).conjugate()
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                wpp = c + 0j
                wpq = s + 0j
                wqp = -s * ph
                wqq = c * ph
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = akp * wpp + akq * wqp
                    a[k, q] = akp * wpq + akq * wqq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = wpp.conjugate() * apk + wqp.conjugate() * aqk
                    a[q, k] = wpq.conjugate() * apk + wqq.conjugate() * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = vkp * wpp + vkq * wqp
                    v[k, q] = vkp * wpq + vkq * wqq
    return a, v, -1, off


class Spectrum(NamedTuple):
    """Eigenvalues in nonincreasing order and the unitary whose columns are
    the matching eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def largest(self) -> float:
        return float(self.values[0])

    @property
    def smallest(self) -> float:
        return float(self.values[-1])


def herm_eig(h, tol: float = EIG_TOL, max_sweeps: int = MAX_SWEEPS) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Converged when the off-diagonal Frobenius mass is at most
    ``tol * ||H||_F``; raises ConvergenceError after ``max_sweeps`` sweeps.
    """
    hm = hermitian(h)
    if hm.shape[0] == 0:
        raise ShapeError("empty matrix")
    d, v, sweeps, off = _jacobi_kernel(np.ascontiguousarray(hm), tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(off, max_sweeps)
    lam = d.diagonal().real
    order = np.argsort(-lam, kind="stable")
    return Spectrum(_frozen(lam[order].copy()), _frozen(v[:, order].copy()))


def eigvalsh(h) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    return herm_eig(h).values


class SingularValues(NamedTuple):
    """Nonincreasing singular values, optionally with thin factors so that
    ``M = u @ diag(values) @ v.conj().T``."""

    values: np.ndarray
    u: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None


def _complete_orthonormal(q: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns of ``q`` not flagged in ``keep`` with unit vectors
    orthogonal to everything else."""
    m, r = q.shape
    out = q.copy()
    basis = [out[:, j] for j in range(r) if keep[j]]
    candidates = iter(np.eye(m, dtype=np.complex128))
    for j in range(r):
        if keep[j]:
            continue
        for e in candidates:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w = w - b * np.vdot(b, w)
            nrm = np.linalg.norm(w)
            if nrm > 0.5:
                w = w / nrm
                out[:, j] = w
                basis.append(w)
                break
    return out


def svd(m, vectors: bool = False) -> SingularValues:
    """Singular values via the eigendecomposition of the smaller Gram matrix
    M*M = V diag(lambda) V*, taking mu_i = ||M v_i||.

    Values below ``1e-12 * mu_1`` are clamped to zero.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    transpose = rows < cols
    if transpose:
        a = a.conj().T
    spec = herm_eig(a.conj().T @ a)
    # ||M v_i|| is accurate to eps*||M|| even for tiny values, unlike the
    # square root of the Gram eigenvalue (accurate only to sqrt(eps)*||M||)
    av = a @ spec.vectors
    mu = np.sqrt(np.einsum("ij,ij->j", av.real, av.real) + np.einsum("ij,ij->j", av.imag, av.imag))
    order = np.argsort(-mu, kind="stable")
    mu, av = mu[order], av[:, order]
    if mu.size and mu[0] > 0:
        mu[mu < SV_CLAMP * mu[0]] = 0.0
    else:
        mu[:] = 0.0
    if not vectors:
        return SingularValues(_frozen(mu))
    v = np.array(spec.vectors)[:, order]
    u = np.zeros((a.shape[0], mu.size), dtype=np.complex128)
    keep = mu > 0
    u[:, keep] = av[:, keep] / mu[keep]
    u = _complete_orthonormal(u, keep)
    if transpose:
        u, v = v, u
    return SingularValues(_frozen(mu), _frozen(u), _frozen(v))


def apply_fn(
    h,
    f: Callable[[np.ndarray], np.ndarray],
    domain: Optional[tuple] = None,
) -> np.ndarray:
    """Spectral calculus: ``U f(diag(lambda)) U*``.

    ``domain`` is ``(lower, strict)``; when omitted it is read from
    ``f.domain`` if present.  Eigenvalues below a closed lower bound by no
    more than roundoff are clamped onto it.
    """
    spec = herm_eig(h)
    lam = np.array(spec.values)
    if domain is None:
        domain = getattr(f, "domain", None)
    if domain is not None:
        lower, strict = domain
        scale = max(1.0, float(np.max(np.abs(lam))))
        if strict:
            if lam[-1] <= lower:
                raise DomainError(
                    f"spectrum reaches {lam[-1]:.6g}, function requires values > {lower}"
                )
        else:
            if lam[-1] < lower - DOMAIN_SLACK * scale:
                raise DomainError(
                    f"spectrum reaches {lam[-1]:.6g}, function requires values >= {lower}"
                )
            lam = np.maximum(lam, lower)
    fl = np.asarray(f(lam), dtype=float)
    u = spec.vectors
    return hermitian((u * fl) @ u.conj().T)


def compound(z, k: int) -> np.ndarray:
    """k-th compound (antisymmetric tensor power) of a square matrix.

    Row and column index sets are k-subsets in lexicographic order; entry
    (S, T) is the minor det Z[S, T].
    """
    a = as_matrix(z)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ShapeError("compound requires a square matrix")
    if not 1 <= k <= n:
        raise ValueError(f"compound order k={k} outside 1..{n}")
    subsets = np.array(list(combinations(range(n), k)), dtype=np.intp)
    blocks = a[subsets[:, None, :, None], subsets[None, :, None, :]]
    c = np.linalg.det(blocks)
    if is_hermitian(a):
        return hermitian(c)
    return _frozen(np.ascontiguousarray(c))


def adjoint(m) -> np.ndarray:
    return _frozen(as_matrix(m).conj().T.copy())


def trace(m) -> complex:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ShapeError("trace of a non-square matrix")
    return complex(np.trace(a))


def mul(*ms) -> np.ndarray:
    """Shape-checked product of a chain of matrices."""
    out = as_matrix(ms[0])
    for m in ms[1:]:
        b = as_matrix(m)
        if out.shape[1] != b.shape[0]:
            raise ShapeError(f"cannot multiply {out.shape} by {b.shape}")
        out = out @ b
    return _frozen(np.ascontiguousarray(out))


def inv(m, tol: float = INVERSE_TOL) -> np.ndarray:
    """Inverse of a square nonsingular matrix, residual-checked."""
    a = as_matrix(m)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ShapeError("inverse of a non-square matrix")
    try:
        x = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is singular") from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("matrix is singular")
    resid = np.linalg.norm(a @ x - np.eye(n))
    if resid > tol * max(1.0, math.sqrt(n)):
        raise SingularMatrixError(f"matrix is numerically singular (residual {resid:.3e})")
    return _frozen(x)


def sqrtm_psd(h) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    return apply_fn(h, np.sqrt, domain=(0.0, False))

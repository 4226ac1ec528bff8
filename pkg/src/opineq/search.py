"""Sharpness search and counterexample hunting.

``maximize_ratio`` hill-climbs the ratio lhs/rhs of an inequality over
latent generator parameters (eigenvalues, Givens angles, vector
coordinates), so every iterate stays inside the hypothesis class.  One
multistart point is always the analytic extremal witness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import linalg
from .ensembles import substream
from .errors import HypothesisViolation, LinalgError
from .norms import Fan, NormKind, norm_from_singular_values
from .opconvex import kappa
from .report import TOL, CheckReport, decode_matrix, encode


@dataclass(frozen=True)
class SearchResult:
    target: str
    best_ratio: float
    bound: float
    witness: dict
    iterations: int
    converged: bool
    norm: str = "fan:1"
    dims: int = 2

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "best_ratio": self.best_ratio,
            "bound": self.bound,
            "ratio_over_bound": self.best_ratio / self.bound,
            "iterations": self.iterations,
            "converged": self.converged,
            "norm": self.norm,
            "dims": self.dims,
            "witness": encode(self.witness),
        }


def analytic_extremal_lemma(a: float, b: float):
    """Z = diag(a, b) and the unit vector attaining ||Zh|| / <h, Zh> = kappa1."""
    a, b = float(a), float(b)
    if not a >= b > 0:
        raise ValueError(f"need a >= b > 0, got a={a}, b={b}")
    z = np.diag([a, b]).astype(np.complex128)
    h = np.array([math.sqrt(b / (a + b)), math.sqrt(a / (a + b))], dtype=np.complex128)
    zh = z @ h
    return z, h, float(np.linalg.norm(zh) / np.vdot(h, zh).real)


# latent parametrization ---------------------------------------------------

def _pairs(n):
    return [(p, q) for p in range(n) for q in range(p + 1, n)]


def givens_unitary(angles: np.ndarray, n: int) -> np.ndarray:
    """Product of complex Givens rotations, one (theta, phi) per index pair."""
    u = np.eye(n, dtype=np.complex128)
    for j, (p, q) in enumerate(_pairs(n)):
        th, ph = angles[2 * j], angles[2 * j + 1]
        if th == 0.0:
            continue
        c, s = math.cos(th), math.sin(th)
        e = complex(math.cos(ph), -math.sin(ph))
        g = np.array([[c, -s * e.conjugate()], [s * e, c]])
        u[:, [p, q]] = u[:, [p, q]] @ g
    return u


def _n_angles(n):
    return n * (n - 1)


def _first_column_angles(n: int, h0: float, h1: float) -> np.ndarray:
    """Angles whose unitary maps e_1 to h0 e_1 + h1 e_n (h0, h1 real >= 0)."""
    ang = np.zeros(_n_angles(n))
    j = _pairs(n).index((0, n - 1))
    ang[2 * j] = math.atan2(h1, h0)
    return ang


class _Reader:
    def __init__(self, x):
        self.x, self.i = x, 0

    def take(self, k):
        out = self.x[self.i:self.i + k]
        self.i += k
        return out


def _spectrum(x, n, a, b):
    inner = b + (a - b) * np.clip(x, 0.0, 1.0)
    return np.concatenate([[a], inner, [b]]) if n >= 2 else np.array([a])


def _unit_from(x, n):
    v = x[:n] + 1j * x[n:]
    nrm = np.linalg.norm(v)
    if nrm == 0:
        v = np.zeros(n, dtype=np.complex128)
        v[0] = 1
        return v
    return v / nrm


def _psd_from(rd, n, upper=None):
    v = givens_unitary(rd.take(_n_angles(n)), n)
    d = np.abs(rd.take(n))
    if upper is not None:
        d = np.clip(d, 0.0, upper)
    return (v * d) @ v.conj().T


class _Target:
    """Ratio lhs/rhs of one inequality, its bound, and the latent layout."""

    def __init__(self, n, a, b, norm):
        self.n, self.a, self.b, self.norm = n, a, b, norm
        self.k = kappa(a, b)

    def decode_z(self, rd):
        n = self.n
        u = givens_unitary(rd.take(_n_angles(n)), n)
        lam = _spectrum(rd.take(max(n - 2, 0)), n, self.a, self.b)
        return u, lam

    def z_size(self):
        return _n_angles(self.n) + max(self.n - 2, 0)

    def z_seed(self):
        return np.concatenate([np.zeros(_n_angles(self.n)), 0.5 * np.ones(max(self.n - 2, 0))])

    def vector_seed(self, h0, h1):
        n = self.n
        re = np.zeros(n)
        re[0], re[-1] = h0, h1
        return np.concatenate([re, np.zeros(n)])


class _Lemma(_Target):
    bound_name = "kappa1"

    def size(self):
        return self.z_size() + 2 * self.n

    def bound(self):
        return self.k.kappa1

    def decode(self, x):
        rd = _Reader(x)
        u, lam = self.decode_z(rd)
        return {"Z": (u * lam) @ u.conj().T, "h": _unit_from(rd.take(2 * self.n), self.n)}

    @staticmethod
    def ratio(m, norm):
        zh = m["Z"] @ m["h"]
        return float(np.linalg.norm(zh) / np.vdot(m["h"], zh).real)

    def seeds(self):
        a, b = self.a, self.b
        return [np.concatenate([self.z_seed(),
                                self.vector_seed(math.sqrt(b / (a + b)), math.sqrt(a / (a + b)))])]


class _Kantorovich(_Lemma):
    def bound(self):
        return self.k.kappa2

    @staticmethod
    def ratio(m, norm):
        z, h = m["Z"], m["h"]
        zinv = linalg.inv(z)
        return float(np.vdot(h, z @ h).real * np.vdot(h, zinv @ h).real)

    def seeds(self):
        r = math.sqrt(0.5)
        return [np.concatenate([self.z_seed(), self.vector_seed(r, r)])]


class _Thm12(_Target):
    def size(self):
        return self.z_size() + _n_angles(self.n) + 2 * self.n

    def bound(self):
        return self.k.kappa1

    def decode(self, x):
        n = self.n
        rd = _Reader(x)
        u, lam = self.decode_z(rd)
        v = givens_unitary(rd.take(_n_angles(n)), n)
        d1, d2 = np.abs(rd.take(n)), np.abs(rd.take(n))
        return {"A": (v * d1) @ v.conj().T, "B": (v * d2) @ v.conj().T,
                "Z": (u * lam) @ u.conj().T}

    @staticmethod
    def ratio(m, norm):
        a, b, z = m["A"], m["B"], m["Z"]
        den = norm_from_singular_values(linalg.svd(b @ z @ a).values, norm)
        if den == 0:
            return -math.inf
        return norm_from_singular_values(linalg.svd(z @ a @ b).values, norm) / den

    def seeds(self):
        n, a, b = self.n, self.a, self.b
        e1 = np.zeros(n)
        e1[0] = 1.0
        return [np.concatenate([self.z_seed(),
                                _first_column_angles(n, math.sqrt(b / (a + b)), math.sqrt(a / (a + b))),
                                e1, e1])]


class _Eq1(_Target):
    """Ratio ||AB|| / ||BA|| for A = T invertible, B = T^-1 S, S >= 0."""

    def size(self):
        return 2 * self.n * self.n + _n_angles(self.n) + self.n

    def bound(self):
        return 1.0

    def decode(self, x):
        n = self.n
        rd = _Reader(x)
        t = (rd.take(n * n) + 1j * rd.take(n * n)).reshape(n, n)
        s = _psd_from(rd, n)
        return {"A": t, "B": linalg.inv(t, tol=1e-6) @ s}

    @staticmethod
    def ratio(m, norm):
        a, b = m["A"], m["B"]
        den = norm_from_singular_values(linalg.svd(b @ a).values, norm)
        if den == 0:
            return -math.inf
        return norm_from_singular_values(linalg.svd(a @ b).values, norm) / den

    def seeds(self):
        n = self.n
        eye = np.eye(n).reshape(-1)
        return [np.concatenate([eye, np.zeros(n * n), np.zeros(_n_angles(n)),
                                np.linspace(1.0, 0.5, n)])]


class _Cor13(_Target):
    """Ratio of leading partial sums of Sing(AZ) and Eig(AZ)."""

    def size(self):
        return self.z_size() + _n_angles(self.n) + self.n

    def bound(self):
        return self.k.kappa1

    def decode(self, x):
        rd = _Reader(x)
        u, lam = self.decode_z(rd)
        return {"A": _psd_from(rd, self.n), "Z": (u * lam) @ u.conj().T}

    @staticmethod
    def ratio(m, norm):
        a, z = m["A"], m["Z"]
        n = z.shape[0]
        k = {"operator": 1, "trace": n}.get(norm.tag, norm.param if norm.tag == "fan" else 1)
        zh = linalg.sqrtm_psd(z)
        eig = np.maximum(linalg.eigvalsh(zh @ linalg.hermitian(a) @ zh), 0)
        den = float(np.sum(eig[:k]))
        if den <= 0:
            return -math.inf
        return float(np.sum(linalg.svd(a @ z).values[:k])) / den

    def seeds(self):
        n, a, b = self.n, self.a, self.b
        e1 = np.zeros(n)
        e1[0] = 1.0
        return [np.concatenate([self.z_seed(),
                                _first_column_angles(n, math.sqrt(b / (a + b)), math.sqrt(a / (a + b))),
                                e1])]


class _Cor14(_Cor13):
    @staticmethod
    def ratio(m, norm):
        return _Cor13.ratio(m, Fan(1))


class _Cor15(_Target):
    """Largest eigenvalue of Z^-1/2 XZX Z^-1/2 for 0 <= X <= I."""

    def size(self):
        return self.z_size() + _n_angles(self.n) + self.n

    def bound(self):
        return self.k.kappa2

    def decode(self, x):
        rd = _Reader(x)
        u, lam = self.decode_z(rd)
        return {"X": _psd_from(rd, self.n, upper=1.0), "Z": (u * lam) @ u.conj().T}

    @staticmethod
    def ratio(m, norm):
        x, z = m["X"], m["Z"]
        zih = linalg.apply_fn(z, lambda t: 1 / np.sqrt(t), domain=(0.0, True))
        return float(linalg.eigvalsh(zih @ x @ z @ x @ zih)[0])

    def seeds(self):
        n = self.n
        e1 = np.zeros(n)
        e1[0] = 1.0
        r = math.sqrt(0.5)
        return [np.concatenate([self.z_seed(), _first_column_angles(n, r, r), e1])]


TARGETS: Dict[str, type] = {
    "eq1": _Eq1,
    "lem1.1": _Lemma,
    "thm1.2": _Thm12,
    "cor1.3": _Cor13,
    "cor1.4": _Cor14,
    "cor1.5": _Cor15,
    "cor1.6-7": _Kantorovich,
    "cor1.8": _Kantorovich,
}


def witness_ratio(target: str, witness: dict, norm: NormKind = Fan(1)) -> float:
    """Re-evaluate a search witness from its serialized matrices."""
    if target not in TARGETS:
        raise ValueError(f"unknown search target {target!r}")
    mats = {k: decode_matrix(v) for k, v in witness.items()}
    if "h" in mats:
        mats["h"] = mats["h"].reshape(-1)
    return TARGETS[target].ratio(mats, norm)


def _safe(fn: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x):
        try:
            v = fn(x)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            return -math.inf
        return v if math.isfinite(v) else -math.inf
    return wrapped


def hill_climb(f, x0, budget: int, step: float = 0.25, min_step: float = 1e-10,
               patience: int = 8):
    """First-improvement coordinate search in fixed coordinate order.

    A coordinate counts as rejected when both +step and -step fail to
    improve; after ``patience`` consecutive rejections the step halves.
    Returns (x, f(x), evaluations, converged).
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    evals = 1
    d = x.size
    i = 0
    rejections = 0
    while evals < budget and step >= min_step:
        improved = False
        for sgn in (1.0, -1.0):
            if evals >= budget:
                break
            y = x.copy()
            y[i] += sgn * step
            fy = f(y)
            evals += 1
            if fy > fx:
                x, fx = y, fy
                improved = True
                break
        if improved:
            rejections = 0
        else:
            rejections += 1
            if rejections >= patience:
                step /= 2
                rejections = 0
        i = (i + 1) % d
    return x, fx, evals, step < min_step


def maximize_ratio(check_id: str, dims: int = 2, budget: int = 10_000, seed: int = 0,
                   a: float = 8.0, b: float = 2.0, norm: NormKind = Fan(1),
                   starts: int = 16) -> SearchResult:
    """Multistart hill climbing of an inequality's ratio toward its bound."""
    if check_id not in TARGETS:
        raise ValueError(f"unknown search target {check_id!r}; "
                         f"choose from {', '.join(TARGETS)}")
    if dims < 2:
        raise ValueError("search needs dims >= 2")
    a, b = max(a, b), min(a, b)
    tgt = TARGETS[check_id](dims, a, b, norm)
    objective = _safe(lambda x: tgt.ratio(tgt.decode(x), norm))
    starts = max(16, starts)
    points = list(tgt.seeds())
    for s in range(len(points), starts):
        rng = substream(seed, f"search:{check_id}", s, dims)
        points.append(rng.normal(0.0, 1.0, tgt.size()))
    per = max(1, budget // starts)
    best = (-math.inf, None, False)
    total = 0
    for j, x0 in enumerate(points):
        share = per + (budget - per * starts if j == 0 else 0)
        x, fx, used, conv = hill_climb(objective, x0, max(1, share))
        total += used
        if fx > best[0]:
            best = (fx, x, conv)
    fx, x, conv = best
    witness = {k: np.asarray(v) for k, v in tgt.decode(x).items()}
    return SearchResult(check_id, float(fx), float(tgt.bound()), witness, total, bool(conv),
                        str(norm), dims)


# counterexample hunting -----------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """A violating trial and its shrunk witness."""

    index: int
    trials_run: int
    original: CheckReport
    report: CheckReport
    witness: Dict[str, np.ndarray]
    magnitude: float
    shrunk_magnitude: float
    steps: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "trials_run": self.trials_run,
            "magnitude": self.magnitude,
            "shrunk_magnitude": self.shrunk_magnitude,
            "steps": list(self.steps),
            "witness": encode(self.witness),
            "original": self.original.to_dict(),
            "report": self.report.to_dict(),
        }


def _magnitude(rep: CheckReport) -> float:
    return -rep.margin / rep.scale


def round_sig(m: np.ndarray, digits: int = 3) -> np.ndarray:
    """Round real and imaginary parts entrywise to ``digits`` significant digits."""
    r = np.vectorize(lambda v: float(f"{v:.{digits}g}"), otypes=[float])
    m = np.asarray(m, dtype=np.complex128)
    return r(m.real) + 1j * r(m.imag)


class _Shrinker:
    def __init__(self, prog, tol):
        self.prog, self.tol = prog, tol

    def attempt(self, env, threshold):
        from .iql import IqlRuntimeError, evaluate_env, validate

        try:
            validate(env)
            rep = evaluate_env(self.prog, env, self.tol,
                               digest={"mode": "iql-shrunk",
                                       "dims": sorted({b.value.shape[0] for b in env.values()})})
        except (HypothesisViolation, IqlRuntimeError, LinalgError, ValueError):
            return None
        if rep.passed or _magnitude(rep) < threshold:
            return None
        return rep

    def drop_index(self, env, i):
        out = {}
        for name, b in env.items():
            v = b.value
            rows = np.delete(v, i, axis=0)
            if v.shape[0] == v.shape[1]:
                rows = np.delete(rows, i, axis=1)
            if b.generator == "unit":
                nrm = np.linalg.norm(rows)
                if nrm == 0:
                    return None
                rows = rows / nrm
            out[name] = b.with_value(rows)
        return out

    def shrink(self, env, rep):
        threshold = _magnitude(rep) / 2
        steps = []
        # dimension reduction: delete one coordinate from every binding
        while True:
            dims = {b.value.shape[0] for b in env.values()}
            if len(dims) != 1 or dims.pop() <= 1:
                break
            n = next(iter(env.values())).value.shape[0]
            for i in range(n):
                cand = self.drop_index(env, i)
                got = cand and self.attempt(cand, threshold)
                if got:
                    env, rep = cand, got
                    steps.append(f"drop coordinate {i + 1} of {n}")
                    break
            else:
                break
        # spectral snapping: interior eigenvalues move to the nearer extreme
        for name, b in env.items():
            if b.generator != "posdef":
                continue
            spec = linalg.herm_eig(b.value)
            lam = np.array(spec.values)
            for j in range(1, lam.size - 1):
                target = lam[0] if lam[0] - lam[j] <= lam[j] - lam[-1] else lam[-1]
                if lam[j] == target:
                    continue
                trial = lam.copy()
                trial[j] = target
                u = spec.vectors
                cand = {**env, name: b.with_value(linalg.hermitian((u * trial) @ u.conj().T))}
                got = self.attempt(cand, threshold)
                if got:
                    env, rep, lam = cand, got, trial
                    b = env[name]
                    steps.append(f"snap eigenvalue {j + 1} of {name}")
        # entry rounding to 3 significant digits
        for name, b in env.items():
            rounded = round_sig(b.value)
            if np.array_equal(rounded, b.value):
                continue
            cand = {**env, name: b.with_value(rounded)}
            got = self.attempt(cand, threshold)
            if got:
                env, rep = cand, got
                steps.append(f"round {name}")
        return env, rep, tuple(steps)


def hunt_violation(prog, trials: int = 10_000, seed: int = 0, tol: float = TOL,
                   shrink: bool = True) -> Optional[Violation]:
    """Evaluate a parsed query over its ensembles until a trial violates it.

    The first violation is shrunk greedily (coordinate deletion, snapping of
    interior eigenvalues of positive definite bindings to the extremes, then
    rounding to 3 significant digits); each step is kept only while the
    normalized violation stays at least half of the original.
    """
    from .iql import bind, evaluate_env

    if trials < 1:
        raise ValueError("trials must be >= 1")
    for index in range(trials):
        env = bind(prog, seed, index)
        dims = sorted({b.value.shape[0] for b in env.values()})
        rep = evaluate_env(prog, env, tol,
                           digest={"mode": "iql", "seed": seed, "index": index, "dims": dims})
        if rep.passed:
            continue
        steps: Tuple[str, ...] = ()
        small_env, small = env, rep
        if shrink:
            small_env, small, steps = _Shrinker(prog, tol).shrink(env, rep)
        witness = {k: b.value for k, b in small_env.items()}
        return Violation(index, index + 1, rep, small, witness, _magnitude(rep),
                         _magnitude(small), steps)
    return None

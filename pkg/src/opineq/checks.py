"""Margin-reporting checks, one per inequality.

Every check validates its hypotheses first (raising HypothesisViolation,
never returning a failed report for malformed input), evaluates both
sides and returns a CheckReport.  Kantorovich constants always come from
the computed extremal eigenvalues.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import linalg
from .errors import HypothesisViolation, ShapeError
from .norms import (
    Contraction,
    Fan,
    IsometricColumn,
    Isometry,
    KrausMap,
    NormKind,
    compress,
    loewner_geq,
    norm_from_singular_values,
    normality_defect,
    real_eigenvalues_of_product,
    require_ab_psd,
    require_posdef,
    require_psd,
)
from .opconvex import KantorovichConstants, OperatorConvexFn, kappa, vanishes_at_zero
from .report import TOL, CheckReport, Part, build_report

NORMALITY_TOL = 1e-8
UNIT_TOL = 1e-10

# reference instance for the singular-value counterexample
REF_A = np.diag([1.0, 4.0])
REF_B = np.diag([4.0, 1.0])
REF_Z = np.array([[5.0, 3.0], [3.0, 5.0]])


def scalar_part(name: str, lhs: float, rhs: float, constant: float = 1.0,
                scaled: str = "rhs") -> Part:
    lhs, rhs = float(lhs), float(rhs)
    if scaled == "rhs":
        small, big = lhs, constant * rhs
    else:
        small, big = constant * lhs, rhs
    return Part(name, lhs, rhs, float(constant), big - small,
                max(1.0, abs(small), abs(big)), scaled)


def order_part(name: str, lhs, rhs, constant: float = 1.0, scaled: str = "rhs") -> Part:
    """Part for ``lhs <= constant * rhs`` (or ``constant * lhs <= rhs``) in
    the Loewner order."""
    if scaled == "rhs":
        small, big = lhs, constant * np.asarray(rhs)
    else:
        small, big = constant * np.asarray(lhs), rhs
    order = loewner_geq(big, small)
    return Part(name, linalg.hermitian(lhs), linalg.hermitian(rhs), float(constant),
                order.margin, order.scale, scaled)


def constants_of(z) -> KantorovichConstants:
    spec = require_posdef(z)
    return kappa(spec.largest, spec.smallest)


def _square_pair(a, b):
    am, bm = linalg.as_matrix(a), linalg.as_matrix(b)
    if am.shape[0] != am.shape[1] or am.shape != bm.shape:
        raise ShapeError(f"expected two square matrices of one size, got {am.shape}, {bm.shape}")
    return am, bm


def _default_kinds(n: int):
    return [Fan(k) for k in range(1, n + 1)]


def _unit(h) -> np.ndarray:
    v = np.asarray(h, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(v) - 1) > UNIT_TOL:
        raise HypothesisViolation(f"h must have norm one, got {np.linalg.norm(v):.15g}")
    return v


def check_eq1(a, b, kinds: Optional[Sequence[NormKind]] = None, tol: float = TOL) -> CheckReport:
    """||AB|| <= ||BA|| whenever AB is normal."""
    am, bm = _square_pair(a, b)
    ab, ba = am @ bm, bm @ am
    if normality_defect(ab) > NORMALITY_TOL:
        raise HypothesisViolation("AB is not normal")
    mu_ab, mu_ba = linalg.svd(ab).values, linalg.svd(ba).values
    parts = [
        scalar_part(str(k), norm_from_singular_values(mu_ab, k), norm_from_singular_values(mu_ba, k))
        for k in (kinds or _default_kinds(am.shape[0]))
    ]
    return build_report("eq1", parts, {"A": am, "B": bm}, tol)


def check_thm_1_2(a, b, z, kinds: Optional[Sequence[NormKind]] = None,
                  tol: float = TOL) -> CheckReport:
    """||ZAB|| <= kappa1 ||BZA|| for AB >= 0 and Z > 0, for every Fan norm."""
    am, bm = _square_pair(a, b)
    require_ab_psd(am, bm)
    k = constants_of(z)
    zm = linalg.hermitian(z)
    mu_l = linalg.svd(zm @ am @ bm).values
    mu_r = linalg.svd(bm @ zm @ am).values
    parts = [
        scalar_part(str(kind), norm_from_singular_values(mu_l, kind),
                    norm_from_singular_values(mu_r, kind), k.kappa1)
        for kind in (kinds or _default_kinds(am.shape[0]))
    ]
    return build_report("thm1.2", parts, {"A": am, "B": bm, "Z": zm}, tol)


def check_lemma_1_1(z, h, tol: float = TOL) -> CheckReport:
    """||Zh|| <= kappa1 <h, Zh> for unit h."""
    v = _unit(h)
    k = constants_of(z)
    zm = linalg.hermitian(z)
    zh = zm @ v
    part = scalar_part("lem1.1", np.linalg.norm(zh), np.vdot(v, zh).real, k.kappa1)
    return build_report("lem1.1", [part], {"Z": zm, "h": v}, tol)


def check_cor_1_3(a, z, tol: float = TOL) -> CheckReport:
    """Sing(AZ) weakly majorized by kappa1 Eig(AZ)."""
    k = constants_of(z)
    am, zm = linalg.hermitian(a), linalg.hermitian(z)
    sing = np.asarray(linalg.svd(am @ zm).values)
    eig = real_eigenvalues_of_product(am, zm)
    ps, pe = np.cumsum(sing), np.cumsum(eig)
    parts = [scalar_part(f"k={j + 1}", ps[j], pe[j], k.kappa1) for j in range(ps.size)]
    slack = k.kappa1 * pe - ps
    return build_report("cor1.3", parts, {"A": am, "Z": zm}, tol,
                        facts={"sing": sing, "eig": eig, "slack": slack})


def check_cor_1_4(a, z, tol: float = TOL) -> CheckReport:
    """||AZ||_inf <= kappa1 rho(AZ) and ||AZ||_1 <= kappa1 Tr AZ."""
    k = constants_of(z)
    am, zm = linalg.hermitian(a), linalg.hermitian(z)
    sing = linalg.svd(am @ zm).values
    eig = real_eigenvalues_of_product(am, zm)
    parts = [
        scalar_part("operator", sing[0], eig[0], k.kappa1),
        scalar_part("trace", float(np.sum(sing)), float(np.trace(am @ zm).real), k.kappa1),
    ]
    return build_report("cor1.4", parts, {"A": am, "Z": zm}, tol)


def check_cor_1_5(x, z, tol: float = TOL) -> CheckReport:
    """XZX <= kappa2 Z for 0 <= X <= I."""
    spec = require_psd(x, "X")
    if spec.largest > 1 + tol * max(1.0, spec.largest):
        raise HypothesisViolation(f"X is not below I (top eigenvalue {spec.largest:.15g})")
    k = constants_of(z)
    xm, zm = linalg.hermitian(x), linalg.hermitian(z)
    part = order_part("cor1.5", xm @ zm @ xm, zm, k.kappa2)
    return build_report("cor1.5", [part], {"X": xm, "Z": zm}, tol)


def _isometry(p) -> Isometry:
    if isinstance(p, Isometry):
        return p
    m = np.asarray(p, dtype=np.complex128)
    return Isometry(m.reshape(-1, 1) if m.ndim == 1 else m)


def check_cor_1_6_1_7(z, p, tol: float = TOL) -> CheckReport:
    """EZE <= kappa2 Z for E = PP*; for a single column h also
    <h,Zh><h,Z^-1 h> <= kappa2."""
    k = constants_of(z)
    iso = _isometry(p)
    zm = linalg.hermitian(z)
    e = iso.projection()
    parts = [order_part("cor1.6", e @ zm @ e, zm, k.kappa2)]
    if iso.rank == 1:
        h = iso.matrix[:, 0]
        prod = np.vdot(h, zm @ h).real * np.vdot(h, linalg.inv(zm) @ h).real
        parts.append(scalar_part("cor1.7", prod, 1.0, k.kappa2))
    return build_report("cor1.6-7", parts, {"Z": zm, "P": iso.matrix}, tol)


def check_cor_1_8(z, p, tol: float = TOL) -> CheckReport:
    """(Z_E)^-1 >= kappa2^-1 (Z^-1)_E and (Z_E)^-1 <= (Z^-1)_E."""
    k = constants_of(z)
    iso = _isometry(p)
    zm = linalg.hermitian(z)
    inv_of_comp = linalg.hermitian(linalg.inv(compress(zm, iso)))
    comp_of_inv = compress(linalg.hermitian(linalg.inv(zm)), iso)
    parts = [
        order_part("cor1.8", comp_of_inv, inv_of_comp, k.inverse_kappa2, scaled="lhs"),
        order_part("ineq4", inv_of_comp, comp_of_inv),
    ]
    return build_report("cor1.8", parts, {"Z": zm, "P": iso.matrix}, tol)


def check_compression_convexity(z, p, f: OperatorConvexFn, tol: float = TOL) -> CheckReport:
    """kappa2^-1 (f(Z))_E <= f(Z_E) <= (f(Z))_E."""
    k = constants_of(z)
    iso = _isometry(p)
    zm = linalg.hermitian(z)
    f_of_comp = linalg.apply_fn(compress(zm, iso), f)
    comp_of_f = compress(linalg.apply_fn(zm, f), iso)
    parts = [
        order_part("reverse", comp_of_f, f_of_comp, k.inverse_kappa2, scaled="lhs"),
        order_part("davis", f_of_comp, comp_of_f),
    ]
    return build_report("prop1.11+thm2.1", parts, {"Z": zm, "P": iso.matrix}, tol,
                        facts={"f": f.descriptor()})


def check_jensen(zs, col, f: OperatorConvexFn, interval=None, tol: float = TOL) -> CheckReport:
    """kappa2^-1 sum A_i* f(Z_i) A_i <= f(sum A_i* Z_i A_i) <= sum A_i* f(Z_i) A_i.

    [a, b] is the tightest interval holding every spectrum unless
    ``interval`` (which must cover them all) is given.
    """
    col = col if isinstance(col, IsometricColumn) else IsometricColumn(tuple(col))
    zs = [linalg.hermitian(z) for z in zs]
    specs = [require_posdef(z, f"Z{i + 1}") for i, z in enumerate(zs)]
    hi = max(s.largest for s in specs)
    lo = min(s.smallest for s in specs)
    if interval is not None:
        b, a = sorted(float(x) for x in interval)
        if not (b > 0 and b <= lo * (1 + 1e-12) and a >= hi * (1 - 1e-12)):
            raise HypothesisViolation(f"interval [{b}, {a}] does not cover spectra [{lo}, {hi}]")
        k = kappa(a, b)
    else:
        k = kappa(hi, lo)
    f_of_mix = linalg.apply_fn(col.congruence(zs), f)
    mix_of_f = col.congruence([linalg.apply_fn(z, f) for z in zs])
    parts = [
        order_part("jo", f_of_mix, mix_of_f),
        order_part("thm2.4", mix_of_f, f_of_mix, k.inverse_kappa2, scaled="lhs"),
    ]
    inputs = {f"Z{i + 1}": z for i, z in enumerate(zs)}
    inputs.update({f"A{i + 1}": blk for i, blk in enumerate(col.blocks)})
    return build_report("thm2.2+2.4", parts, inputs, tol,
                        facts={"f": f.descriptor(), "a": k.a, "b": k.b})


def check_contractive(z, f: OperatorConvexFn, a=None, kraus=None, tol: float = TOL) -> CheckReport:
    """Reverse inequality f(Phi(Z)) >= kappa2^-1 Phi(f(Z)) for Phi(X) = A*XA
    or a Kraus map, plus the forward contractive Jensen inequality
    f(Phi(Z)) <= Phi(f(Z)) when f(0) <= 0."""
    if (a is None) == (kraus is None):
        raise ValueError("pass exactly one of a contraction or a Kraus family")
    if a is not None:
        c = a if isinstance(a, Contraction) else Contraction(a)
        phi = KrausMap((c.matrix,))
        inputs = {"A": c.matrix}
    else:
        phi = kraus if isinstance(kraus, KrausMap) else KrausMap(tuple(kraus))
        inputs = {f"K{i + 1}": blk for i, blk in enumerate(phi.blocks)}
    k = constants_of(z)
    zm = linalg.hermitian(z)
    f_of_phi = linalg.apply_fn(phi(zm), f)
    phi_of_f = phi(linalg.apply_fn(zm, f))
    parts = [order_part("reverse", phi_of_f, f_of_phi, k.inverse_kappa2, scaled="lhs")]
    if vanishes_at_zero(f):
        parts.append(order_part("contractive", f_of_phi, phi_of_f))
    inputs["Z"] = zm
    return build_report("cor2.3+2.5+2.9", parts, inputs, tol, facts={"f": f.descriptor()})


def check_wedge_remark(z, k: int, tol: float = TOL) -> CheckReport:
    """Compare kappa2 of the k-th compound with kappa2(Z)^k.

    The relation can fail; ``passed`` records whether it held.
    """
    base = constants_of(z)
    zm = linalg.hermitian(z)
    n = zm.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"compound order k={k} outside 1..{n}")
    lam = linalg.eigvalsh(linalg.compound(zm, k))
    wedge = kappa(lam[0], lam[-1])
    part = scalar_part("rem1.10", wedge.kappa2, base.kappa2 ** k)
    return build_report("rem1.10", [part], {"Z": zm}, tol, kind="relation",
                        facts={"k": k, "a": base.a, "b": base.b,
                               "a_k": float(lam[0]), "b_k": float(lam[-1])})


def check_sv_non_extension(tol: float = TOL) -> CheckReport:
    """The fixed 2x2 instance where mu_2(ZAB) <= kappa1 mu_2(BZA) fails.

    ``passed`` is False: the singular-value relation does not hold.  AZB is
    recorded too; for these real symmetric factors it is the transpose of
    BZA and has the same singular values.
    """
    a, b, z = REF_A, REF_B, REF_Z
    spec = linalg.herm_eig(z)
    k = kappa(spec.largest, spec.smallest)
    mu_zab = linalg.svd(z @ a @ b).values
    mu_bza = linalg.svd(b @ z @ a).values
    mu_azb = linalg.svd(a @ z @ b).values
    part = scalar_part("mu2", mu_zab[1], mu_bza[1], k.kappa1)
    facts = {
        "eig_Z": spec.values,
        "kappa1": k.kappa1,
        "mu2_ZAB": float(mu_zab[1]),
        "mu2_BZA": float(mu_bza[1]),
        "kappa1_mu2_BZA": k.kappa1 * float(mu_bza[1]),
        "mu2_AZB": float(mu_azb[1]),
        "fan2_ZAB": float(mu_zab.sum()),
        "fan2_BZA": float(mu_bza.sum()),
    }
    return build_report("sv-nonext", [part], {"A": a, "B": b, "Z": z}, tol,
                        kind="relation", facts=facts,
                        digest={"mode": "fixed", "dims": [2]})


CHECK_IDS = (
    "eq1", "thm1.2", "lem1.1", "cor1.3", "cor1.4", "cor1.5", "cor1.6-7", "cor1.8",
    "prop1.11+thm2.1", "thm2.2+2.4", "cor2.3+2.5+2.9", "rem1.10", "sv-nonext",
)
# checks whose outcome is a reported fact rather than a claimed inequality
RELATION_CHECKS = ("rem1.10", "sv-nonext")

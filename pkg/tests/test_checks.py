import math

import numpy as np
import pytest

from opineq import checks, linalg
from opineq.campaign import run_campaign, run_instance
from opineq.ensembles import (
    gen_ab_pair,
    gen_contraction,
    gen_isometric_column,
    gen_isometry,
    gen_posdef,
    gen_psd,
    gen_unit_vector,
    haar_unitary,
    substream,
)
from opineq.errors import HypothesisViolation
from opineq.norms import Contraction, Fan, IsometricColumn
from opineq.opconvex import Inverse, Kernel, Power, Quadratic, catalog, kappa
from opineq.report import TOL

from conftest import reference_matrices

H_LEMMA = np.array([math.sqrt(0.2), math.sqrt(0.8)])
H_BAL = np.array([1.0, 1.0]) / math.sqrt(2)
Z82 = np.diag([8.0, 2.0])


def _part(rep, name):
    return next(p for p in rep.parts if p.name == name)


def test_report_invariants():
    ok = checks.check_lemma_1_1(Z82, np.array([1.0, 0.0]))
    assert ok.passed and ok.witness is None
    bad = checks.check_sv_non_extension()
    assert not bad.passed and set(bad.witness) == {"A", "B", "Z"}
    d = bad.to_dict()
    assert d["pass"] is False and d["kind"] == "relation"


# inequality (1) --------------------------------------------------------------

def test_eq1_equalities():
    h = np.array([[2.0, 1.0], [1.0, 3.0]])
    rep = checks.check_eq1(h, h)
    assert rep.passed and all(abs(p.margin) < 1e-12 for p in rep.parts)
    u = haar_unitary(3, seed=1)
    rep = checks.check_eq1(u, np.eye(3))
    assert rep.passed and all(abs(p.margin) < 1e-12 for p in rep.parts)


def test_eq1_commuting_and_hypothesis():
    for i in range(20):
        assert checks.check_eq1(*gen_ab_pair(4, "commuting-psd", seed=2, index=i)).passed
    with pytest.raises(HypothesisViolation):
        checks.check_eq1(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 2.0]]))


# Theorem 1.2 and the singular-value example ----------------------------------

def test_thm12_reference_instance():
    a, b, z = reference_matrices()
    rep = checks.check_thm_1_2(a, b, z)
    assert rep.passed
    p1 = _part(rep, "fan:1")
    assert p1.lhs == pytest.approx(32.0, abs=1e-9)
    assert p1.rhs == pytest.approx(np.linalg.svd(b @ z @ a, compute_uv=False)[0], abs=1e-9)
    assert p1.constant == pytest.approx(1.25, abs=1e-12)


def test_thm12_reduces_to_eq1_for_scalar_z():
    rep = checks.check_thm_1_2(np.eye(3), np.eye(3), 2 * np.eye(3))
    assert rep.passed and all(abs(p.margin) < 1e-12 for p in rep.parts)


def test_thm12_hypothesis():
    with pytest.raises(HypothesisViolation):
        checks.check_thm_1_2(np.eye(2), -np.eye(2), Z82)
    with pytest.raises(HypothesisViolation):
        checks.check_thm_1_2(np.eye(2), np.eye(2), np.diag([1.0, -1.0]))


def test_sv_non_extension_facts():
    rep = checks.check_sv_non_extension()
    f = rep.facts
    # oracle for the second singular value: eigenvalues of M*M from trace/det
    tr, det = 3113.0, 65536.0
    mu2 = math.sqrt((tr - math.sqrt(tr * tr - 4 * det)) / 2)
    assert f["mu2_ZAB"] == pytest.approx(8.0, abs=1e-9)
    assert f["mu2_BZA"] == pytest.approx(mu2, abs=1e-9)
    assert f["mu2_BZA"] == pytest.approx(4.604, abs=1e-3)
    assert f["kappa1_mu2_BZA"] == pytest.approx(5.755, abs=2e-3)
    assert f["mu2_ZAB"] > f["kappa1_mu2_BZA"]
    # AZB is the transpose of BZA here, so the two share singular values
    a, b, z = reference_matrices()
    assert np.array_equal(a @ z @ b, (b @ z @ a).T)
    assert f["mu2_AZB"] == pytest.approx(mu2, abs=1e-9)
    assert not rep.passed and rep.kind == "relation"


# Lemma 1.1 and the rank-one corollaries -------------------------------------------

def test_lemma_extremal_equality():
    rep = checks.check_lemma_1_1(Z82, H_LEMMA)
    assert rep.lhs == pytest.approx(4.0, abs=1e-12)
    assert rep.rhs == pytest.approx(3.2, abs=1e-12)
    assert abs(rep.margin) < 1e-12 and rep.passed


def test_lemma_eigenvector_margin():
    rep = checks.check_lemma_1_1(Z82, np.array([1.0, 0.0]))
    assert rep.margin == pytest.approx((1.25 - 1) * 8.0, abs=1e-12)
    with pytest.raises(HypothesisViolation):
        checks.check_lemma_1_1(Z82, np.array([1.0, 1.0]))


def test_cor13_cases():
    z = gen_posdef(4, 6.0, 1.0, seed=3)
    assert checks.check_cor_1_3(np.eye(4), z).passed
    a = np.outer(H_LEMMA, H_LEMMA)
    rep = checks.check_cor_1_3(a, Z82)
    assert abs(rep.facts["slack"][0]) < 1e-12
    lem = checks.check_lemma_1_1(Z82, H_LEMMA)
    assert _part(rep, "k=1").margin == pytest.approx(lem.margin, abs=1e-10)


def test_cor13_reduction_to_lemma_random():
    for i in range(20):
        rng = substream(4, "reduce", i)
        z = gen_posdef(3, 9.0, 0.5, rng=rng)
        h = gen_unit_vector(3, rng=rng)
        rep = checks.check_cor_1_3(np.outer(h, h.conj()), z)
        assert _part(rep, "k=1").margin == pytest.approx(checks.check_lemma_1_1(z, h).margin,
                                                          abs=1e-10)


def test_cor14_cases():
    z = gen_posdef(3, 5.0, 1.0, seed=5)
    rep = checks.check_cor_1_4(linalg.inv(z), z)
    assert rep.passed
    assert _part(rep, "operator").lhs == pytest.approx(1.0, abs=1e-10)
    assert _part(rep, "operator").rhs == pytest.approx(1.0, abs=1e-10)
    tight = checks.check_cor_1_4(np.outer(H_LEMMA, H_LEMMA), Z82)
    assert abs(_part(tight, "operator").margin) < 1e-12


def test_cor15_cases():
    z = gen_posdef(3, 5.0, 1.0, seed=6)
    assert checks.check_cor_1_5(np.eye(3), z).passed
    # equality is attained by the balanced vector
    rep = checks.check_cor_1_5(np.outer(H_BAL, H_BAL), Z82)
    assert abs(rep.margin) < 1e-12 and rep.passed
    # the Lemma-extremal vector leaves a strictly positive margin
    lem = checks.check_cor_1_5(np.outer(H_LEMMA, H_LEMMA), Z82)
    assert lem.margin > 0.1
    with pytest.raises(HypothesisViolation):
        checks.check_cor_1_5(2 * np.eye(2), Z82)


def test_cor16_17_cases():
    rep = checks.check_cor_1_6_1_7(np.eye(3), np.eye(3)[:, :1])
    assert rep.passed
    rep = checks.check_cor_1_6_1_7(Z82, H_BAL)
    kant = _part(rep, "cor1.7")
    assert kant.lhs == pytest.approx(5 * 0.3125, abs=1e-12)
    assert kant.lhs == pytest.approx(kappa(8, 2).kappa2, abs=1e-12)
    assert abs(kant.margin) < 1e-12


def test_cor18_cases():
    z = gen_posdef(4, 7.0, 1.0, seed=8)
    rep = checks.check_cor_1_8(z, np.eye(4))
    assert rep.passed and abs(_part(rep, "ineq4").margin) < 1e-10
    tight = checks.check_cor_1_8(Z82, H_BAL)
    assert abs(_part(tight, "cor1.8").margin) < 1e-12
    for i in range(10):
        rng = substream(9, "c18", i)
        z = gen_posdef(5, 10.0, 1.0, rng=rng)
        rep = checks.check_cor_1_8(z, gen_isometry(5, 2, rng=rng))
        assert all(p.margin > 0 for p in rep.parts)


# operator convex section ------------------------------------------------------------

def test_compression_convexity_cases():
    rng = substream(10, "cc")
    z = gen_posdef(4, 6.0, 1.0, rng=rng)
    p = gen_isometry(4, 2, rng=rng)
    rep = checks.check_compression_convexity(z, p, Power(1.0))
    assert abs(_part(rep, "davis").margin) < 1e-10
    for f in [Power(2.0), Kernel(0.1), Kernel(100.0), Inverse()] + catalog():
        assert checks.check_compression_convexity(z, p, f).passed, f.descriptor()


def test_sandwich_property():
    for i in range(20):
        rng = substream(11, "sandwich", i)
        z = gen_posdef(4, 5.0, 0.5, rng=rng)
        p = gen_isometry(4, 2, rng=rng)
        rep = checks.check_compression_convexity(z, p, Kernel(float(rng.uniform(0.1, 100))))
        assert rep.passed
        rev, fwd = _part(rep, "reverse"), _part(rep, "davis")
        assert rev.margin >= -TOL * rev.scale and fwd.margin >= -TOL * fwd.scale


def test_jensen_unitary_single_block():
    u = haar_unitary(3, seed=12)
    z = gen_posdef(3, 4.0, 1.0, seed=12)
    rep = checks.check_jensen([z], IsometricColumn((u,)), Power(1.5))
    assert abs(_part(rep, "jo").margin) < 1e-10
    assert rep.passed


def test_midpoint_instance():
    half = np.eye(2) / math.sqrt(2)
    rep = checks.check_jensen([np.diag([1.0, 2.0]), np.diag([2.0, 1.0])],
                              IsometricColumn((half, half)), Power(2.0))
    rev = _part(rep, "thm2.4")
    assert rev.constant == pytest.approx(8 / 9, abs=1e-15)
    assert rev.margin == pytest.approx(2.25 - 8 / 9 * 2.5, abs=1e-9)
    assert rev.margin == pytest.approx(0.0278, abs=1e-4)


def test_jensen_interval_override():
    zs = [np.diag([2.0, 1.0]), np.diag([1.5, 1.2])]
    col = gen_isometric_column(2, 2, seed=3)
    rep = checks.check_jensen(zs, col, Power(2.0), interval=(0.5, 4.0))
    assert rep.facts["a"] == 4.0 and rep.facts["b"] == 0.5
    with pytest.raises(HypothesisViolation):
        checks.check_jensen(zs, col, Power(2.0), interval=(1.1, 4.0))


def test_contractive_identity_and_projection():
    z = gen_posdef(3, 5.0, 1.0, seed=13)
    rep = checks.check_contractive(z, Power(1.5), a=np.eye(3))
    assert abs(_part(rep, "contractive").margin) < 1e-10 and rep.passed
    for i in range(10):
        rng = substream(14, "proj", i)
        z = gen_posdef(4, 8.0, 0.5, rng=rng)
        p = gen_isometry(4, 2, rng=rng).projection()
        assert checks.check_contractive(z, Quadratic(0, 0, 1), a=p).passed


def test_contractive_skips_forward_branch_when_f0_positive():
    rep = checks.check_contractive(Z82, Quadratic(1, 0, 1), a=np.eye(2))
    assert [p.name for p in rep.parts] == ["reverse"]


def test_reverse_contractive_counterexample():
    # Z = I gives kappa2 = 1; A = I/2 and f(t) = t^2 give f(A*ZA) = I/16
    # while A* f(Z) A = I/4, so the reverse inequality fails
    rep = checks.check_contractive(np.eye(2), Quadratic(0, 0, 1), a=0.5 * np.eye(2))
    rev = _part(rep, "reverse")
    assert rev.margin == pytest.approx(1 / 16 - 1 / 4, abs=1e-15)
    assert not rep.passed and rep.witness is not None
    assert _part(rep, "contractive").margin == pytest.approx(3 / 16, abs=1e-15)


def test_reverse_kraus_counterexample():
    # the same failure for the Kraus map X -> sum K_i* X K_i with K_i = 0.9 I / sqrt(2)
    k = 0.9 * np.eye(2) / math.sqrt(2)
    rep = checks.check_contractive(np.eye(2), Quadratic(0, 0, 1), kraus=[k, k])
    assert _part(rep, "reverse").margin == pytest.approx(0.81 ** 2 - 0.81, abs=1e-14)
    assert not rep.passed


def test_reverse_holds_for_isometric_kraus():
    for i in range(20):
        rng = substream(15, "iso-kraus", i)
        z = gen_posdef(3, 6.0, 1.0, rng=rng)
        col = gen_isometric_column(3, 2, rng=rng)
        rep = checks.check_contractive(z, Kernel(float(rng.uniform(0.1, 10))), kraus=col.blocks)
        assert _part(rep, "reverse").passed()


def test_contractive_argument_errors():
    with pytest.raises(ValueError):
        checks.check_contractive(Z82, Power(2.0))
    with pytest.raises(HypothesisViolation):
        checks.check_contractive(Z82, Power(2.0), a=2 * np.eye(2))


# Remark 1.10 -----------------------------------------------------------------------------

def test_wedge_designated_witness():
    rep = checks.check_wedge_remark(np.diag([3.0, 3.0, 1.0, 1.0]), 2)
    assert rep.lhs == pytest.approx(25 / 9, abs=1e-9)
    assert rep.rhs == pytest.approx(16 / 9, abs=1e-9)
    assert not rep.passed and rep.kind == "relation"


def test_wedge_trivial_cases():
    z = gen_posdef(4, 5.0, 1.0, seed=16)
    rep = checks.check_wedge_remark(z, 1)
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12) and rep.passed
    rep = checks.check_wedge_remark(Z82, 2)
    assert rep.lhs == pytest.approx(1.0) and rep.passed
    with pytest.raises(ValueError):
        checks.check_wedge_remark(Z82, 3)


# scale invariance and the campaign -------------------------------------------------------

@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_invariance(c):
    rng = substream(17, "scale")
    z = gen_posdef(3, 7.0, 1.0, rng=rng)
    h = gen_unit_vector(3, rng=rng)
    r1, r2 = checks.check_lemma_1_1(z, h), checks.check_lemma_1_1(c * z, h)
    assert r2.constant == pytest.approx(r1.constant, rel=1e-12)
    assert r2.margin == pytest.approx(c * r1.margin, rel=1e-9)
    a, b = gen_ab_pair(3, "conjugated", rng=rng)
    t1, t2 = checks.check_thm_1_2(a, b, z), checks.check_thm_1_2(a, b, c * z)
    for p1, p2 in zip(t1.parts, t2.parts):
        assert p2.constant == pytest.approx(p1.constant, rel=1e-12)
        assert p2.margin == pytest.approx(c * p1.margin, rel=1e-9, abs=1e-12 * c * p1.scale)


def test_campaign_is_deterministic_and_worker_independent():
    ids = ["lem1.1", "cor1.5", "rem1.10"]
    r1 = run_campaign(ids, [2, 3], 20, seed=5)
    r2 = run_campaign(ids, [2, 3], 20, seed=5, workers=2)
    for cid in ids:
        assert r1.summaries[cid].to_dict() == r2.summaries[cid].to_dict()
        assert r1.summaries[cid].worst == r2.summaries[cid].worst
    a = run_instance("thm1.2", 4, 5, 3).to_dict()
    b = run_instance("thm1.2", 4, 5, 3).to_dict()
    assert a == b


def test_campaign_counts_relations_separately():
    res = run_campaign(["sv-nonext", "eq1"], [2], 5, seed=0)
    assert res.failures == 0
    d = res.summaries["sv-nonext"].to_dict()
    assert d["relation_violated"] == 5 and "failed" not in d
    with pytest.raises(ValueError):
        run_campaign(["nope"], [2], 1, seed=0)

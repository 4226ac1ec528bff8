import math

import numpy as np
import pytest

from opineq import opconvex as oc
from opineq.ensembles import substream
from opineq.opconvex import FiniteSum, Inverse, Kernel, Power, Quadratic


def test_kappa_examples():
    k = oc.kappa(8, 2)
    assert k.kappa1 == pytest.approx(1.25, abs=1e-12)
    assert k.kappa2 == pytest.approx(1.5625, abs=1e-12)
    assert oc.kappa(2, 8) == k
    one = oc.kappa(3, 3)
    assert one.kappa1 == 1 and one.kappa2 == 1
    assert oc.kappa(2.0, 1.0).inverse_kappa2 == pytest.approx(8 / 9, abs=1e-15)
    with pytest.raises(ValueError):
        oc.kappa(1, 0)
    with pytest.raises(ValueError):
        oc.kappa(-1, 2)


def test_kappa_scale_invariance_and_monotonicity():
    for c in [1e-6, 0.3, 7.0, 1e8]:
        assert oc.kappa(8 * c, 2 * c).kappa1 == pytest.approx(1.25, rel=1e-12)
    ratios = [1, 1.5, 2, 10, 100]
    k1 = [oc.kappa(r, 1).kappa1 for r in ratios]
    assert all(x < y for x, y in zip(k1, k1[1:]))
    assert all(oc.kappa(r, 1).kappa2 == pytest.approx(oc.kappa(r, 1).kappa1 ** 2, rel=1e-14)
               for r in ratios)


def test_evaluation_examples():
    assert Kernel(1.0)(1.0) == pytest.approx(0.5)
    assert Power(2.0)(3.0) == pytest.approx(9.0)
    f = FiniteSum(((1.0, Quadratic(0, 1, 0)), (2.0, Kernel(5.0))))
    assert f(2.0) == pytest.approx(2 + 2 * 20 / 7)
    assert Quadratic(1, 2, 3)(2.0) == pytest.approx(17.0)
    assert Power(1.5)(0.0) == 0.0
    assert Inverse()(4.0) == pytest.approx(0.25)


def test_domain_violations():
    with pytest.raises(ValueError):
        oc.evaluate(Power(1.5), -1.0)
    with pytest.raises(ValueError):
        oc.evaluate(Inverse(), 0.0)
    with pytest.raises(ValueError):
        Kernel(1.0)(-0.5)


def test_constructors_validate():
    with pytest.raises(ValueError):
        Power(2.5)
    with pytest.raises(ValueError):
        Power(0.5)
    with pytest.raises(ValueError):
        Kernel(0.0)
    with pytest.raises(ValueError):
        Quadratic(-1, 0, 0)
    with pytest.raises(ValueError):
        FiniteSum(((-1.0, Power(1.5)),))
    with pytest.raises(ValueError):
        FiniteSum(((1.0, Inverse()),))


def test_flags_and_zero_values():
    assert Inverse.limit_case and Inverse.domain == (0.0, True)
    assert not Power(1.2).limit_case
    assert oc.vanishes_at_zero(Power(1.5))
    assert oc.vanishes_at_zero(Kernel(3.0))
    assert not oc.vanishes_at_zero(Quadratic(1, 0, 0))


def test_kernel_large_lambda_limit():
    # lam t^2 / (lam + t) tends to t^2 with relative error t / (lam + t) <= t / lam
    lam = 1e8
    t = np.logspace(-3, 3, 25)
    rel = np.abs(Kernel(lam)(t) - t ** 2) / t ** 2
    assert np.all(rel <= t / lam + 1e-15)


def test_selfcheck_catalog():
    grid = np.logspace(-6, 6, 64)
    for f in oc.catalog():
        assert oc.convexity_selfcheck(f, grid), f.descriptor()
    assert oc.convexity_selfcheck(Power(1.5), np.linspace(0, 10, 50))
    assert oc.convexity_selfcheck(Quadratic(1, 0, 1), np.linspace(0, 10, 50))


def test_selfcheck_rejects_concave():
    class Sqrt:
        domain = (0.0, False)

        def __call__(self, t):
            return np.sqrt(np.asarray(t, dtype=float))

    assert not oc.convexity_selfcheck(Sqrt(), np.linspace(0, 4, 9))


def test_descriptors_are_stable():
    assert Quadratic(0, 1, 0).descriptor() == "quad(0,1,0)"
    assert Power(1.5).descriptor() == "pow(1.5)"
    assert Kernel(5).descriptor() == "ker(5)"
    assert Inverse().descriptor() == "inv"
    f = FiniteSum(((1.0, Quadratic(0, 1, 0)), (2.0, Kernel(5.0))))
    assert f.descriptor() == "sum(1*quad(0,1,0),2*ker(5))"


def test_random_member():
    rng = substream(0, "members")
    seen = set()
    for _ in range(200):
        f = oc.random_member(rng)
        seen.add(type(f).__name__)
        assert oc.convexity_selfcheck(f, np.logspace(-3, 3, 16))
    assert seen == {"Quadratic", "Power", "Kernel", "Inverse", "FiniteSum"}
    for _ in range(50):
        f = oc.random_member(rng, vanishing=True)
        assert oc.vanishes_at_zero(f)
        assert not isinstance(oc.random_member(rng, include_inverse=False), Inverse)

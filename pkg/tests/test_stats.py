import math

import mpmath
import numpy as np
import pytest
from scipy.stats import norm

from inner_clt.errors import DeltaTooSmall, EmptySample, NonpositiveVariance
from inner_clt.stats import (
    BoundParams,
    SampleBatch,
    bound_exponents,
    cramer_wold_discrepancy,
    haeusler_shift,
    ks_distance,
    lemma8_bound_check,
    lemma8_ratio_bruteforce,
    normal_cdf,
    second_bound_term,
    theorem1_rhs,
    theorem1_terms,
)
from inner_clt.transfer import transfer

mpmath.mp.dps = 50


def test_normal_cdf():
    assert normal_cdf(0.0) == 0.5
    want = float(0.5 * (1 + mpmath.erf(1 / mpmath.sqrt(2 * mpmath.mpf("0.5")))))
    assert normal_cdf(1.0, 0.5) == pytest.approx(want, rel=1e-15)
    x = np.random.default_rng(0).normal(0, 3, 1000)
    np.testing.assert_allclose(normal_cdf(x, 2.0) + normal_cdf(-x, 2.0), 1.0, atol=1e-15)
    # far tail keeps relative accuracy
    assert normal_cdf(-30.0, 1.0) == pytest.approx(float(mpmath.ncdf(-30)), rel=1e-12)
    with pytest.raises(NonpositiveVariance):
        normal_cdf(0.0, 0.0)


def test_ks_single_sample_at_median():
    assert ks_distance([0.0]) == 0.5


def test_ks_mid_quantiles():
    n = 1000
    x = norm.ppf((np.arange(1, n + 1) - 0.5) / n, scale=math.sqrt(0.5))
    assert ks_distance(x) == pytest.approx(0.5 / n, abs=1e-12)


def test_ks_self_consistency():
    x = np.random.default_rng(1).normal(0, math.sqrt(0.5), 100_000)
    assert ks_distance(SampleBatch(x)) < 1.95 / math.sqrt(x.size)


def test_ks_matches_scipy():
    from scipy.stats import kstest
    x = np.random.default_rng(2).normal(0.1, 0.7, 500)
    want = kstest(x, norm(scale=math.sqrt(0.5)).cdf).statistic
    assert ks_distance(x) == pytest.approx(want, abs=1e-14)


def test_ks_empty():
    with pytest.raises(EmptySample):
        ks_distance([])


def test_sample_batch_sorted_and_frozen():
    b = SampleBatch(np.array([3.0, 1.0, 2.0]), seed=4)
    np.testing.assert_array_equal(b.values, [1, 2, 3])
    assert b.count == 3
    with pytest.raises(ValueError):
        b.values[0] = 0


def test_cramer_wold_degenerate():
    res = cramer_wold_discrepancy(np.zeros(100, complex))
    assert res["sup_discrepancy"] == 0.5
    assert abs(abs(res["worst_alpha"]) - 1) < 1e-15


def test_cramer_wold_complex_normal():
    rng = np.random.default_rng(3)
    z = (rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000)) / math.sqrt(2)
    assert cramer_wold_discrepancy(z)["sup_discrepancy"] < 0.01


def test_cramer_wold_rotation_and_workers():
    rng = np.random.default_rng(4)
    z = rng.standard_normal(2000) + 0.3j * rng.standard_normal(2000)
    a = cramer_wold_discrepancy(z, 64)
    b = cramer_wold_discrepancy(1j * z, 64, workers=3)
    # rotating by i permutes the 64 directions
    assert a["sup_discrepancy"] == pytest.approx(b["sup_discrepancy"], abs=1e-15)


def test_shift_ratio_examples():
    assert abs(normal_cdf(1.0) - 0.5) == pytest.approx(0.4214, abs=1e-4)
    q = np.array([1e-6])
    res = lemma8_bound_check([1.0], q, np.linspace(-1, 1, 2001))
    assert res["max_ratio"] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-5)


def test_shift_ratio_fast_search_matches_bruteforce():
    p = np.linspace(0.5, 1.5, 41)
    q = np.linspace(-1, 1, 41)
    x = np.linspace(-10, 10, 4001)
    fast = lemma8_bound_check(p, q, x)["max_ratio"]
    assert fast == pytest.approx(lemma8_ratio_bruteforce(p, q, x), rel=1e-13)


def test_shift_envelope_location():
    res = lemma8_bound_check([0.9], [0.1], np.linspace(-10, 10, 20001))
    assert abs(res["envelope_argmax"]) == pytest.approx(1 + math.sqrt(3), abs=1e-3)
    m = math.sqrt(3) / 2 - 0.5
    assert res["envelope_constant"] == pytest.approx((1 + math.sqrt(3)) * math.exp(-m * m) / math.sqrt(math.pi), rel=1e-6)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_rhs_constant_coefficients(N):
    assert theorem1_rhs(np.ones(N), BoundParams()) == pytest.approx(N ** -0.2, abs=1e-12)


def test_rhs_with_lambda():
    params = BoundParams(lam=0.5)
    first, second = theorem1_terms(np.ones(100), params)
    assert first == pytest.approx(100 ** -0.2)
    bN = (1 - 0.5**100) / 0.5
    assert second == pytest.approx(2.7 * bN / 10)
    assert first + second == pytest.approx(0.938, abs=5e-4)
    assert second == pytest.approx(second_bound_term(np.ones(100), 0.5))


def test_bound_exponents():
    assert bound_exponents(1) == (0.2, 0.4)
    e4, e2 = bound_exponents(1e3)
    assert abs(e4 - 0.25) < 1e-3 and abs(e2 - 0.5) < 1e-3


def test_bound_params_validation():
    with pytest.raises(DeltaTooSmall):
        BoundParams(delta=0.5)
    with pytest.raises(ValueError):
        BoundParams(lam=1.0)


def test_haeusler_shift():
    rng = np.random.default_rng(8)
    for _ in range(200):
        a = rng.standard_normal(50)
        lam = 0.9 * rng.random() * np.exp(2j * np.pi * rng.random())
        tr = transfer(a, lam)
        s = haeusler_shift(tr)
        # p_N^2 = 1 + q_N^2 by the sigma_N identity
        assert s["p_N"] ** 2 == pytest.approx(1 + s["q_N"] ** 2, rel=1e-12)
    s = haeusler_shift(transfer(np.ones(5), 0))
    assert (s["p_N"], s["q_N"]) == (pytest.approx(1), 0)

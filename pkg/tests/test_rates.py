import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from conftest import crandn
from vpbench.errors import DomainError, RankDeficient
from vpbench.precoding import PrecoderConfig, ese_lower_bound, estimate_ese
from vpbench.rates import (mi_awgn, mi_exact, mi_piecewise,
                           modulo_gaussian_entropy, modulo_gaussian_pdf,
                           omega, r_vp_pw, rate_report, sum_rate_exact,
                           sum_rate_lower, sum_rate_ra, sum_rate_upper)


def _omega_oracle(gamma, dps=30):
    """Omega in bits by high-precision quadrature of the folded density."""
    with mp.workdps(dps):
        g = mp.mpf(gamma)
        s = mp.sqrt(g)
        n = int(mp.ceil(8 * s)) + 3

        def f(x):
            return sum(mp.exp(-(x - k) ** 2 / (2 * g))
                       for k in range(-n, n + 1)) / mp.sqrt(2 * mp.pi * g)

        pts = [-0.5, 0, 0.5]
        if 3 * s < 0.5:
            pts = [-0.5, -3 * s, -s, 0, s, 3 * s, 0.5]
        h = -mp.quad(lambda x: f(x) * mp.log(f(x)), pts)
        return float((mp.log(2 * mp.pi * mp.e * g) / 2 - h) / mp.log(2))


@pytest.mark.parametrize('gamma', [0.05, 0.01, 0.2, 1.0, 5.0])
def test_omega_against_high_precision_oracle(gamma):
    assert omega(gamma) == pytest.approx(_omega_oracle(gamma), abs=1e-7)


def test_omega_limits():
    assert omega(1e-6) < 1e-6
    assert abs(omega(100.0) - 0.5 * np.log2(200 * np.pi * np.e)) < 1e-4
    with pytest.raises(DomainError):
        omega(0.0)
    with pytest.raises(DomainError):
        omega(-1.0)


def test_omega_monotone_nonnegative():
    vals = [omega(g) for g in np.logspace(-6, 3, 60)]
    assert min(vals) >= 0.0
    assert np.all(np.diff(vals) >= 0.0)


@pytest.mark.parametrize('gamma', [0.002, 0.05, 0.5, 4.0])
def test_density_normalized(gamma):
    total, _ = integrate.quad(lambda x: modulo_gaussian_pdf(x, gamma),
                              -0.5, 0.5, points=[0.0], epsabs=1e-13,
                              limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_entropy_nonpositive():
    for g in (1e-3, 0.1, 10.0):
        assert modulo_gaussian_entropy(g) <= 1e-9


def test_sum_rate_exact_example():
    omega_term = omega(1 / 1200)
    assert omega_term < 1e-3
    expected = np.log2(100) - np.log2(np.pi * np.e / 6) + 2 * omega_term
    assert sum_rate_exact(1 / 6, 100.0, 1) == pytest.approx(expected)
    # the quoted value 6.133 is a rounded figure; the formula gives 6.1346
    assert sum_rate_exact(1 / 6, 100.0, 1) == pytest.approx(6.1346, abs=1e-4)


def test_sum_rate_exact_scaling_invariance():
    assert sum_rate_exact(3 * 0.2, 3 * 5.0, 4) == pytest.approx(
        sum_rate_exact(0.2, 5.0, 4), rel=1e-12)


def test_exact_approaches_lower_at_high_snr():
    gaps = [sum_rate_exact(0.3, p, 3) - sum_rate_lower(0.3, p, 3)
            for p in (0.3, 1.0, 3.0, 10.0, 1e3)]
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3] >= gaps[4] >= 0
    assert gaps[4] < 1e-9


def test_sum_rate_lower_examples():
    assert sum_rate_lower(1 / 6, np.pi * np.e / 6, 1) == pytest.approx(
        0.0, abs=1e-12)
    # 2 log2(5) - 2 log2(0.05 pi e)
    assert sum_rate_lower(0.1, 10.0, 2) == pytest.approx(7.0993, abs=1e-4)
    assert sum_rate_lower(100.0, 0.1, 2) < 0


@settings(max_examples=200, deadline=None)
@given(ese=st.floats(1e-3, 10), p=st.floats(1e-2, 1e4), k=st.integers(1, 8))
def test_exact_identity_and_ordering(ese, p, k):
    exact = sum_rate_exact(ese, p, k)
    lower = sum_rate_lower(ese, p, k)
    assert lower <= exact + 1e-12
    assert exact - lower == pytest.approx(2 * k * omega(ese / (2 * p)),
                                          abs=1e-9)


def test_sum_rate_upper_examples(rng):
    assert sum_rate_upper([[1.0]], 100.0) == pytest.approx(
        np.log2(100) - np.log2(np.e / 2))
    assert sum_rate_upper([[1.0]], 100.0) == pytest.approx(6.201, abs=1e-3)
    h = crandn(rng, 3, 4)
    g = PrecoderConfig.channel_inverse(h).generator
    assert sum_rate_upper(h, 20.0) == pytest.approx(
        sum_rate_lower(ese_lower_bound(g), 20.0, 3), rel=1e-10)
    with pytest.raises(RankDeficient):
        sum_rate_upper([[1, 1], [1, 1]], 10.0)
    with pytest.raises(ValueError):
        sum_rate_upper(h, 10.0, k=2)


def test_upper_above_exact_at_high_snr(rng):
    for i in range(100):
        h = crandn(rng, 4, 4)
        ese = estimate_ese(PrecoderConfig.channel_inverse(h), 500, i).mean
        assert sum_rate_upper(h, 100.0) >= sum_rate_exact(ese, 100.0, 4)


def test_rate_report_consistency(rng):
    h = crandn(rng, 2, 3)
    rep = rate_report(h, 0.4, 3.0)
    assert rep.r_exact == pytest.approx(rep.r_lower + 4 * rep.omega_term)
    assert rep.gamma == pytest.approx(0.4 / 6.0)
    assert rep.k_users == 2 and rep.omega_term >= 0


def test_sum_rate_ra_reductions():
    assert sum_rate_ra(0.2, 5.0, [1.0], [1.0]) == pytest.approx(
        sum_rate_exact(0.2, 5.0, 1))
    # equal effective gains: every user sees the channel-inversion rate
    d = np.array([0.5, 2.0, 1.3])
    lam = 0.7 / d
    ese, p = 0.3, 8.0
    expected = sum_rate_exact(ese / 0.49, p, 3) + 3 * np.log2(3)
    assert sum_rate_ra(ese, p, lam, d) == pytest.approx(
        sum(mi_exact(l, dk, ese, p) for l, dk in zip(lam, d)))
    # per-user rate with gain g equals the K=1 exact rate at ese / g^2
    per_user = sum_rate_exact(ese / 0.49, p, 1)
    assert sum_rate_ra(ese, p, lam, d) == pytest.approx(3 * per_user)
    assert np.isfinite(expected)


def test_sum_rate_ra_two_users():
    ese, p = 0.1, 10.0
    want = 0.0
    for dk in (1.0, 2.0):
        snr = p * dk ** 2
        want += (np.log2(snr / (np.pi * np.e * ese))
                 + 2 * _omega_oracle(ese / (2 * snr)))
    assert sum_rate_ra(ese, p, [1.0, 1.0], [1.0, 2.0]) == pytest.approx(
        want, abs=1e-6)
    with pytest.raises(DomainError):
        sum_rate_ra(ese, p, [1.0, 0.0], [1.0, 2.0])


def test_piecewise_and_awgn_examples():
    lam0 = np.sqrt(np.pi * np.e * 0.1)
    assert lam0 == pytest.approx(0.9241, abs=1e-4)
    assert mi_piecewise(lam0, 1.0, 0.1, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert mi_awgn(lam0, 1.0, 0.1, 1.0) - mi_piecewise(
        lam0, 1.0, 0.1, 1.0) == pytest.approx(1.0)


def test_exact_mi_is_twice_negative_entropy():
    for lam in (0.5, 0.92, 1.5):
        gamma = 0.1 / (2 * lam ** 2)
        assert mi_exact(lam, 1.0, 0.1, 1.0) == pytest.approx(
            max(0.0, -2 * modulo_gaussian_entropy(gamma)), abs=1e-9)


def test_exact_mi_dominates_piecewise_with_bounded_gap():
    lam = np.linspace(0.01, 3, 400)
    exact = np.array([mi_exact(l, 1.0, 0.1, 1.0) for l in lam])
    pw = mi_piecewise(lam, 1.0, 0.1, 1.0)
    assert np.all(exact >= pw - 1e-9)
    assert np.max(exact - pw) <= 0.30
    assert np.max(exact - pw) == pytest.approx(0.2992, abs=0.005)


def test_r_vp_pw_cases():
    assert r_vp_pw([0.1, 0.2], [1.0, 1.0], 0.1, 1.0) == 0.0
    assert r_vp_pw([2.0, 0.1], [1.0, 1.0], 0.1, 1.0) == pytest.approx(
        mi_piecewise(2.0, 1.0, 0.1, 1.0))
    assert r_vp_pw([0.0, 2.0], [1.0, 1.0], 0.1, 1.0) == pytest.approx(
        mi_piecewise(2.0, 1.0, 0.1, 1.0))


def test_r_vp_pw_relation_to_upper_bound(rng):
    # with E_se at its lower bound, the unclamped piecewise sum is R_UB;
    # clamping can only add, with equality when every user is above the
    # crossing
    h = crandn(rng, 3, 3)
    d = PrecoderConfig.channel_inverse(h).factors.d
    lam = 1.0 / d
    ese = ese_lower_bound(PrecoderConfig.rate_allocated(h, lam).generator)
    for p in (0.5, 1e3):
        raw = np.sum(np.log2(p * lam ** 2 * d ** 2 / (np.pi * np.e * ese)))
        assert raw == pytest.approx(sum_rate_upper(h, p), rel=1e-9)
        assert r_vp_pw(lam, d, ese, p) >= sum_rate_upper(h, p) - 1e-9
    assert r_vp_pw(lam, d, ese, 1e3) == pytest.approx(
        sum_rate_upper(h, 1e3), rel=1e-9)

"""Closed-form bound tests.

scipy.special.digamma serves as the independent oracle for the
harmonic-minus-gamma identities; frozen constants below were computed from
the printed formulas with an independent arithmetic script before the
implementation existed.
"""

import math

import numpy as np
import pytest
from scipy.special import digamma

from cddmac.bounds import (BoundReport, EULER_GAMMA, bound_report,
                           cap_lower_bound, gap_high_snr, harmonic,
                           jensen_collapsed_bounds, psi_limit_check,
                           rc_lower_bound, rc_upper_bound)
from cddmac.channel import SystemConfig
from cddmac.rates import monte_carlo_sweep

LN2 = math.log(2.0)


# --- harmonic / gamma ---------------------------------------------------


def test_harmonic_empty_sum():
    assert harmonic(0) == 0.0


def test_harmonic_three():
    assert harmonic(3) == pytest.approx(1.0 + 0.5 + 1.0 / 3.0, abs=1e-15)


def test_harmonic_rejects_negative():
    with pytest.raises(ValueError):
        harmonic(-1)


@pytest.mark.parametrize("n", [1, 2, 4, 7, 25])
def test_harmonic_matches_digamma_oracle(n):
    # psi(n) = H_{n-1} - gamma
    assert harmonic(n - 1) - EULER_GAMMA == pytest.approx(digamma(n),
                                                          abs=1e-12)


def test_psi_of_four_frozen():
    assert harmonic(3) - EULER_GAMMA == pytest.approx(1.2561176684318003,
                                                      abs=1e-15)


def test_gamma_constant():
    assert EULER_GAMMA == pytest.approx(np.euler_gamma, abs=1e-17)


# --- rc_lower_bound -----------------------------------------------------


def test_rc_lower_frozen_siso():
    assert rc_lower_bound(1, 1, 1, 10.0) == pytest.approx(
        2.725652789690193, rel=1e-12)
    assert rc_lower_bound(1, 1, 1, 10.0) == pytest.approx(
        np.log2(1.0 + 10.0 * np.exp(-EULER_GAMMA)), rel=1e-14)


def test_rc_lower_zero_snr():
    for users, n_tx, n_rx in [(1, 1, 1), (3, 2, 2), (4, 4, 1)]:
        assert rc_lower_bound(users, n_tx, n_rx, 0.0) == 0.0


def test_rc_lower_independent_of_n_tx():
    vals = {rc_lower_bound(3, n_tx, 2, 25.0) for n_tx in (1, 2, 3, 8)}
    assert len(vals) == 1


def test_rc_lower_single_rx_single_term():
    # n_R=1 collapses to one term with M = K
    for users in (1, 2, 5):
        expected = np.log2(
            1.0 + 7.0 * np.exp(harmonic(users - 1) - EULER_GAMMA))
        assert rc_lower_bound(users, 3, 1, 7.0) == pytest.approx(expected,
                                                                 rel=1e-14)


def test_rc_lower_accepts_grid():
    grid = np.array([0.0, 1.0, 10.0])
    got = rc_lower_bound(2, 2, 2, grid)
    assert got.shape == (3,)
    assert got[0] == 0.0
    assert np.all(np.diff(got) > 0)


# --- cap_lower_bound ----------------------------------------------------


def test_cap_lower_single_rx_single_term():
    # n_R=1: single term with M-tilde = n_T*K and snr/n_T inside
    users, n_tx = 3, 2
    expected = np.log2(
        1.0 + (50.0 / n_tx) * np.exp(harmonic(users * n_tx - 1)
                                     - EULER_GAMMA))
    assert cap_lower_bound(users, n_tx, 1, 50.0) == pytest.approx(expected,
                                                                  rel=1e-14)


def test_cap_lower_reduces_to_rc_lower_for_siso_config():
    for snr in (0.5, 10.0, 200.0):
        assert cap_lower_bound(1, 1, 1, snr) == pytest.approx(
            rc_lower_bound(1, 1, 1, snr), rel=1e-14)


def test_cap_lower_below_mc_capacity():
    cfg = SystemConfig(users=6, n_tx=3, n_rx=3, snr=0.0, trials=20000,
                       seed=606)
    got = monte_carlo_sweep(cfg, snr=np.array([1000.0]), metrics=("cap",))
    mean, err = got["cap"]
    assert cap_lower_bound(6, 3, 3, 1000.0) <= float(mean[0]) \
        + 3 * float(err[0])


# --- jensen_collapsed_bounds --------------------------------------------


def test_jensen_equals_plain_when_single_term():
    # L = 1 (and L-tilde = 1) makes the exponent averaging an identity
    rc_j, cap_j = jensen_collapsed_bounds(1, 1, 1, 30.0)
    assert rc_j == pytest.approx(rc_lower_bound(1, 1, 1, 30.0), rel=1e-14)
    assert cap_j == pytest.approx(cap_lower_bound(1, 1, 1, 30.0), rel=1e-14)


def test_jensen_frozen_two_user_two_rx():
    rc_j, _ = jensen_collapsed_bounds(2, 2, 2, 100.0)
    assert rc_j == pytest.approx(13.095918055525594, rel=1e-12)
    # independent arithmetic: 2*log2(1 + 100*exp((psi(2)+psi(1))/2))
    exponent = 0.5 * ((harmonic(1) - EULER_GAMMA) + (0.0 - EULER_GAMMA))
    assert rc_j == pytest.approx(2 * np.log2(1 + 100 * np.exp(exponent)),
                                 rel=1e-14)


def test_jensen_never_exceeds_unaveraged():
    rng = np.random.default_rng(14)
    for _ in range(100):
        users, n_tx, n_rx = (int(v) for v in rng.integers(1, 6, size=3))
        snr = float(10 ** rng.uniform(-1, 3))
        rc_j, cap_j = jensen_collapsed_bounds(users, n_tx, n_rx, snr)
        assert rc_j <= rc_lower_bound(users, n_tx, n_rx, snr) + 1e-12
        assert cap_j <= cap_lower_bound(users, n_tx, n_rx, snr) + 1e-12


# --- rc_upper_bound -----------------------------------------------------


def test_rc_upper_scalar_cases():
    assert rc_upper_bound(1, 1, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert rc_upper_bound(1, 1, 10.0) == pytest.approx(np.log2(11.0),
                                                       rel=1e-12)
    assert rc_upper_bound(3, 2, 0.0) == 0.0


def test_rc_upper_single_l_closed_form():
    # L=1: sum is 1 + M*snr
    for users, n_rx in [(4, 1), (1, 5)]:
        m_big = max(users, n_rx)
        assert rc_upper_bound(users, n_rx, 3.0) == pytest.approx(
            np.log2(1.0 + m_big * 3.0), rel=1e-13)


def test_rc_upper_brute_force_sum():
    # moderate dims where the binomial-factorial sum is safe in plain floats
    users, n_rx, snr = 3, 2, 7.0
    l_small, m_big = 2, 3
    total = sum(math.comb(l_small, i)
                * math.factorial(m_big) // math.factorial(m_big - i)
                * snr ** i
                for i in range(l_small + 1))
    assert rc_upper_bound(users, n_rx, snr) == pytest.approx(
        np.log2(total), rel=1e-12)


def test_rc_upper_accepts_grid():
    got = rc_upper_bound(2, 2, np.array([0.0, 1.0, 100.0]))
    assert got.shape == (3,)
    assert got[0] == 0.0


def test_rc_upper_rejects_large_l():
    with pytest.raises(ValueError):
        rc_upper_bound(25, 21, 1.0)


# --- gap_high_snr -------------------------------------------------------


def test_gap_frozen_values():
    gap, upper = gap_high_snr(1, 2, 1)
    assert gap == pytest.approx(0.44269504088896344, rel=1e-14)
    assert upper == pytest.approx(1.0 / LN2, rel=1e-14)
    gap4, _ = gap_high_snr(1, 4, 1)
    assert gap4 == pytest.approx(0.6449409082964328, rel=1e-13)
    assert gap4 == pytest.approx((1 + 0.5 + 1 / 3) / LN2 - 2.0, rel=1e-13)


def test_gap_single_rx_rearranged_identity():
    # (H_{nT*K-1} - H_{K-1})/ln2 - log2(nT) equals
    # (sum_{k=K}^{nT*K-1} 1/k - ln nT)/ln2
    for users, n_tx in [(1, 2), (2, 3), (4, 4), (3, 2)]:
        gap, _ = gap_high_snr(users, n_tx, 1)
        tail = sum(1.0 / k for k in range(users, users * n_tx))
        assert gap == pytest.approx((tail - math.log(n_tx)) / LN2, abs=1e-12)


def test_gap_upper_single_rx_is_reciprocal_k():
    for users in (1, 2, 6):
        _, upper = gap_high_snr(users, 3, 1)
        assert upper == pytest.approx(1.0 / (users * LN2), rel=1e-14)


def test_gap_frozen_six_user():
    gap, upper = gap_high_snr(6, 3, 3)
    assert upper == pytest.approx(1.4852716868021922, rel=1e-12)
    assert gap == upper  # multi-antenna form only states the upper bound


def test_gap_rejects_more_rx_than_users():
    with pytest.raises(ValueError):
        gap_high_snr(2, 2, 3)


def test_gap_upper_trends():
    # decreasing in K at fixed n_R, increasing in n_R at fixed K
    by_users = [gap_high_snr(users, 2, 2)[1] for users in (2, 3, 4, 6)]
    assert np.all(np.diff(by_users) < 0)
    by_rx = [gap_high_snr(6, 2, n_rx)[1] for n_rx in (1, 2, 3, 5)]
    assert np.all(np.diff(by_rx) > 0)


def test_gap_convergence_at_high_snr():
    # MC capacity-minus-CDD at 40 dB approaches the closed-form gap
    for users, n_tx in [(1, 2), (2, 2)]:
        cfg = SystemConfig(users=users, n_tx=n_tx, n_rx=1, snr=0.0,
                           trials=30000, seed=40)
        got = monte_carlo_sweep(cfg, snr=np.array([1e4]), metrics=("diff",))
        mean, err = got["diff"]
        gap, _ = gap_high_snr(users, n_tx, 1)
        assert abs(float(mean[0]) - gap) <= max(0.05, 3 * float(err[0]))


def test_lower_bound_tightens_with_snr():
    # MC cdd minus rc_lower shrinks from 0 dB to 40 dB
    for users, n_tx, n_rx in [(1, 2, 1), (2, 2, 2)]:
        cfg = SystemConfig(users=users, n_tx=n_tx, n_rx=n_rx, snr=0.0,
                           trials=20000, seed=41)
        grid = np.array([1.0, 1e4])
        mean, _ = monte_carlo_sweep(cfg, snr=grid, metrics=("cdd",))["cdd"]
        slack = mean - rc_lower_bound(users, n_tx, n_rx, grid)
        assert slack[1] < slack[0]


# --- psi_limit_check ----------------------------------------------------


def test_psi_limit_trivial_n_tx_one():
    np.testing.assert_array_equal(psi_limit_check(1, 50), np.zeros(50))


def test_psi_limit_rejects_small_k_max():
    with pytest.raises(ValueError):
        psi_limit_check(2, 1)


def test_psi_limit_decays_and_is_monotone():
    for n_tx in (2, 4):
        res = psi_limit_check(n_tx, 1000)
        assert res.shape == (1000,)
        assert res[-1] < 1e-3
        assert np.all(np.diff(res) <= 1e-15)


def test_psi_limit_matches_digamma_oracle():
    # residual_K = |psi(nT*K) - psi(K+1) - ln nT| by the oracle's digamma
    res = psi_limit_check(3, 20)
    for k in (1, 5, 20):
        expected = abs(digamma(3 * k) - digamma(k + 1) - math.log(3.0))
        assert res[k - 1] == pytest.approx(expected, abs=1e-12)


# --- bound_report -------------------------------------------------------


def test_report_orderings_hold_on_random_grid():
    rng = np.random.default_rng(15)
    for _ in range(60):
        users, n_tx, n_rx = (int(v) for v in rng.integers(1, 5, size=3))
        snr = float(10 ** rng.uniform(-1, 3))
        rep = bound_report(users, n_tx, n_rx, snr)
        assert isinstance(rep, BoundReport)
        assert rep.rc_lower_jensen <= rep.rc_lower + 1e-12
        assert rep.rc_lower <= rep.rc_upper + 1e-9
        assert rep.cap_lower_jensen <= rep.cap_lower + 1e-12
        for field in (rep.rc_lower, rep.rc_lower_jensen, rep.rc_upper,
                      rep.cap_lower, rep.cap_lower_jensen):
            assert np.isfinite(field)


def test_report_flags_gap_outside_validity():
    rep = bound_report(2, 2, 3, 10.0)
    assert rep.gap_high_snr is None
    assert rep.gap_upper is None
    valid = bound_report(2, 2, 2, 10.0)
    assert valid.gap_high_snr is not None

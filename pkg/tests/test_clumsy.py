import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from couponflux.chain import block_entry_moments, stationary_distribution
from couponflux.clumsy import (ClumsyParams, clumsy_count_kernel, clumsy_flux,
                               clumsy_mean_hitting_time, clumsy_mixing_bound, sample_clumsy,
                               simulate_clumsy)
from couponflux.coupling import clumsy_coalescence
from couponflux.errors import BudgetExceeded, DomainError
from couponflux.harness import exact_ks_distance, shape_comparison

from oracles import birth_death_moments_rational

P_GRID = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def test_params():
    with pytest.raises(DomainError):
        ClumsyParams(0, 0.5)
    with pytest.raises(DomainError):
        ClumsyParams(3, 1.0)
    assert ClumsyParams(3, 0.25).q == 0.75


def test_kernel_examples():
    assert np.allclose(clumsy_count_kernel(ClumsyParams(1, 0.5)).rows, [[0.5, 0.5], [0.5, 0.5]])
    rng = np.random.default_rng(2)
    for p in rng.uniform(0.01, 0.99, 5):
        k = clumsy_count_kernel(ClumsyParams(10, p))
        assert np.allclose(k.rows.sum(axis=1), 1.0, atol=1e-15)
        assert np.count_nonzero(np.triu(k.rows, 2)) == 0 and np.count_nonzero(np.tril(k.rows, -2)) == 0


@pytest.mark.parametrize("n", [2, 7, 20, 30])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_stationary_law_is_binomial(n, p):
    pi = stationary_distribution(clumsy_count_kernel(ClumsyParams(n, p)))
    want = stats.binom.pmf(np.arange(n + 1), n, p)
    assert np.allclose(pi.probs, want, rtol=1e-10, atol=1e-300)


def test_flux_examples():
    assert clumsy_flux(ClumsyParams(2, 0.5)).exact == pytest.approx(0.125, rel=1e-14)
    assert clumsy_flux(ClumsyParams(1, 0.5)).exact == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("p", P_GRID)
def test_flux_identity_up_to_30(p):
    for n in range(1, 31):
        rep = clumsy_flux(ClumsyParams(n, p))
        assert abs(rep.log_ratio) <= 1e-10


def test_log_flux_decreases_in_n_and_p():
    logs = [clumsy_flux(ClumsyParams(n, 0.99)).log_exact for n in range(1, 20)]
    assert all(b < a for a, b in zip(logs, logs[1:]))
    near_one = [clumsy_flux(ClumsyParams(5, p)).log_exact for p in (0.9, 0.99, 0.999)]
    assert all(b < a for a, b in zip(near_one, near_one[1:]))


@pytest.mark.parametrize("n", [4, 8, 10])
def test_exact_mean_against_rational_oracle(n):
    m1, _ = birth_death_moments_rational(n, Fraction(1, 2))
    assert clumsy_mean_hitting_time(ClumsyParams(n, 0.5)) == pytest.approx(float(m1), rel=1e-11)


def test_simulated_means():
    t = sample_clumsy(ClumsyParams(1, 0.5), 10 ** 5, seed=1).samples.astype(float)
    assert abs(t.mean() - 2.0) <= 3 * t.std(ddof=1) / math.sqrt(t.size)
    p = ClumsyParams(8, 0.5)
    t = sample_clumsy(p, 10 ** 4, seed=2).samples.astype(float)
    assert abs(t.mean() / clumsy_mean_hitting_time(p) - 1) <= 0.10


def test_n10_mean_matches_exact_chain():
    p = ClumsyParams(10, 0.5)
    t = sample_clumsy(p, 10 ** 4, seed=3).samples.astype(float)
    assert abs(t.mean() / clumsy_mean_hitting_time(p) - 1) <= 0.10


@pytest.mark.xfail(strict=True, reason="exact E T at n=10 is (73/63) x 2048; the 1/(p q^n) "
                   "scale is only asymptotic")
def test_n10_mean_within_ten_percent_of_asymptotic():
    t = sample_clumsy(ClumsyParams(10, 0.5), 10 ** 4, seed=3).samples.astype(float)
    assert abs(t.mean() / 2048 - 1) <= 0.10


def test_simulate_single_and_budget():
    p = ClumsyParams(6, 0.5)
    t = simulate_clumsy(p, seed=9, index=4)
    assert t == sample_clumsy(p, 5, seed=9).samples[4]
    with pytest.raises(BudgetExceeded):
        simulate_clumsy(ClumsyParams(30, 0.5), seed=1, budget=100)


def test_mixing_bound_examples():
    assert clumsy_mixing_bound(10, 0) == 1.0
    assert clumsy_mixing_bound(10, 100) == pytest.approx(10 * 0.9 ** 100, rel=1e-14)
    assert clumsy_mixing_bound(10, 100) == pytest.approx(2.66e-4, rel=1e-2)
    with pytest.raises(DomainError):
        clumsy_mixing_bound(10, -1)


def test_coupling_coalescence():
    n, t, trials = 10, 50, 1000
    bound = clumsy_mixing_bound(n, t)
    # exact chance that every coordinate was refreshed by time t
    exact = sum((-1) ** k * math.comb(n, k) * (1 - k / n) ** t for k in range(n + 1))
    assert exact >= 1 - bound
    freq = clumsy_coalescence(n, 0.5, t, trials, seed=17)
    se = math.sqrt(exact * (1 - exact) / trials)
    assert abs(freq - exact) <= 3 * se
    assert freq >= 1 - bound - 3 * se


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 200))
def test_exact_tv_below_mixing_bound(n, t):
    from couponflux.chain import distribution_at
    k = clumsy_count_kernel(ClumsyParams(n, 0.5))
    pi = stationary_distribution(k).probs
    worst = max(0.5 * np.abs(distribution_at(k, s, t) - pi).sum() for s in (0, n))
    assert worst <= clumsy_mixing_bound(n, t) + 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_clump_ratio(n, p):
    params = ClumsyParams(n, p)
    k = clumsy_count_kernel(params)
    b = n ** 3
    rep = block_entry_moments(k, stationary_distribution(k), [0], b)
    assert rep.second_factorial / rep.first_moment <= 2 * b * params.q ** n


def test_exact_limit_law_distance_at_n10():
    """Finite-n distance of p q^n T from Exp(1), from the exact hitting law."""
    p = ClumsyParams(10, 0.5)
    d = exact_ks_distance(clumsy_count_kernel(p), [0], 10, clumsy_flux(p).log_exact)
    assert d == pytest.approx(0.0548, abs=5e-4)
    # the distance shrinks with n
    p14 = ClumsyParams(14, 0.5)
    assert exact_ks_distance(clumsy_count_kernel(p14), [0], 14, clumsy_flux(p14).log_exact) < d


def test_exact_scaled_moments_at_n10():
    m1, m2 = birth_death_moments_rational(10, Fraction(1, 2))
    mu = Fraction(1, 2) ** 11
    assert mu * m1 == Fraction(73, 63)
    assert float(mu * mu * m2) == pytest.approx(2.655033848753622, rel=1e-14)


@pytest.fixture(scope="module")
def n10_samples():
    return sample_clumsy(ClumsyParams(10, 0.5), 10 ** 4, seed=0x5EED)


@pytest.mark.xfail(strict=True, reason="exact KS distance at n=10 is 0.0548 > 0.02")
def test_exp1_law_at_n10(n10_samples):
    assert stats.kstest(n10_samples.scaled(), "expon").statistic <= 0.02


@pytest.mark.xfail(strict=True, reason="exact scaled moments at n=10 are 1.159 and 2.655")
def test_moments_at_n10(n10_samples):
    x = n10_samples.scaled()
    assert abs(x.mean() - 1) <= 0.10 and abs((x ** 2).mean() / 2 - 1) <= 0.10


def test_sample_ks_tracks_exact_distance(n10_samples):
    ks = stats.kstest(n10_samples.scaled(), "expon").statistic
    assert abs(ks - 0.0548) <= 1.63 / math.sqrt(10 ** 4)


def test_not_gumbel_at_n10(n10_samples):
    rep = shape_comparison(n10_samples)
    assert rep["ks_exponential"] < rep["ks_gumbel"]

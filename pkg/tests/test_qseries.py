import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from couponflux.errors import DomainError
from couponflux.qseries import (LuckyWeightTable, infinite_chain_series,
                                infinite_chain_stationary, limiting_kernel_apply, log_gamma,
                                log_lucky_weight, log_q_pochhammer)

# (1/2; 1/2)_inf from a 60-digit mpmath product
POCHHAMMER_HALF = float(mpmath.qp(mpmath.mpf(1) / 2, mpmath.mpf(1) / 2))


def test_pochhammer_examples():
    assert log_q_pochhammer(0.5, 1) == pytest.approx(math.log(0.5), abs=1e-15)
    assert math.exp(log_q_pochhammer(0.5)) == pytest.approx(POCHHAMMER_HALF, rel=1e-14)
    assert POCHHAMMER_HALF == pytest.approx(0.288788095, abs=1e-9)
    assert log_q_pochhammer(1e-12) == pytest.approx(0.0, abs=1e-11)
    assert log_q_pochhammer(0.3, 0) == 0.0


@given(st.floats(0.01, 0.99), st.integers(0, 40))
def test_pochhammer_monotone_in_m(a, m):
    assert log_q_pochhammer(a, m + 1) <= log_q_pochhammer(a, m)
    assert log_q_pochhammer(a) <= log_q_pochhammer(a, m) + 1e-15


@given(st.floats(0.05, 0.95), st.integers(1, 30))
def test_pochhammer_finite_matches_mpmath(a, m):
    ref = float(mpmath.log(mpmath.qp(a, a, m)))
    assert log_q_pochhammer(a, m) == pytest.approx(ref, rel=1e-12, abs=1e-13)


def test_pochhammer_domain():
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DomainError):
            log_q_pochhammer(bad)


def test_lucky_weight_examples():
    assert log_lucky_weight(2, 0, 0.5) == 0.0
    assert log_lucky_weight(2, 2, 0.5, 1.0) == pytest.approx(math.log(0.0625), abs=1e-14)
    assert log_lucky_weight(2, 2, 0.5, 0.8) == pytest.approx(math.log(0.04), abs=1e-14)
    with pytest.raises(DomainError):
        log_lucky_weight(3, 4, 0.5)


@given(st.integers(1, 60), st.floats(0.05, 0.95), st.floats(0.05, 1.0))
def test_lucky_weight_recursion(n, s, big_q):
    table = LuckyWeightTable.build(n, s, big_q)
    for k in range(n):
        want = (n - k) / n * big_q * s ** (k + 1)
        assert math.exp(table.log_step(k)) == pytest.approx(want, rel=1e-12)


def test_log_gamma():
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-15)
    assert log_gamma(50.5) == pytest.approx(float(mpmath.loggamma(50.5)), rel=1e-15)
    with pytest.raises(DomainError):
        log_gamma(0.0)


def test_infinite_chain_examples():
    pi = infinite_chain_stationary(0.5, 1.0, 60)
    assert pi[0] == pytest.approx(POCHHAMMER_HALF, rel=1e-13)
    assert pi.sum() == pytest.approx(1.0, abs=1e-14)
    k = 20
    ratio = pi[k] * POCHHAMMER_HALF / 0.5 ** (k * (k + 1) / 2)
    assert abs(ratio - 1.0) <= 1e-4
    tiny = infinite_chain_stationary(0.5, 1e-12, 10)
    assert tiny[0] == pytest.approx(1.0, abs=1e-11)


@pytest.mark.parametrize("s,big_q", [(0.5, 1.0), (0.3, 0.7), (0.8, 0.9), (0.95, 0.5)])
def test_infinite_chain_fixed_point(s, big_q):
    kmax = 60
    pi = infinite_chain_stationary(s, big_q, kmax)
    image = limiting_kernel_apply(pi, s, big_q)
    assert np.max(np.abs(image[: kmax - 1] - pi[: kmax - 1])) <= 1e-10


@pytest.mark.parametrize("s,big_q", [(0.5, 1.0), (0.5, 0.8), (0.3, 0.6)])
def test_alternating_series_matches_convolution(s, big_q):
    pi = infinite_chain_stationary(s, big_q, 30)
    for k in range(16):
        assert infinite_chain_series(s, big_q, k) == pytest.approx(pi[k], rel=1e-10, abs=1e-300)

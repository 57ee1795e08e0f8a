import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from pointnls.model import (
    EULER_GAMMA,
    FREE,
    UNCONSTRAINED,
    Alpha,
    Params,
    ParameterError,
    Regime,
    alpha_from_charge,
    beta,
    bootstrap_ladder,
    lambda_alpha,
    regime_classify,
    sobolev_regularity,
)


def test_euler_gamma_digits():
    assert EULER_GAMMA == pytest.approx(0.5772156649015329, abs=1e-16)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(d=1, sigma=1, p=3, lam=1),
        dict(d=2, sigma=2, p=3, lam=1),
        dict(d=2, sigma=1, p=1, lam=1),
        dict(d=2, sigma=1, p=3, lam=0),
        dict(d=2, sigma=1, p=3, lam=1, alpha=math.inf),
    ],
)
def test_params_rejects(kwargs):
    with pytest.raises(ParameterError):
        Params(**kwargs)


def test_record_round_trip():
    p = Params(3, -1, 1.7, 0.25, -0.3)
    assert Params.from_record(p.to_record()) == p
    assert Params.from_record({"d": "2", "sigma": "1", "p": "3", "lambda": "1", "alpha": "free"}).alpha is FREE


def test_record_missing_key():
    with pytest.raises(ParameterError, match="lambda"):
        Params.from_record({"d": "2", "sigma": "1", "p": "3"})


def test_beta_closed_forms():
    # d = 2: alpha + (gamma + ln(sqrt(lam)/2)) / 2pi ; d = 3: alpha + sqrt(lam)/4pi
    assert beta(Params(2, 1, 3, 4.0, 0.0)) == pytest.approx(EULER_GAMMA / (2 * math.pi), abs=1e-15)
    assert beta(Params(3, 1, 1.5, 4.0, 0.5)) == pytest.approx(0.5 + 2 / (4 * math.pi), abs=1e-15)


def test_beta_free_rejected():
    with pytest.raises(ParameterError, match="FREE"):
        beta(Params(2, 1, 3, 1.0))


def test_lambda_alpha_values():
    assert lambda_alpha(Params(2, 1, 3, 1, 0.0)) == pytest.approx(4 * math.exp(-2 * EULER_GAMMA), rel=1e-15)
    assert lambda_alpha(Params(2, 1, 3, 1, 0.0)) == pytest.approx(1.26097, abs=5e-5)
    assert lambda_alpha(Params(3, 1, 1.5, 1, -1.0)) == pytest.approx(16 * math.pi**2, rel=1e-15)
    assert lambda_alpha(Params(3, 1, 1.5, 1, 1.0)) == 0.0
    assert lambda_alpha(Params(3, 1, 1.5, 1, 0.0)) == 0.0
    assert lambda_alpha(Params(2, 1, 3, 1)) == 0.0


@pytest.mark.parametrize("d,alpha", [(2, 0.0), (2, -0.7), (2, 0.4), (3, -1.0), (3, -0.02)])
def test_lambda_alpha_is_root_of_beta(d, alpha):
    p = Params(d, 1, 1.5, 1.0, alpha)
    la = lambda_alpha(p)
    root = brentq(lambda x: beta(p, x), la / 10, la * 10, xtol=1e-15, rtol=1e-15)
    assert la == pytest.approx(root, rel=1e-12)


@given(st.floats(-2, 2), st.sampled_from([2, 3]))
def test_beta_vanishes_at_lambda_alpha(alpha, d):
    p = Params(d, 1, 1.5, 1.0, alpha)
    la = lambda_alpha(p)
    if la > 0:
        assert abs(beta(p, la)) <= 1e-12 * max(1.0, abs(alpha))


@given(st.floats(-2, 2), st.floats(0.01, 50))
def test_beta_increasing_in_lambda(alpha, lam):
    p = Params(2, 1, 3, 1.0, alpha)
    assert beta(p, lam * 1.01) > beta(p, lam)


def test_regimes():
    assert regime_classify(2, 7.0) is Regime.STRONG
    assert regime_classify(3, 1.99) is Regime.STRONG
    assert regime_classify(3, 2.0) is Regime.WEAK
    assert regime_classify(3, 2.99) is Regime.WEAK
    assert regime_classify(3, 3.0) is Regime.OUT_OF_RANGE
    with pytest.raises(ParameterError):
        Params(3, 1, 3.5, 1.0).require_solvable()


def test_sobolev_ranges():
    assert sobolev_regularity(2, 5.0).is_point and 2.0 in sobolev_regularity(2, 5.0)
    assert 2.0 in sobolev_regularity(3, 1.2)
    r = sobolev_regularity(3, 1.75)
    assert 1.6 in r and 1.5 not in r and 1.75 not in r
    w = sobolev_regularity(3, 2.5)
    assert 0.75 in w and 1.0 not in w and 0.5 not in w
    with pytest.raises(ParameterError):
        sobolev_regularity(3, 3.0)


def test_ladder_values():
    ladder, k = bootstrap_ladder(2.5, 0.01)
    assert k == 2
    assert ladder[1] - ladder[0] == Fraction(-1, 6)
    assert bootstrap_ladder(2.9, 0.01)[1] == 10


@given(st.floats(1.05, 2.95), st.floats(1e-3, 0.3))
def test_ladder_matches_recursion(p, eps):
    ladder, k = bootstrap_ladder(p, eps)
    assert ladder[-1] < 0 <= ladder[-2]
    x = 1.0 / 3.0 - eps
    n = 0
    while x >= 0:
        x += (p - 3) / 3
        n += 1
    # float recursion agrees except within round-off of the threshold
    assert abs(n - k) <= 1 and (n == k or abs(float(ladder[-2])) < 1e-12)


def test_ladder_rejects():
    with pytest.raises(ParameterError):
        bootstrap_ladder(3.0)


@given(st.floats(-10, 10).filter(lambda q: abs(q) > 1e-3), st.floats(-10, 10), st.sampled_from([2, 3]), st.floats(0.1, 10))
def test_alpha_from_charge_round_trip(q, f0, d, lam):
    alpha = alpha_from_charge(q, f0, lam, d)
    p = Params(d, 1, 1.5, lam, alpha)
    assert beta(p) * q == pytest.approx(f0, abs=1e-10 * max(1, abs(f0), abs(q * alpha)))


def test_alpha_from_charge_free():
    assert alpha_from_charge(0.0, 1.0, 1.0, 2) is FREE
    assert isinstance(UNCONSTRAINED, Alpha)

import math

import numpy as np
import pytest

from fracholder._quad import richardson
from fracholder.errors import DomainError
from fracholder.holder import (DEFAULT_WINDOW, EFactorQuery, HolderOrder, IncrementCurve,
                               caputo_h, caputo_h_limit, e_factor, fit_exponent, h_derivative,
                               h_derivatives_at_s, h_s, increment_space, increment_tail,
                               increment_time, space_curve, tail_curve, time_curve)
from fracholder.kernels import ModelParams, plancherel_constant
from fracholder.special import gamma

HEAT = ModelParams(2.0, 1.0, 0.0)
P15 = ModelParams(2.0, 1.0, 0.5)
P29 = ModelParams(2.0, 1.8, 0.6)


def heat_h(s, t):
    return (math.sqrt(t + s) - math.sqrt(t - s)) / math.sqrt(2 * math.pi)


def test_holder_order():
    assert HolderOrder.for_params(P29, 2.61).n == 2
    with pytest.raises(DomainError):
        HolderOrder.for_params(HEAT, 0.6)
    with pytest.raises(DomainError):
        HolderOrder(0.4, 1, 0.5)


def test_e_factor_at_zero_frequency():
    q = EFactorQuery(1.5, 1.0, 0.25, 0.8, 0.0, P15)
    exact = 1.25 ** -0.2 * 0.75**0.5 / (gamma(0.8) * gamma(1.5)) / (2 * math.pi)
    assert e_factor(q) == pytest.approx(exact, rel=1e-13)


def test_e_factor_square_when_t_equals_s():
    q = EFactorQuery(1.0, 1.0, 0.3, P29.zeta, 1.7, P29)
    assert e_factor(q) >= 0


def test_e_factor_series_oracle(oracle):
    o = oracle["e_factor"]
    p = ModelParams(o["alpha"], o["beta"], o["gamma"])
    q = EFactorQuery(o["t"], o["s"], o["r"], o["delta"], o["xi"], p)
    assert e_factor(q) == pytest.approx(o["value"], rel=1e-11)


def test_e_factor_query_validation():
    with pytest.raises(DomainError):
        EFactorQuery(1.0, 1.0, 1.0, 0.5, 1.0, HEAT)
    with pytest.raises(DomainError):
        EFactorQuery(1.0, 1.2, 0.0, 0.5, 1.0, HEAT)


def test_heat_h_at_diagonal():
    assert h_s(HEAT, 1.0, 1.0) == pytest.approx(0.5641895835477563, rel=1e-10)


def test_heat_h_off_diagonal(oracle):
    assert h_s(HEAT, 1.0, 1.5) == pytest.approx(oracle["heat_h_1_1.5"], rel=1e-10)
    for s, t in [(0.5, 0.52), (2.0, 7.0)]:
        assert h_s(HEAT, s, t) == pytest.approx(heat_h(s, t), rel=1e-10)


def test_h_diagonal_closed_form():
    for p in (P15, P29, ModelParams(1.5, 0.8, 0.6)):
        c = plancherel_constant(p).c
        assert h_s(p, 0.7, 0.7) == pytest.approx(c * 0.7**p.rho / p.rho, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_h_self_similarity(lam):
    for p in (HEAT, P15, ModelParams(1.5, 0.8, 0.6)):
        assert h_s(p, lam * 1.0, lam * 1.3) == pytest.approx(lam**p.rho * h_s(p, 1.0, 1.3), rel=1e-8)


def test_h_rejects_bad_times():
    with pytest.raises(DomainError):
        h_s(HEAT, 1.0, 0.9)
    with pytest.raises(DomainError):
        h_s(HEAT, 0.0, 1.0)


def test_heat_h_derivative():
    # d/dt of the closed form
    s, t = 1.0, 1.4
    exact = (0.5 / math.sqrt(t + s) - 0.5 / math.sqrt(t - s)) / math.sqrt(2 * math.pi)
    assert h_derivative(HEAT, s, t, 1) == pytest.approx(exact, rel=1e-9)


def test_derivatives_at_s_regimes():
    assert h_derivatives_at_s(HEAT, 1.0) == (None, None)
    h1, h2 = h_derivatives_at_s(P15, 1.0)
    assert h2 is None
    assert h1 == pytest.approx(plancherel_constant(P15).c / 2, rel=1e-14)
    h1, h2 = h_derivatives_at_s(P29, 1.0)
    assert h1 is not None and h2 is not None


def _first_difference(p, s, levels=8):
    d = 0.05 * s * 0.5 ** np.arange(levels)
    h0 = h_s(p, s, s)
    vals = [(h_s(p, s, s + x) - h0) / x for x in d]
    return richardson(d, vals, [p.rho - 1, 1, p.rho, 2])[0]


def _second_difference(p, s, h1, levels=9):
    d = 0.1 * s * 0.5 ** np.arange(levels)
    h0 = h_s(p, s, s)
    vals = [2 * (h_s(p, s, s + x) - h0 - h1 * x) / x**2 for x in d]
    return richardson(d, vals, [p.rho - 2, 1, p.rho - 1, 2])[0]


@pytest.mark.parametrize("s", [0.6, 1.0, 2.5])
def test_h1_matches_finite_difference(s):
    for p in (P15, P29):
        h1, _ = h_derivatives_at_s(p, s)
        assert _first_difference(p, s) == pytest.approx(h1, rel=1e-4)


def test_h2_matches_finite_difference():
    h1, h2 = h_derivatives_at_s(P29, 1.0)
    assert _second_difference(P29, 1.0, h1) == pytest.approx(h2, rel=1e-3)


def test_caputo_h_heat_oracle(oracle):
    for q in (0.45, 0.25):
        got = caputo_h(HEAT, HolderOrder.for_params(HEAT, q), 1.0, 1.1)
        assert got == pytest.approx(oracle[f"heat_caputo_h_q{q}"], rel=1e-7)


def test_caputo_h_scaling():
    p = P15
    order = HolderOrder.for_params(p, 1.3)
    base = caputo_h(p, order, 1.0, 1.2)
    for lam in (0.5, 2.0):
        assert caputo_h(p, order, lam, 1.2 * lam) == pytest.approx(lam ** (p.rho - 1.3) * base, rel=1e-7)


def test_caputo_h_checks_order():
    with pytest.raises(DomainError):
        caputo_h(HEAT, HolderOrder.for_params(P15, 0.4), 1.0, 1.1)


def test_caputo_h_limit_vanishes_heat():
    order = HolderOrder.for_params(HEAT, 0.45)
    res = caputo_h_limit(HEAT, order, 1.0)
    far = res.samples[0][1]
    assert res.samples[0][0] == pytest.approx(0.1)
    assert abs(res.value) < 1e-3 * abs(far)


def test_decomposition_identity_random():
    rng = np.random.default_rng(5)
    for p in (HEAT, P15, P29):
        for _ in range(3):
            s = rng.uniform(0.2, 2.0)
            t = s * (1 + rng.uniform(0.01, 1.0))
            direct = increment_time(p, s, t)
            c = plancherel_constant(p).c
            ident = c / p.rho * (t**p.rho - (t - s) ** p.rho + s**p.rho) - 2 * h_s(p, s, t)
            assert direct == pytest.approx(ident, rel=1e-6)


def test_increments_nonnegative():
    for p in (HEAT, P29, ModelParams(1.5, 0.8, 0.6)):
        for lag in (1e-4, 1e-2, 0.5):
            assert increment_time(p, 1.0, 1.0 + lag) >= 0
            assert increment_space(p, 1.0, lag) >= 0
            assert increment_tail(p, 1.0, 1.0 + lag) >= 0


def test_increment_edge_cases():
    assert increment_time(HEAT, 1.0, 1.0) == 0.0
    assert increment_tail(HEAT, 1.0, 1.0) == 0.0
    assert increment_space(HEAT, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        increment_time(HEAT, 1.0, 1.2, method="other")


def test_increment_tail_exact():
    assert increment_tail(HEAT, 1.0, 2.0) == pytest.approx(0.5641895835477563, rel=1e-12)
    for p in (HEAT, P29):
        assert increment_tail(p, 1.0, 1.4) / increment_tail(p, 1.0, 1.2) == pytest.approx(2**p.rho)


def test_heat_space_increment_closed_form():
    # int_0^T int |FY|^2 2(1 - cos(xi h)) dxi / 2pi for the heat kernel
    T, h = 1.0, 0.3
    exact = (2 * math.sqrt(T) * (1 - math.exp(-h * h / (4 * T))) / math.sqrt(math.pi)
             + h * math.erfc(h / (2 * math.sqrt(T))))
    assert increment_space(HEAT, T, h) == pytest.approx(exact, rel=1e-8)


def test_fit_exponent_exact_power():
    lags = np.geomspace(1e-3, 1, 10)
    fit = fit_exponent(IncrementCurve(lags, 3 * lags**1.7, "time"))
    assert fit.slope == pytest.approx(1.7, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3), abs=1e-12)
    assert fit.residual_rms < 1e-12


def test_fit_exponent_errors():
    lags = np.geomspace(1e-3, 1, 10)
    with pytest.raises(DomainError):
        fit_exponent(IncrementCurve(lags, lags, "time"), slice(0, 3))
    with pytest.raises(DomainError):
        IncrementCurve(np.ones(5), np.ones(5), "time")
    with pytest.raises(DomainError):
        IncrementCurve(lags, -lags, "time")
    with pytest.raises(DomainError):
        fit_exponent(IncrementCurve(lags, np.where(lags > 0.1, lags, 0.0), "time"))


def test_tail_curve_slope_is_rho():
    for p in (HEAT, P15, P29):
        assert fit_exponent(tail_curve(p, 1.0)).slope == pytest.approx(p.rho, abs=1e-10)


def test_heat_time_slope():
    lags = 2.0 ** -np.arange(4, 14)[::-1]
    assert fit_exponent(time_curve(HEAT, 1.0, lags)).slope == pytest.approx(0.5, abs=0.03)
    assert fit_exponent(time_curve(HEAT, 1.0), DEFAULT_WINDOW).slope == pytest.approx(0.5, abs=0.03)


def test_space_slopes():
    assert fit_exponent(space_curve(HEAT, 1.0), DEFAULT_WINDOW).slope == pytest.approx(1.0, abs=0.05)
    p = ModelParams(2.0, 1.6, 0.0)
    assert fit_exponent(space_curve(p, 1.0), DEFAULT_WINDOW).slope == pytest.approx(1.75, abs=0.07)


def test_taylor_remainder_decays():
    # |h_s(t) - h_s(s) - h1 (t - s)| / (t - s)**q decreases for q < rho
    s, q = 1.0, 1.4
    h1, _ = h_derivatives_at_s(P15, s)
    h0 = h_s(P15, s, s)
    d = 0.1 * 0.5 ** np.arange(8)
    ratios = [abs(h_s(P15, s, s + x) - h0 - h1 * x) / x**q for x in d]
    assert all(b < a * (1 + 1e-6) for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.75 * ratios[0]

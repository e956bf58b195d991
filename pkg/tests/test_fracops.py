import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracholder.errors import DomainError
from fracholder.fracops import (FracOrder, RealFunction, caputo_derivative,
                                fractional_taylor_remainder, local_frac_derivative, power_function,
                                rl_derivative, rl_integral, taylor_coefficients)
from fracholder.special import gamma, mittag_leffler


def const(c, lo=0.0, hi=2.0):
    return power_function(0.0, lo, hi, c)


def exp_function(s=0.0, hi=2.0, rate=1.0):
    return RealFunction(lambda y: np.exp(rate * (y - s)), s, hi, 10**6,
                        lambda y, k: rate**k * np.exp(rate * (y - s)),
                        lambda u: np.exp(rate * u))


def numeric(g, lo, hi):
    """Wrap a scalar function so it accepts arrays."""
    return RealFunction(lambda y: np.array([g(v) for v in np.atleast_1d(y)]), lo, hi)


def test_types_validate():
    with pytest.raises(DomainError):
        RealFunction(np.sin, 1.0, 1.0)
    assert FracOrder(1.3).n == 1
    assert FracOrder(2.0).n == 1
    with pytest.raises(DomainError):
        FracOrder(0.0)


def test_rl_integral_of_one_is_plain_integral():
    assert rl_integral(const(1.0, 0, 3), 1.0, 0.0, 2.0) == pytest.approx(2.0, rel=1e-13)


def test_rl_integral_power_rule_instance():
    assert rl_integral(power_function(1.0, 0, 2), 0.5, 0.0, 1.0) == pytest.approx(
        0.7522527780636751, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 3.0), st.floats(0.05, 3.0), st.floats(0.1, 2.0))
def test_rl_integral_power_rule(p, q, t):
    f = power_function(p, 0.0, 2.0)
    expected = gamma(p + 1) / gamma(p + 1 + q) * t ** (p + q)
    assert rl_integral(f, q, 0.0, t) == pytest.approx(expected, rel=1e-9)


def test_rl_integral_mittag_leffler_kernel(oracle):
    o = oracle["ml_kernel_rl"]
    a, b = o["alpha"], o["beta"]
    f = RealFunction(lambda y: y ** (b - 1) * mittag_leffler(a, b, -o["lam"] * y**a), 0.0, 2.0)
    assert rl_integral(f, o["q"], 0.0, o["t"]) == pytest.approx(o["value"], rel=1e-10)


def test_rl_integral_shifted_base():
    f = power_function(1.5, 0.4, 2.0)
    expected = gamma(2.5) / gamma(3.2) * 0.6**2.2
    assert rl_integral(f, 0.7, 0.4, 1.0) == pytest.approx(expected, rel=1e-10)


def test_rl_derivative_examples():
    q = 0.5
    assert rl_derivative(power_function(q, 0, 2), q, 0.0, 0.8) == pytest.approx(
        0.886226925452758, rel=1e-7)
    for c in (1.0, -2.5):
        assert rl_derivative(const(c), 0.5, 0.0, 1.0) == pytest.approx(
            0.5641895835477563 * c, rel=1e-7)


def test_rl_derivative_inverts_the_ml_integral():
    # D^0.4 (t^{b+0.4-1} E_{a,b+0.4}) = t^{b-1} E_{a,b}
    a, b, q = 0.7, 1.2, 0.4
    g = RealFunction(lambda y: y ** (b + q - 1) * mittag_leffler(a, b + q, y**a), 0.0, 2.0)
    direct = 1.5 ** (b - 1) * mittag_leffler(a, b, 1.5**a)
    assert rl_derivative(g, q, 0.0, 1.5) == pytest.approx(direct, rel=1e-7)


def test_inverse_of_numerical_integral():
    f = RealFunction(lambda y: 1 + y - 0.3 * y**2, 0.0, 1.0)
    q = 0.6
    g = numeric(lambda v: rl_integral(f, q, 0.0, v) if v > 0 else 0.0, 0.0, 1.0)
    assert rl_derivative(g, q, 0.0, 0.7) == pytest.approx(float(f(0.7)), rel=1e-7)


def test_semigroup_on_random_polynomials():
    rng = np.random.default_rng(11)
    for _ in range(3):
        c = rng.normal(size=4)
        f = RealFunction(lambda y, c=c: np.polyval(c, y), 0.0, 1.0)
        q1, q2 = rng.uniform(0.2, 1.2, 2)
        inner = numeric(lambda v: rl_integral(f, q2, 0.0, v) if v > 0 else 0.0, 0.0, 1.0)
        lhs = rl_integral(inner, q1, 0.0, 0.9)
        rhs = rl_integral(f, q1 + q2, 0.0, 0.9)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


def test_caputo_kills_constants():
    for q in (0.3, 1.0, 1.7):
        assert caputo_derivative(const(4.0), q, 0.0, 1.3) == pytest.approx(0.0, abs=1e-10)


def test_caputo_power_rule():
    # Gamma(3.5) / Gamma(3) = 1.6616754852239212
    for t in (0.5, 1.0, 1.7):
        got = caputo_derivative(power_function(2.5, 0, 2), 0.5, 0.0, t)
        assert got == pytest.approx(1.6616754852239212 * t**2, rel=1e-10)


def test_caputo_exponential(oracle):
    got = caputo_derivative(exp_function(), 0.5, 0.0, 1.0)
    assert got == pytest.approx(oracle["exp_caputo_q0.5_t1"], rel=1e-12)
    assert got == pytest.approx(2.29069825230324, rel=1e-13)


def test_caputo_forms_agree():
    for q in (0.4, 1.5, 2.3):
        assert caputo_derivative(exp_function(0.2, 2.0, 1.3), q, 0.2, 1.4, cross_check=True) \
            == pytest.approx(caputo_derivative(exp_function(0.2, 2.0, 1.3), q, 0.2, 1.4), rel=1e-7)


def test_caputo_numerical_taylor_path():
    # no analytic derivatives: Taylor data come from one-sided differences
    f = RealFunction(lambda y: np.exp(y) + y**2, 0.0, 2.0)
    g = exp_function()
    exact = caputo_derivative(g, 1.4, 0.0, 1.0) + 2 * 1.0**0.6 / gamma(1.6)
    assert caputo_derivative(f, 1.4, 0.0, 1.0) == pytest.approx(exact, rel=1e-6)


def test_caputo_composition():
    # D^q f = D^{q-n} f^{(n)} for f with n + 2 derivatives
    f = exp_function(0.0, 2.0, 0.8)
    fp = RealFunction(lambda y: 0.8 * np.exp(0.8 * y), 0.0, 2.0, 10**6,
                      lambda y, k: 0.8 ** (k + 1) * np.exp(0.8 * y), lambda u: 0.8 * np.exp(0.8 * u))
    for t in (0.3, 1.1, 1.9):
        assert caputo_derivative(f, 1.35, 0.0, t) == pytest.approx(
            caputo_derivative(fp, 0.35, 0.0, t), rel=1e-6)


def test_caputo_equals_rl_with_vanishing_taylor_data():
    f = RealFunction(lambda y: y**3 * np.exp(y), 0.0, 2.0)
    for q in (0.5, 1.5):
        assert caputo_derivative(f, q, 0.0, 1.2) == pytest.approx(
            rl_derivative(f, q, 0.0, 1.2), rel=1e-8)


def test_taylor_coefficients():
    np.testing.assert_allclose(taylor_coefficients(exp_function(), 2, 0.0), [1, 1, 1], rtol=1e-12)
    f = RealFunction(lambda y: np.sin(y) + y**3, 0.0, 2.0)
    np.testing.assert_allclose(taylor_coefficients(f, 3, 0.5),
                               [math.sin(0.5) + 0.125, math.cos(0.5) + 0.75,
                                -math.sin(0.5) + 3.0, -math.cos(0.5) + 6.0], rtol=1e-7)


def test_interval_checks():
    f = power_function(1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        rl_integral(f, 0.5, 0.0, 1.5)
    with pytest.raises(DomainError):
        rl_integral(f, -0.5, 0.0, 0.5)
    with pytest.raises(DomainError):
        caputo_derivative(f, 0.5, 0.5, 0.5)


def test_lfd_examples():
    q = 0.6
    above = local_frac_derivative(power_function(1.1, 0, 1), q, 0.0)
    assert above.status == "limit" and abs(above.value) < 1e-6
    exact = local_frac_derivative(power_function(q, 0, 1), q, 0.0)
    assert exact.status == "limit" and exact.value == pytest.approx(gamma(1 + q), rel=1e-8)
    below = local_frac_derivative(power_function(0.3, 0, 1), q, 0.0)
    assert below.status == "divergent"


def _lfd_case(rng):
    q = rng.uniform(0.15, 1.85)
    n = math.ceil(q) - 1
    case = rng.integers(3)
    if case == 0:
        p = q
    elif case == 1:
        p = q + rng.uniform(0.1, 1.4)
        if abs(p - q - round(p - q)) < 0.05:
            p += 0.1
    else:
        if q - n < 0.15:
            return _lfd_case(rng)
        p = rng.uniform(n + 0.05, q - 0.05)
    return p, q


def test_lfd_power_rule_table_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        p, q = _lfd_case(rng)
        res = local_frac_derivative(power_function(p, 0.0, 1.0), q, 0.0)
        if p == q:
            assert res.status == "limit" and res.value == pytest.approx(gamma(q + 1), rel=1e-6), (p, q)
        elif p > q:
            assert res.status == "limit" and abs(res.value) < 1e-5, (p, q, res)
        else:
            assert res.status == "divergent", (p, q, res)


def test_lfd_samples_are_recorded():
    res = local_frac_derivative(power_function(0.3, 0, 1), 0.6, 0.0)
    assert len(res.samples) >= 4
    ds = [d for d, _ in res.samples]
    assert all(b < a for a, b in zip(ds, ds[1:]))


def test_taylor_remainder_examples():
    q = 0.7
    f = power_function(q, 0.0, 1.0)
    for t in (0.1, 0.5):
        assert fractional_taylor_remainder(f, q, 0.0, t) == pytest.approx(t**q, rel=1e-13)
    g = RealFunction(lambda y: y + y**1.5, 0.0, 1.0, 1, lambda y, k: {0: y + y**1.5,
                                                                      1: 1 + 1.5 * y**0.5}[k])
    for t in (0.2, 0.9):
        assert fractional_taylor_remainder(g, 1.5, 0.0, t) == pytest.approx(t**1.5, rel=1e-9)

"""Self-check suites behind ``fracholder verify``.

Each check compares a computed quantity with an independent reference and
records the measured error.  Tolerance profiles scale every tolerance.  The
``perturb`` argument offsets each computed value by a relative amount before
comparison; it exists so tests can confirm that failures are reported.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List

import numpy as np

from . import _mlpy
from .errors import FracHolderError
from .fracops import (RealFunction, caputo_derivative, local_frac_derivative, power_function,
                      rl_integral)
from .holder import (HolderOrder, caputo_h_limit, h_derivative, h_derivatives_at_s, h_s,
                     increment_time)
from .kernels import ModelParams, int_Y_squared, kernel_Y, plancherel_constant, y_squared_quadrature
from .special import BACKEND, _kern, gamma, ml_envelope, mittag_leffler

PROFILES = {"loose": 10.0, "default": 1.0, "strict": 0.1}
SUITES = ("special", "fracops", "kernels", "holder")

HEAT = ModelParams(2.0, 1.0, 0.0)


@dataclass
class Check:
    suite: str
    name: str
    error: float
    tolerance: float
    passed: bool
    seconds: float


class _Runner:
    def __init__(self, suite: str, scale: float, perturb: float):
        self.suite, self.scale, self.perturb = suite, scale, perturb
        self.checks: List[Check] = []

    def _shift(self, value):
        value = np.asarray(value, dtype=float)
        return value + self.perturb * np.maximum(1.0, np.abs(value))

    def compare(self, name: str, fn: Callable, tol: float, relative: bool = True):
        """``fn`` returns (computed, reference) arrays."""
        t0 = time.perf_counter()
        try:
            got, ref = fn()
        except (FracHolderError, ArithmeticError):
            return self._add(name, math.inf, tol, t0)
        got = self._shift(got)
        ref = np.asarray(ref, dtype=float)
        err = np.abs(got - ref)
        if relative:
            err = err / np.maximum(np.abs(ref), 1e-300)
        self._add(name, float(np.max(err)), tol, t0)

    def bound(self, name: str, fn: Callable, tol: float):
        """``fn`` returns a nonnegative quantity that must stay below ``tol``."""
        t0 = time.perf_counter()
        try:
            val = float(self._shift(fn()))
        except (FracHolderError, ArithmeticError):
            val = math.inf
        self._add(name, val, tol, t0)

    def _add(self, name, err, tol, t0):
        tol = tol * self.scale
        ok = bool(math.isfinite(err) and err <= tol)
        self.checks.append(Check(self.suite, name, err, tol, ok, time.perf_counter() - t0))


def _special(run: _Runner):
    run.compare("golden values", lambda: (
        [mittag_leffler(1, 1, 1.0), mittag_leffler(1, 2, 1.0),
         mittag_leffler(2, 1, math.pi**2 / 4)],
        [math.exp(-1), 1 - math.exp(-1), 0.0]), 1e-10, relative=False)

    rng = np.random.default_rng(20240601)
    beta = rng.uniform(0.2, 1.9, 20)
    zeta = rng.uniform(0.3, 3.0, 20)
    x = rng.uniform(0.0, 50.0, 20)

    def recurrence():
        lhs = [mittag_leffler(b, z, v) for b, z, v in zip(beta, zeta, x)]
        rhs = [1 / gamma(z) - v * mittag_leffler(b, z + b, v) for b, z, v in zip(beta, zeta, x)]
        return lhs, rhs

    run.compare("recurrence E(b,z) = 1/G(z) - x E(b,z+b)", recurrence, 1e-9, relative=False)

    def overlap():
        got, ref = [], []
        for b, z in zip(beta[:8], zeta[:8]):
            lo = np.linspace(0.7, 1.0, 5) * _mlpy.SERIES_R
            hi = np.linspace(1.0, 1.4, 5) * _mlpy.ASYMP_R
            s, _ = _mlpy.series_branch(b, z, lo**b)
            a, _ = _mlpy.asymptotic_branch(b, z, hi**b)
            got += list(s) + list(a)
            ref += list(_mlpy.contour_branch(b, z, lo**b)) + list(_mlpy.contour_branch(b, z, hi**b))
        return got, ref

    run.compare("branch agreement on overlap bands", overlap, 1e-8, relative=False)

    def envelope():
        worst = 0.0
        for b, z in zip(np.clip(beta[:6], 0.2, 1.9), zeta[:6]):
            env = ml_envelope(b, z, 100.0)
            xs = rng.uniform(0.0, 100.0, 200)
            worst = max(worst, float(np.max(np.abs(mittag_leffler(b, z, xs)) * (1 + xs))) / env - 1)
        return max(worst, 0.0)

    run.bound("envelope bound |E|(1+x) <= A", envelope, 1e-12)

    if BACKEND == "compiled":
        def backends():
            xs = np.geomspace(1e-3, 1e4, 60)
            got, ref = [], []
            for b, z in zip(beta[:6], zeta[:6]):
                got += list(_kern.ml_neg(b, z, xs))
                ref += list(_mlpy.ml_neg(b, z, xs))
            return got, ref

        run.compare("compiled and pure-Python kernels agree", backends, 1e-12, relative=False)


def _fracops(run: _Runner):
    run.compare("RL integral power rule", lambda: (
        rl_integral(power_function(1.0), 0.5, 0.0, 1.0), gamma(2) / gamma(2.5)), 1e-10)

    a, b, q, t = 0.7, 1.2, 0.4, 1.5
    f = RealFunction(lambda y: y ** (b - 1) * mittag_leffler(a, b, y**a), 0.0, 2.0)
    run.compare("RL integral of the Mittag-Leffler kernel", lambda: (
        rl_integral(f, q, 0.0, t), t ** (b + q - 1) * mittag_leffler(a, b + q, t**a)), 1e-6)

    poly = RealFunction(lambda y: 1 + 2 * y - 0.5 * y**3, 0.0, 1.0)

    def semigroup():
        inner = RealFunction(lambda y: np.array([rl_integral(poly, 0.5, 0.0, v) if v > 0 else 0.0
                                                 for v in np.atleast_1d(y)]), 0.0, 1.0)
        return rl_integral(inner, 0.3, 0.0, 0.8), rl_integral(poly, 0.8, 0.0, 0.8)

    run.compare("semigroup I^0.3 I^0.5 = I^0.8", semigroup, 1e-8)

    ex = RealFunction(np.exp, 0.0, 2.0, 10**6, lambda y, k: np.exp(y), lambda u: np.exp(u))
    run.compare("Caputo smooth and Taylor-subtracted forms agree", lambda: (
        caputo_derivative(ex, 1.5, 0.0, 1.0, cross_check=True),
        caputo_derivative(ex, 1.5, 0.0, 1.0)), 1e-7)

    run.compare("Caputo power rule", lambda: (
        caputo_derivative(power_function(2.5), 0.5, 0.0, 0.7), gamma(3.5) / gamma(3) * 0.49), 1e-9)

    def lfd_table():
        exact = local_frac_derivative(power_function(0.6), 0.6, 0.0)
        above = local_frac_derivative(power_function(1.3), 0.6, 0.0)
        below = local_frac_derivative(power_function(0.3), 0.6, 0.0)
        err = abs(exact.value - gamma(1.6)) + abs(above.value)
        ok = exact.status == above.status == "limit" and below.status == "divergent"
        return err if ok else math.inf

    run.bound("local derivative power-rule table", lfd_table, 1e-5)


def _kernels(run: _Runner):
    run.compare("heat Y is the Gaussian kernel", lambda: (
        [kernel_Y(HEAT, 1.0, x) for x in (0.0, 0.5, 2.0)],
        [math.exp(-x * x / 2) / math.sqrt(2 * math.pi) for x in (0.0, 0.5, 2.0)]), 1e-10,
        relative=False)
    run.compare("heat Plancherel constant", lambda: (
        plancherel_constant(HEAT).c, 0.5 / math.sqrt(math.pi)), 1e-12)
    run.compare("Plancherel identity, heat", lambda: (
        y_squared_quadrature(HEAT, 1.3), int_Y_squared(HEAT, 1.3)), 1e-4)
    frac = ModelParams(2.0, 1.8, 0.6)
    run.compare("Plancherel identity, alpha=2 beta=1.8 gamma=0.6", lambda: (
        y_squared_quadrature(frac, 0.7), int_Y_squared(frac, 0.7)), 1e-3)


def _holder(run: _Runner):
    def heat_h():
        s, ts = 1.0, (1.0, 1.5, 3.0)
        exact = [(math.sqrt(t + s) - math.sqrt(t - s)) / math.sqrt(2 * math.pi) for t in ts]
        return [h_s(HEAT, s, t) for t in ts], exact

    run.compare("heat h_s closed form", heat_h, 1e-10)

    frac = ModelParams(2.0, 1.8, 0.6)

    def decomposition():
        pts = [(1.0, 1.3), (0.5, 0.55), (2.0, 3.5)]
        return ([increment_time(frac, s, t, "identity") for s, t in pts],
                [increment_time(frac, s, t, "direct") for s, t in pts])

    run.compare("decomposition identity", decomposition, 1e-6)

    p15 = ModelParams(2.0, 1.0, 0.5)
    run.compare("h'(s) closed form", lambda: (
        h_derivatives_at_s(p15, 1.2)[0], h_derivative(p15, 1.2, 1.2, 1)), 1e-8)

    def lfd_vanishes():
        order = HolderOrder.for_params(HEAT, 0.45)
        res = caputo_h_limit(HEAT, order, 1.0)
        far = [v for d, v in res.samples if abs(d - 0.1) < 1e-12]
        return abs(res.value) / abs(far[0])

    run.bound("local derivative of h_s vanishes at s", lfd_vanishes, 1e-3)


_SUITE_FUNCS: Dict[str, Callable] = {
    "special": _special, "fracops": _fracops, "kernels": _kernels, "holder": _holder,
}


def run_suite(suite: str, profile: str = "default", perturb: float = 0.0) -> List[Check]:
    """Run one suite or ``"all"``; exceptions inside a check count as failures."""
    if profile not in PROFILES:
        raise ValueError(f"unknown tolerance profile {profile!r}")
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name not in _SUITE_FUNCS:
            raise ValueError(f"unknown suite {name!r}")
        run = _Runner(name, PROFILES[profile], perturb)
        _SUITE_FUNCS[name](run)
        out.extend(run.checks)
    return out


def report(checks: List[Check]) -> dict:
    return {"passed": all(c.passed for c in checks), "checks": [asdict(c) for c in checks]}

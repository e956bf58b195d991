"""Left-sided fractional operators on real functions.

All operators act on a :class:`RealFunction`, whose callable must accept
numpy arrays.  Where a function is evaluated close to its left end the
optional ``at_offset`` evaluator is preferred, which lets callers avoid the
cancellation in ``f(lo + u) - f(lo)`` style expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._quad import one_sided_weights, richardson, tanh_sinh
from .errors import AccuracyError, DomainError
from .special import gamma, rgamma


@dataclass(frozen=True)
class RealFunction:
    """A real function on ``[lo, hi]``.

    ``deriv(t, k)`` returns the k-th classical derivative when known.
    ``offset(u)`` returns ``f(lo + u)`` and is used near the left end;
    ``deriv_offset(u, k)`` is the same for ``deriv``.
    ``smoothness`` is the number of classical derivatives that exist at ``lo``.
    """

    func: Callable
    lo: float
    hi: float
    smoothness: int = 0
    deriv: Optional[Callable] = None
    offset: Optional[Callable] = None
    deriv_offset: Optional[Callable] = None

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def at_offset(self, u):
        u = np.asarray(u, dtype=float)
        if self.offset is not None:
            return self.offset(u)
        return self.func(self.lo + u)


@dataclass(frozen=True)
class FracOrder:
    q: float
    n: int = field(init=False)

    def __post_init__(self):
        if not (self.q > 0 and math.isfinite(self.q)):
            raise DomainError(f"fractional order must be positive, got {self.q}")
        object.__setattr__(self, "n", math.ceil(self.q) - 1)


def _as_order(q) -> FracOrder:
    return q if isinstance(q, FracOrder) else FracOrder(float(q))


def _check_interval(f: RealFunction, s: float, t: float):
    if s < f.lo or t > f.hi * (1 + 1e-15) + 1e-300 or t < s:
        raise DomainError(f"need lo <= s <= t <= hi, got s={s}, t={t} on [{f.lo}, {f.hi}]")


def rl_integral(f: RealFunction, q: float, s: float, t: float, tol: float = 1e-10) -> float:
    """(I^q f)(t) = 1/Gamma(q) int_s^t f(y) (t - y)**(q - 1) dy."""
    if not q > 0:
        raise DomainError(f"integration order must be positive, got {q}")
    _check_interval(f, s, t)
    if t == s:
        return 0.0
    base = s - f.lo
    scale = float(rgamma(q))

    def integrand(y, dl, dr):
        return f.at_offset(base + dl) * dr ** (q - 1.0) * scale

    val, _ = tanh_sinh(integrand, s, t, rtol=tol, atol=1e-300, max_level=12)
    return val


def _stencil(k: int, t: float, lo: float, hi: float):
    """Offsets, weights, error exponents and a base step for a k-th derivative."""
    if k == 0:
        return np.zeros(1), np.ones(1), [2, 4], 0.0
    m = (k + 1) // 2
    room_left, room_right = t - lo, hi - t
    if room_right >= 0.05 * room_left:
        offsets = np.arange(-m, m + 1, dtype=float)
        a = np.vander(offsets, increasing=True).T
        rhs = np.zeros(len(offsets))
        rhs[k] = math.factorial(k)
        weights = np.linalg.solve(a, rhs)
        h0 = 0.5 * min(room_left, room_right) / m
        return offsets, weights, [2, 4, 6, 8], h0
    # too close to the right end: backward differences
    offsets, weights = one_sided_weights(k, 2)
    return -offsets, weights * (-1) ** k, [2, 3, 4, 5], 0.5 * room_left / offsets[-1]


def _fd_derivative(g: Callable[[float], float], k: int, t: float, lo: float, hi: float,
                   tol: float, levels: int = 7) -> float:
    """k-th derivative of the scalar function ``g`` at ``t`` by extrapolated differences."""
    offsets, weights, exps, h0 = _stencil(k, t, lo, hi)
    if k == 0:
        return g(t)
    hs, vals = [], []
    best, best_spread = math.nan, math.inf
    for j in range(levels):
        h = h0 * 0.5**j
        v = sum(w * g(t + o * h) for o, w in zip(offsets, weights) if w != 0.0) / h**k
        hs.append(h)
        vals.append(v)
        use = min(len(hs) - 1, len(exps))
        if use >= 1:
            est, spread = richardson(hs, vals, exps[:use])
            if spread < best_spread:
                best, best_spread = est, spread
            if spread <= tol * max(1.0, abs(est)):
                return est
    if best_spread <= 100 * tol * max(1.0, abs(best)):
        return best
    raise AccuracyError(
        f"finite-difference extrapolation unstable (spread {best_spread:.3e})",
        best_spread,
        best,
    )


def rl_derivative(f: RealFunction, q: float, s: float, t: float, tol: float = 1e-8) -> float:
    """(D^q f)(t) = (d/dt)**(n+1) (I^{n+1-q} f)(t) with n = ceil(q) - 1."""
    order = _as_order(q)
    _check_interval(f, s, t)
    if t <= s:
        raise DomainError("the derivative needs t > s")
    k = order.n + 1
    p = k - order.q
    inner = max(tol * 1e-5, 1e-14)
    if p == 0.0:
        if f.deriv is not None:
            return float(f.deriv(t, k))
        return _fd_derivative(lambda y: float(f(y)), k, t, s, f.hi, tol)

    def g(y):
        return rl_integral(f, p, s, y, inner)

    return _fd_derivative(g, k, t, s, f.hi, tol)


def taylor_coefficients(f: RealFunction, n: int, s: float, tol: float = 1e-9) -> np.ndarray:
    """f^{(k)}(s) for k = 0..n, from ``f.deriv`` or one-sided differences of order k + 2."""
    out = np.empty(n + 1)
    base = s - f.lo
    out[0] = float(f.at_offset(base))
    for k in range(1, n + 1):
        if f.deriv is not None:
            out[k] = float(f.deriv(s, k))
            continue
        offsets, weights = one_sided_weights(k, k + 2)
        h0 = 0.05 * (f.hi - s) / offsets[-1]
        hs, vals = [], []
        est = math.nan
        for j in range(8):
            h = h0 * 0.5**j
            v = float(np.dot(weights, f.at_offset(base + offsets * h))) / h**k
            hs.append(h)
            vals.append(v)
            use = min(j, 3)
            if use:
                est, spread = richardson(hs, vals, [k + 2 + i for i in range(use)])
                if spread <= tol * max(1.0, abs(est)):
                    break
        out[k] = est
    return out


def _poly_value(coef, u):
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u)
    for k, c in enumerate(coef):
        total = total + c * u**k / math.factorial(k)
    return total


def _remainder_function(f: RealFunction, coef: np.ndarray, s: float) -> RealFunction:
    base = s - f.lo

    def off(u):
        return f.at_offset(base + u) - _poly_value(coef, u)

    return RealFunction(lambda y: off(np.asarray(y) - s), s, f.hi, 0, None, off)


def _caputo_smooth(f: RealFunction, order: FracOrder, s: float, t: float, tol: float) -> float:
    k = order.n + 1
    p = k - order.q
    if p == 0.0:
        return float(f.deriv(t, k))
    base = s - f.lo
    scale = float(rgamma(p))

    def integrand(y, dl, dr):
        if f.deriv_offset is not None:
            d = f.deriv_offset(base + dl, k)
        else:
            d = f.deriv(f.lo + base + dl, k)
        return np.asarray(d, dtype=float) * dr ** (p - 1.0) * scale

    val, _ = tanh_sinh(integrand, s, t, rtol=tol * 1e-2, atol=1e-300, max_level=12)
    return val


def caputo_derivative(f: RealFunction, q, s: float, t: float, tol: float = 1e-8,
                      coef: Optional[np.ndarray] = None, cross_check: bool = False) -> float:
    """Caputo derivative of order ``q`` at ``t``.

    With an analytic ``f.deriv`` and ``f.smoothness >= n + 1`` the smooth form
    1/Gamma(n+1-q) int_s^t (t - y)**(n - q) f^{(n+1)}(y) dy is used; otherwise
    the degree-n Taylor polynomial at ``s`` is subtracted and the RL derivative
    taken.  ``cross_check`` evaluates both and requires agreement within
    ``10 * tol``.
    """
    order = _as_order(q)
    _check_interval(f, s, t)
    if t <= s:
        raise DomainError("the derivative needs t > s")
    smooth = f.deriv is not None and f.smoothness >= order.n + 1
    if smooth and not cross_check:
        return _caputo_smooth(f, order, s, t, tol)
    if coef is None:
        coef = taylor_coefficients(f, order.n, s)
    rl_val = rl_derivative(_remainder_function(f, coef, s), order.q, s, t, tol)
    if smooth:
        sm = _caputo_smooth(f, order, s, t, tol)
        if abs(sm - rl_val) > 10 * tol * max(1.0, abs(sm)):
            raise AccuracyError(
                f"smooth and Taylor-subtracted Caputo forms disagree ({sm!r} vs {rl_val!r})",
                abs(sm - rl_val),
                sm,
            )
        return sm
    return rl_val


@dataclass
class LFDResult:
    """Outcome of a local fractional derivative evaluation.

    ``status`` is ``"limit"``, ``"divergent"`` or ``"oscillating"``;
    ``samples`` holds ``(t - s, caputo value)`` pairs.
    """

    status: str
    value: float
    error: float
    samples: list


def _aitken(seq):
    a, b, c = seq[-3], seq[-2], seq[-1]
    den = (c - b) - (b - a)
    if den == 0.0 or not math.isfinite(den):
        return c
    return c - (c - b) ** 2 / den


def _iterated_aitken(values, depth=2):
    seq = list(values)
    for _ in range(depth):
        if len(seq) < 3:
            break
        seq = [_aitken(seq[: i + 3]) for i in range(len(seq) - 2)]
    return seq[-1]


def _diff_ratios(vals):
    d = np.diff(vals)
    with np.errstate(divide="ignore", invalid="ignore"):
        return d[1:] / d[:-1], d


def lfd_limit(caputo_at: Callable[[float], float], delta0: float, tol: float = 1e-6,
              ratio: float = 0.5, max_steps: int = 40) -> LFDResult:
    """Limit of ``caputo_at(delta)`` as delta -> 0 along ``delta0 * ratio**k``.

    On geometric nodes a power-law approach to the limit makes successive
    differences geometric, so the limit is taken by iterated Aitken once the
    difference ratios settle inside (-1, 1).  Ratios above 1 with growing
    magnitude mean divergence.
    """
    deltas, vals, extrap = [], [], []
    for k in range(max_steps):
        d = delta0 * ratio**k
        v = float(caputo_at(d))
        deltas.append(d)
        vals.append(v)
        samples = list(zip(deltas, vals))
        if not math.isfinite(v):
            return LFDResult("divergent", math.inf, math.inf, samples)
        if len(vals) < 4:
            continue
        r, diffs = _diff_ratios(vals)
        scale = max(1.0, abs(v))
        if np.all(np.abs(diffs[-3:]) < 0.1 * tol * scale):
            return LFDResult("limit", v, float(np.abs(diffs[-3:]).max()), samples)
        extrap.append(_iterated_aitken(vals, 2 if len(vals) >= 6 else 1))
        last = r[-3:]
        if len(r) >= 3 and np.all(np.abs(last) < 0.999) and len(extrap) >= 3:
            e1, e2, e3 = extrap[-3:]
            spread = max(abs(e3 - e2), abs(e2 - e1))
            if spread < tol and spread < 1e-3 * max(1.0, abs(e3)):
                return LFDResult("limit", e3, spread, samples)
        if len(r) >= 4 and np.all(r[-4:] > 1.0001):
            mags = np.abs(vals[-5:])
            if np.all(mags[1:] > mags[:-1]):
                return LFDResult("divergent", math.inf, math.inf, samples)
    samples = list(zip(deltas, vals))
    last = extrap[-1] if extrap else vals[-1]
    return LFDResult("oscillating", last, math.nan, samples)


def local_frac_derivative(f: RealFunction, q, s: float, tol: float = 1e-6,
                          delta0: Optional[float] = None) -> LFDResult:
    """lim_{t -> s+} of the Caputo derivative of order ``q``.

    A limit is reported once three successive extrapolants differ by less
    than ``tol`` and less than ``1e-3 * max(1, |value|)``.
    """
    order = _as_order(q)
    if not f.lo <= s < f.hi:
        raise DomainError("base point must lie in [lo, hi)")
    coef = taylor_coefficients(f, order.n, s)
    if delta0 is None:
        delta0 = 0.5 * (f.hi - s)
    inner = max(tol * 1e-3, 1e-10)
    return lfd_limit(lambda d: caputo_derivative(f, order, s, s + d, inner, coef), delta0, tol)


def fractional_taylor_remainder(f: RealFunction, q, s: float, t: float,
                                coef: Optional[np.ndarray] = None) -> float:
    """f(t) minus its Taylor polynomial of degree ceil(q) - 1 at ``s``."""
    order = _as_order(q)
    _check_interval(f, s, t)
    if coef is None:
        coef = taylor_coefficients(f, order.n, s)
    u = t - s
    return float(f.at_offset(s - f.lo + u) - _poly_value(coef, u))


def power_function(p: float, s: float = 0.0, hi: float = 1.0, c: float = 1.0) -> RealFunction:
    """c (y - s)**p on [s, hi] with analytic derivatives; needs p > -1."""
    if not p > -1:
        raise DomainError("power must exceed -1")
    integer = p == math.floor(p) and p >= 0

    def value(u):
        u = np.asarray(u, dtype=float)
        return c * np.abs(u) ** p

    def deriv(y, k):
        u = np.asarray(y, dtype=float) - s
        if integer and k > p:
            return np.zeros_like(u)
        coef = c * gamma(p + 1) * float(rgamma(p + 1 - k))
        with np.errstate(divide="ignore"):
            return coef * np.abs(u) ** (p - k)

    smooth = 10**6 if integer else max(0, math.floor(p))
    return RealFunction(lambda y: value(np.asarray(y) - s), s, hi, smooth, deriv, value)

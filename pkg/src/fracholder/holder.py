"""Second moments of the fundamental solution and their small-lag exponents.

The central object is

    h_s(t) = int_0^s dr int Y(t - r, x) Y(s - r, x) dx,     s <= t,

computed on the Fourier side.  With a = t - r, b = s - r and
lam = (a / b)**beta the spatial integral collapses to a one-dimensional
radial kernel of lam (see :mod:`fracholder._tables`), leaving a single
integral over b.  Derivatives in t only change the Mittag-Leffler index.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import special as sps

from . import _tables
from ._quad import panel_nodes, richardson, tanh_sinh
from .errors import AccuracyError, DomainError
from .fracops import LFDResult, RealFunction, caputo_derivative
from .kernels import (ModelParams, _oscillatory_tail, _radial_factor, plancherel_constant,
                      plancherel_prefactor)
from .special import mittag_leffler


@dataclass(frozen=True)
class HolderOrder:
    """Order q of a local fractional derivative with n = ceil(q) - 1.

    Requires 0 <= n < q < rho and q <= n + 1.
    """

    q: float
    n: int
    rho: float

    def __post_init__(self):
        if self.n != math.ceil(self.q) - 1 or self.n < 0:
            raise DomainError(f"n must equal ceil(q) - 1 >= 0, got q={self.q}, n={self.n}")
        if not self.q < self.rho:
            raise DomainError(f"q={self.q} must be below rho={self.rho}")
        if self.n > 2:
            raise DomainError("orders above 3 are not supported")

    @classmethod
    def for_params(cls, p: ModelParams, q: float) -> "HolderOrder":
        return cls(float(q), math.ceil(q) - 1, p.rho)


@dataclass(frozen=True)
class EFactorQuery:
    t: float
    s: float
    r: float
    delta: float
    xi_abs: float
    p: ModelParams

    def __post_init__(self):
        if not self.r < self.s <= self.t:
            raise DomainError("need r < s <= t")
        if self.xi_abs < 0:
            raise DomainError("xi_abs must be >= 0")


def e_factor(q: EFactorQuery) -> float:
    """Fourier-side integrand of h_s with the t-kernel's index replaced by delta."""
    p = q.p
    a, b = q.t - q.r, q.s - q.r
    c = 0.5 * p.nu * q.xi_abs**p.alpha
    fa = a ** (q.delta - 1) * mittag_leffler(p.beta, q.delta, c * a**p.beta)
    fb = b ** (p.zeta - 1) * mittag_leffler(p.beta, p.zeta, c * b**p.beta)
    return (2 * math.pi) ** -p.d * fa * fb


def _b_integral(log_weight, table, beta: float, s: float, delta: float, nodes: int = 20) -> float:
    """int_0^s exp(log_weight(b, a)) * table(sigma) db, a = b + delta, sigma = beta log(a/b)."""

    def f(b):
        b = np.asarray(b, dtype=float)
        pos = b > 0
        out = np.zeros_like(b)
        bb = b[pos]
        a = bb + delta
        sig = beta * np.log1p(delta / bb)
        out[pos] = table.ratio(sig) * np.exp(log_weight(bb, a) + table.log_envelope(sig))
        return out

    c = min(delta, s)
    edges = [c / 64, c / 16, c / 4, c]
    while edges[-1] < s:
        edges.append(4 * edges[-1])
    edges[-1] = s
    head, _ = tanh_sinh(lambda x, dl, dr: f(dl), 0.0, edges[0], rtol=1e-14, atol=1e-300)
    x, w = panel_nodes(np.array(edges), nodes)
    return head + float(np.dot(w, f(x)))


def _h_nodes(p: ModelParams, s: float, t: float, n: int, nodes: int,
             delta: Optional[float] = None) -> float:
    if delta is None:
        delta = t - s
    pb = p.zeta - 1 - p.d * p.beta / p.alpha
    pa = p.zeta - 1 - n
    tab = _tables.product_table(p.alpha, p.beta, p.zeta, p.d, n)
    pref = plancherel_prefactor(p)
    if delta == 0:
        e = p.rho - n
        if not e > 0:
            return math.inf
        return pref * float(tab(0.0)) * s**e / e
    return pref * _b_integral(lambda b, a: pb * np.log(b) + pa * np.log(a), tab, p.beta, s,
                              delta, nodes)


def _checked(fn, tol: float, what: str) -> float:
    v = fn(20)
    v2 = fn(14)
    err = abs(v - v2)
    if err > tol * max(abs(v), 1e-300):
        raise AccuracyError(f"{what} did not reach tolerance {tol:g} (estimate {err:.3e})", err, v)
    return v


def h_derivative(p: ModelParams, s: float, t: float, n: int = 0, tol: float = 1e-9) -> float:
    """n-th derivative in t of h_s(t) for t >= s (n = 0 gives h_s itself)."""
    if not 0 < s <= t:
        raise DomainError("need 0 < s <= t")
    if n < 0 or n > 3:
        raise DomainError("derivative order must be 0..3")
    return _checked(lambda m: _h_nodes(p, s, t, n, m), tol, "h_s")


def h_s(p: ModelParams, s: float, t: float, tol: float = 1e-9) -> float:
    """int_0^s dr int Y(t - r, x) Y(s - r, x) dx."""
    return h_derivative(p, s, t, 0, tol)


def h_derivatives_at_s(p: ModelParams, s: float) -> tuple:
    """(h1, h2): one-sided derivatives of h_s at t = s, None where they do not exist.

    h1 = C_gamma s**(rho-1) / 2 for rho > 1 and
    h2 = (C_{gamma,gamma-1} - C_{gamma-1} / (rho - 2)) s**(rho-2) for rho > 2.
    """
    if not s > 0:
        raise DomainError("s must be positive")
    rho = p.rho
    h1 = h2 = None
    if rho > 1:
        h1 = plancherel_constant(p).c * s ** (rho - 1) / 2
    if rho > 2:
        c_mix = plancherel_constant(p, p.gamma, p.gamma - 1).c
        c_low = plancherel_constant(p, p.gamma - 1).c
        h2 = (c_mix - c_low / (rho - 2)) * s ** (rho - 2)
    return h1, h2


def caputo_h(p: ModelParams, order: HolderOrder, s: float, t: float, tol: float = 1e-8) -> float:
    """Caputo derivative of order q - n of h_s^{(n)} at t."""
    if abs(order.rho - p.rho) > 1e-12:
        raise DomainError("order was built for different parameters")
    if not 0 < s < t:
        raise DomainError("need 0 < s < t")
    n = order.n

    def deriv_offset(u, k):
        # distances from s are exact here, which matters at the singular end;
        # nodes closer than 1e-150 s carry no weight
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.array([_h_nodes(p, s, s + v, n + k, 20, delta=v) if v > 1e-150 * s else 0.0
                         for v in u])

    def deriv(y, k):
        return deriv_offset(np.asarray(y, dtype=float) - s, k)

    f = RealFunction(lambda y: deriv(y, 0), s, 2 * t - s, smoothness=n + 1, deriv=deriv,
                     deriv_offset=deriv_offset)
    return caputo_derivative(f, order.q - n, s, t, tol)


def caputo_h_limit(p: ModelParams, order: HolderOrder, s: float, delta0: Optional[float] = None,
                   levels: int = 7, tol: float = 1e-8) -> LFDResult:
    """lim_{t -> s+} caputo_h by generalized Richardson extrapolation.

    Near s, h_s(s + delta) is a polynomial in delta plus a multiple of
    delta**rho, so the Caputo derivative expands in delta**(rho - q) and
    delta**(k - q) for integers k > n.
    """
    if delta0 is None:
        delta0 = 0.1 * s
    q, n, rho = order.q, order.n, order.rho
    exps = sorted({rho - q} | {k - q for k in range(n + 1, n + 4)})
    exps = [e for i, e in enumerate(exps) if i == 0 or e - exps[i - 1] > 1e-6]
    deltas = delta0 * 0.5 ** np.arange(levels)
    vals = [caputo_h(p, order, s, s + d, tol) for d in deltas]
    k = min(len(exps), levels - 1)
    lim, spread = richardson(deltas, vals, exps[:k])
    samples = list(zip(deltas.tolist(), vals))
    return LFDResult("limit", lim, spread, samples)


def _clip(v: float, scale: float, tol: float, what: str) -> float:
    if v >= 0:
        return v
    if v > -tol * scale:
        warnings.warn(f"{what} slightly negative ({v:.3e}); clipped to 0", RuntimeWarning)
        return 0.0
    raise AccuracyError(f"{what} is negative beyond tolerance ({v:.3e})", abs(v), v)


def increment_time(p: ModelParams, s: float, t: float, method: str = "direct",
                   tol: float = 1e-9) -> float:
    """int_0^s dr int (Y(t - r, x) - Y(s - r, x))**2 dx.

    ``method="direct"`` integrates the squared Fourier-side difference;
    ``method="identity"`` uses C/rho (t**rho - (t-s)**rho + s**rho) - 2 h_s(t).
    """
    if not 0 < s <= t:
        raise DomainError("need 0 < s <= t")
    if t == s:
        return 0.0
    delta = t - s
    c = plancherel_constant(p).c
    rho = p.rho
    if method == "identity":
        total = c / rho * (t**rho - delta**rho + s**rho)
        v = total - 2 * h_s(p, s, t, tol * 0.1)
        return _clip(v, total, tol * 10, "time increment")
    if method != "direct":
        raise DomainError(f"unknown method {method!r}")
    tab = _tables.diffsq_table(p.alpha, p.beta, p.zeta, p.d)
    pref = plancherel_prefactor(p)

    def run(m):
        return pref * _b_integral(lambda b, a: (rho - 1) * np.log(b), tab, p.beta, s, delta, m)

    return _checked(run, tol, "time increment")


def increment_tail(p: ModelParams, s: float, t: float) -> float:
    """int_s^t dr int Y(t - r, x)**2 dx = C_gamma (t - s)**rho / rho."""
    if not 0 < s <= t:
        raise DomainError("need 0 < s <= t")
    return plancherel_constant(p).c * (t - s) ** p.rho / p.rho


def _one_minus_omega(d: int, eta):
    """1 - (spherical average of cos(eta x_1)), accurate near 0."""
    eta = np.asarray(eta, dtype=float)
    small = eta < 0.5
    out = np.empty_like(eta)
    z2 = eta[small] ** 2
    if d == 1:
        coef = [1 / math.factorial(2 * k) for k in range(1, 9)]
    elif d == 2:
        coef = [1 / (4**k * math.factorial(k) ** 2) for k in range(1, 9)]
    else:
        coef = [1 / math.factorial(2 * k + 1) for k in range(1, 9)]
    # sum_{k>=1} (-1)**(k+1) coef_k z**(2k), Horner in z**2
    acc = np.zeros_like(z2)
    for c in reversed(coef):
        acc = c - z2 * acc
    out[small] = z2 * acc
    big = ~small
    zb = eta[big]
    if d == 1:
        out[big] = 1 - np.cos(zb)
    elif d == 2:
        out[big] = 1 - sps.j0(zb)
    else:
        out[big] = 1 - np.sin(zb) / zb
    return out


def increment_space(p: ModelParams, t_max: float, h_abs: float, tol: float = 1e-8) -> float:
    """int_0^t_max dr int (Y(r, x + h) - Y(r, x))**2 dx on the Fourier side."""
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    if h_abs < 0:
        raise DomainError("h_abs must be >= 0")
    if h_abs == 0:
        return 0.0
    alpha, beta, zeta, d = p.alpha, p.beta, p.zeta, p.d
    sm = _tables.square_moment(beta, zeta)
    kk = 0.5 * p.nu * t_max**beta  # Y = kk u**alpha
    gpref = t_max ** (2 * zeta - 1) / beta

    def g_of_u(u):
        return gpref * sm.scaled(kk * np.asarray(u, dtype=float) ** alpha)

    u_t = kk ** (-1 / alpha)
    eta_split = 4 * math.pi
    u_split = eta_split / h_abs
    u_lo = 1e-6 * min(u_t, 1 / h_abs)
    n_geo = int(math.ceil(math.log(u_split / u_lo) / math.log(1.25)))
    edges = np.concatenate([[0.0], np.geomspace(u_lo, u_split, n_geo + 1)])
    x, w = panel_nodes(edges, 20)
    near = float(np.dot(w, x ** (d - 1) * 2 * _one_minus_omega(d, x * h_abs) * g_of_u(x)))

    # non-oscillating part of the far field: 2 int_{u_split}^inf u**(d-1) G(u) du
    y_split = kk * u_split**alpha
    far = 0.0
    u_a = u_split
    if y_split < sm.y_tail:
        u_a = (sm.y_tail / kk) ** (1 / alpha)
        m = int(math.ceil(math.log(u_a / u_split) / math.log(1.25)))
        xa, wa = panel_nodes(np.geomspace(u_split, u_a, m + 1), 20)
        far += 2 * float(np.dot(wa, xa ** (d - 1) * g_of_u(xa)))
    # int_{u_a}^inf u**(d-1) Y**-e M(Y) du with Y = kk u**alpha
    s0 = d / alpha
    far += 2 * gpref * sm.far_moment(max(kk * u_a**alpha, sm.y_tail), s0) / (alpha * kk**s0)

    if d == 1:
        kind, f = "cos", (lambda u: g_of_u(u))
    elif d == 2:
        kind, f = "j0", (lambda u: u * g_of_u(u))
    else:
        kind, f = "sin", (lambda u: u * g_of_u(u) / h_abs)
    scale = abs(near) + abs(far)
    osc = _oscillatory_tail(f, kind, h_abs, u_split, atol=1e-3 * tol * scale)
    v = _radial_factor(d) * (near + far - 2 * osc)
    return _clip(v, _radial_factor(d) * scale, tol * 10, "space increment")


@dataclass
class IncrementCurve:
    lags: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.lags.shape != self.values.shape:
            raise DomainError("lags and values must have the same length")
        if np.any(np.diff(self.lags) <= 0) or np.any(self.lags <= 0):
            raise DomainError("lags must be positive and increasing")
        if np.any(self.values < 0):
            raise DomainError("increment values must be nonnegative")
        if self.kind not in ("time", "space", "tail"):
            raise DomainError(f"unknown curve kind {self.kind!r}")


class FitResult(NamedTuple):
    slope: float
    intercept: float
    residual_rms: float
    max_residual: float
    n_points: int


def fit_exponent(curve: IncrementCurve, window: Optional[slice] = None) -> FitResult:
    """Least-squares slope of log(value) against log(lag) over ``window``."""
    lags = curve.lags if window is None else curve.lags[window]
    vals = curve.values if window is None else curve.values[window]
    if len(lags) < 4:
        raise DomainError("need at least 4 points in the fit window")
    if np.any(vals <= 0):
        raise DomainError("all values in the fit window must be positive")
    x, y = np.log(lags), np.log(vals)
    if np.ptp(x) == 0:
        raise DomainError("degenerate window: all lags equal")
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))),
                     float(np.max(np.abs(res))), len(lags))


def lag_grid(scale: float, n: int = 12, lo: float = 1e-4, hi: float = 1e-1) -> np.ndarray:
    return scale * np.geomspace(lo, hi, n)


# the largest lags are furthest from the small-lag regime
DEFAULT_WINDOW = slice(0, -2)


def time_curve(p: ModelParams, s: float, lags=None) -> IncrementCurve:
    lags = lag_grid(s) if lags is None else np.asarray(lags, dtype=float)
    return IncrementCurve(lags, [increment_time(p, s, s + h) for h in lags], "time")


def tail_curve(p: ModelParams, s: float, lags=None) -> IncrementCurve:
    lags = lag_grid(s) if lags is None else np.asarray(lags, dtype=float)
    return IncrementCurve(lags, [increment_tail(p, s, s + h) for h in lags], "tail")


def space_curve(p: ModelParams, t_max: float, lags=None) -> IncrementCurve:
    lags = lag_grid(1.0) if lags is None else np.asarray(lags, dtype=float)
    return IncrementCurve(lags, [increment_space(p, t_max, h) for h in lags], "space")

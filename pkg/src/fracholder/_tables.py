"""Tabulated radial kernels used by the second-moment functionals.

For lam = (a/b)**beta >= 1 the spatial integral of a product of two Fourier
kernels at times a and b reduces to

    K(lam) = int_0^inf v**(d-1) E_{beta,z1}(-lam v**alpha) E_{beta,z2}(-v**alpha) dv.

Tables are kept in sigma = log(lam) on [0, min(SIGMA_MAX, 300 beta)] with piecewise
Chebyshev interpolation, after dividing out a known envelope so the stored
function stays bounded.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .kernels import _asym_coeffs, _pole_free_radius, _tail_radius, radial_ml_integral
from .special import mittag_leffler, rgamma

SIGMA_MAX = 60.0
_EDGES = np.array([0.0, 1 / 64, 1 / 16, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, SIGMA_MAX])
_DEG = 20


def _cheb_fit(f, lo, hi, deg):
    m = deg + 1
    x = np.cos(math.pi * (np.arange(m) + 0.5) / m)
    vals = np.array([f(0.5 * (lo + hi) + 0.5 * (hi - lo) * xi) for xi in x])
    k = np.arange(m)
    c = 2.0 / m * np.cos(np.outer(k, np.arccos(x))) @ vals
    c[0] *= 0.5
    return c


class SigmaTable:
    """Piecewise Chebyshev table of ``ratio_f(sigma)``; values are
    ``ratio * exp(log_envelope(sigma))``.

    ``log_envelope`` must be vectorized.  Beyond ``SIGMA_MAX`` the ratio is
    held constant.
    """

    def __init__(self, ratio_f, log_envelope, sigma_max=SIGMA_MAX, deg=_DEG):
        self.edges = np.append(_EDGES[_EDGES < sigma_max], sigma_max)
        self.log_envelope = log_envelope
        self.coef = np.array([_cheb_fit(ratio_f, lo, hi, deg)
                              for lo, hi in zip(self.edges[:-1], self.edges[1:])])

    def ratio(self, sigma):
        sigma = np.clip(np.asarray(sigma, dtype=float), 0.0, self.edges[-1])
        idx = np.clip(np.searchsorted(self.edges, sigma, side="right") - 1, 0, len(self.coef) - 1)
        lo, hi = self.edges[idx], self.edges[idx + 1]
        x = (2 * sigma - lo - hi) / (hi - lo)
        # Clenshaw with per-point coefficient rows
        c = self.coef[idx]
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        for j in range(c.shape[-1] - 1, 0, -1):
            b1, b2 = c[..., j] + 2 * x * b1 - b2, b1
        return c[..., 0] + x * b1 - b2

    def __call__(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return self.ratio(sigma) * np.exp(self.log_envelope(sigma))


def _decay_rate(alpha: float, d: int) -> float:
    return min(d / alpha, 1.0)


def _sigma_max(beta: float) -> float:
    # lam**(1/beta) must stay representable
    return min(SIGMA_MAX, 300.0 * beta)


@lru_cache(maxsize=64)
def product_table(alpha: float, beta: float, zeta: float, d: int, n: int) -> SigmaTable:
    """K with z1 = zeta - n, z2 = zeta; it enters the n-th time derivative."""
    kappa = _decay_rate(alpha, d)

    def ratio(s):
        k = radial_ml_integral(alpha, beta, d, zeta - n, zeta, math.exp(s), "product")
        return k * math.exp(kappa * s)

    return SigmaTable(ratio, lambda s: -kappa * s, _sigma_max(beta))


@lru_cache(maxsize=64)
def diffsq_table(alpha: float, beta: float, zeta: float, d: int) -> SigmaTable:
    """D(lam) = int v**(d-1) (lam**((zeta-1)/beta) E(-lam v**alpha) - E(-v**alpha))**2 dv.

    D vanishes like sigma**2 at sigma = 0, with D / sigma**2 tending to
    int v**(d-1) E_{beta,zeta-1}(-v**alpha)**2 dv / beta**2.  For rho > 1 it
    grows like lam**((rho-1)/beta).
    """
    rho = 2 * zeta - 1 - d * beta / alpha
    g = max((rho - 1) / beta, 0.0)

    def log_env(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return 2 * np.log(s) - np.log1p(s * s) + np.logaddexp(0.0, g * s)

    limit = radial_ml_integral(alpha, beta, d, zeta - 1, zeta - 1, 1.0, "product") / beta**2

    def ratio(s):
        if s == 0.0:
            return limit / 2.0
        lam = math.exp(s)
        dv = radial_ml_integral(alpha, beta, d, zeta, zeta, lam, "diffsq",
                                c1=lam ** ((zeta - 1) / beta))
        return dv * (1 + s * s) / (s * s) / (1 + math.exp(g * s))

    return SigmaTable(ratio, log_env, _sigma_max(beta))


class SquareMoment:
    """M(Y) = int_0^Y y**(e-1) E_{beta,zeta}(-y)**2 dy with e = (2 zeta - 1) / beta.

    ``scaled(Y)`` returns Y**-e M(Y), which is finite at Y = 0.  The series is
    used for Y <= 1, cumulative Gauss-Legendre panels in R = y**(1/beta) up to
    the algebraic regime, and the integrated expansion beyond.
    """

    def __init__(self, beta: float, zeta: float, n_series: int = 200, n_asym: int = 60):
        self.beta, self.zeta = beta, zeta
        e = self.e = (2 * zeta - 1) / beta
        if not e > 0:
            raise ValueError("need 2 zeta > 1")
        r = rgamma(beta * np.arange(n_series) + zeta)
        self.series = np.convolve(r, r)[:n_series] * (-1.0) ** np.arange(n_series)
        self.series /= np.arange(n_series) + e

        r_pole = _pole_free_radius(beta)
        r_tail = max(_tail_radius(beta, zeta, n_asym), r_pole)
        pieces = []
        if beta > 1:
            pieces.append(np.arange(1.0, r_pole, 1.0))
            pieces.append(np.geomspace(r_pole, r_tail, max(2, int(np.ceil(np.log(r_tail / r_pole) / np.log(1.5))) + 1)))
        else:
            pieces.append(np.geomspace(1.0, r_tail, max(2, int(np.ceil(np.log(r_tail) / np.log(1.5))) + 1)))
        self.r_edges = np.unique(np.concatenate(pieces))
        self.gx, self.gw = np.polynomial.legendre.leggauss(20)
        lo, hi = self.r_edges[:-1], self.r_edges[1:]
        panels = self._panel(lo, hi)
        self.cum = np.concatenate([[self._series_m(1.0)], self._series_m(1.0) + np.cumsum(panels)])

        self.y_tail = self.r_edges[-1] ** beta
        k = np.arange(n_asym + 1.0)
        a = _asym_coeffs(beta, zeta, n_asym) * np.exp(-k * math.log(self.y_tail))
        conv = np.convolve(a, a)
        m = np.arange(conv.size, dtype=float)
        on_e = np.abs(m - e) < 1e-9
        # an integer e turns one power into a logarithm
        self.log_c = float(conv[on_e].sum())
        keep = (conv != 0) & ~on_e
        self.tail_m = m[keep]
        self.tail_c = conv[keep]  # scaled by y_tail**-m
        self.m_tail_scaled = self.cum[-1] * self.y_tail**-e
        self.a0 = self.m_tail_scaled - np.sum(self.tail_c / (e - self.tail_m))

    def _integrand_r(self, rr):
        beta = self.beta
        return beta * rr ** (beta * self.e - 1) * mittag_leffler(beta, self.zeta, rr**beta) ** 2

    def _panel(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        half = 0.5 * (hi - lo)
        nodes = 0.5 * (hi + lo)[..., None] + half[..., None] * self.gx
        vals = self._integrand_r(nodes)
        return half * (vals @ self.gw)

    def _series_scaled(self, y):
        y = np.asarray(y, dtype=float)
        return np.polynomial.polynomial.polyval(y, self.series)

    def _series_m(self, y):
        return float(self._series_scaled(y) * y**self.e)

    def scaled(self, big_y):
        """Y**-e M(Y), vectorized."""
        y = np.asarray(big_y, dtype=float)
        out = np.empty_like(y)
        low = y <= 1.0
        out[low] = self._series_scaled(y[low])
        mid = (~low) & (y <= self.y_tail)
        if np.any(mid):
            rr = y[mid] ** (1 / self.beta)
            idx = np.clip(np.searchsorted(self.r_edges, rr, side="right") - 1, 0, len(self.r_edges) - 2)
            part = self._panel(self.r_edges[idx], rr)
            out[mid] = (self.cum[idx] + part) * y[mid] ** -self.e
        high = y > self.y_tail
        if np.any(high):
            w = self.y_tail / y[high]
            out[high] = self.tail_coeffs_value(w)
        return out

    def tail_coeffs_value(self, w):
        """Y**-e M(Y) for Y = y_tail / w >= y_tail."""
        e, m, c = self.e, self.tail_m, self.tail_c
        w = np.asarray(w, dtype=float)
        out = self.a0 * w**e + np.power.outer(w, m) @ (c / (e - m))
        if self.log_c:
            out = out - self.log_c * w**e * np.log(w)
        return out

    def far_moment(self, y_a: float, s0: float) -> float:
        """int_{y_a}^inf Y**(s0-1) Y**-e M(Y) dY for y_a >= y_tail and s0 < min(e, 2)."""
        if y_a < self.y_tail:
            raise ValueError("far_moment starts inside the tabulated range")
        e, m, c = self.e, self.tail_m, self.tail_c
        w = self.y_tail / y_a
        total = self.a0 * w**e / (e - s0) + np.sum(c / (e - m) * w**m / (m - s0))
        if self.log_c:
            total += self.log_c * w**e * (-math.log(w) / (e - s0) + 1 / (e - s0) ** 2)
        return float(y_a**s0 * total)


@lru_cache(maxsize=64)
def square_moment(beta: float, zeta: float) -> SquareMoment:
    return SquareMoment(beta, zeta)

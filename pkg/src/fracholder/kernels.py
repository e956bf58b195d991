"""Model parameters, the fundamental solution Y and its Plancherel constants.

Y is handled through its Fourier transform

    FY(t, xi) = t**(beta+gamma-1) E_{beta,beta+gamma}(-nu t**beta |xi|**alpha / 2),

which is exact; real-space values come from radial inverse transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import special as sps

from ._quad import panel_nodes, tanh_sinh, wynn_epsilon
from .errors import AccuracyError, DomainError
from .special import gamma, mittag_leffler, rgamma


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the time-fractional stochastic diffusion equation."""

    alpha: float
    beta: float
    gamma: float
    nu: float = 1.0
    d: int = 1

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not 0 < self.beta < 2:
            raise DomainError(f"beta must lie in (0, 2), got {self.beta}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        if self.d not in (1, 2, 3):
            raise DomainError(f"d must be 1, 2 or 3, got {self.d}")
        if not self.rho > 0:
            raise DomainError(f"rho = {self.rho:.6g} <= 0 violates Dalang's condition")
        if not self.d < 2 * self.alpha:
            raise DomainError(f"d = {self.d} >= 2 alpha violates Dalang's condition")
        if not self.d < self.theta:
            raise DomainError(f"theta = {self.theta:.6g} does not exceed d = {self.d}")

    @property
    def zeta(self) -> float:
        return self.beta + self.gamma

    @property
    def rho(self) -> float:
        return 2 * (self.beta + self.gamma) - 1 - self.d * self.beta / self.alpha

    @property
    def theta(self) -> float:
        return 2 * self.alpha + (self.alpha / self.beta) * min(2 * self.gamma - 1, 0.0)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "nu": self.nu, "d": self.d}


class Exponents(NamedTuple):
    rho: float
    theta: float
    time_exp: float
    space_exp: float


def exponents(p: ModelParams) -> Exponents:
    """Hölder exponents in time and space (the solution is Hölder of any lower order)."""
    return Exponents(p.rho, p.theta, min(p.rho, 2.0) / 2, min(p.theta - p.d, 2.0) / 2)


def fourier_Y(p: ModelParams, t: float, xi_abs):
    """FY(t, |xi|); accepts an array of ``xi_abs``."""
    if not t > 0:
        raise DomainError("fourier_Y needs t > 0")
    xi = np.asarray(xi_abs, dtype=float)
    if np.any(xi < 0):
        raise DomainError("|xi| must be >= 0")
    arg = 0.5 * p.nu * t**p.beta * xi**p.alpha
    val = t ** (p.zeta - 1) * mittag_leffler(p.beta, p.zeta, arg)
    return float(val) if np.ndim(xi_abs) == 0 else val


def _radial_factor(d: int) -> float:
    """(2 pi)**-d times the area of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / gamma(d / 2) / (2 * math.pi) ** d


def _y_at_origin(p: ModelParams, t: float) -> float:
    # Mellin transform: int_0^inf w**(s-1) E_{b,z}(-w) dw = G(s) G(1-s) / G(z - b s), 0 < s < 1
    s = p.d / p.alpha
    if not s < 1:
        raise AccuracyError(f"Y(t, 0) is infinite when d >= alpha (d={p.d}, alpha={p.alpha})")
    scale = (2.0 / (p.nu * t**p.beta)) ** s
    mellin = gamma(s) * gamma(1 - s) * float(rgamma(p.zeta - p.beta * s))
    return _radial_factor(p.d) * t ** (p.zeta - 1) * scale * mellin / p.alpha


def _weight_zeros(kind: str, x: float, n: int) -> np.ndarray:
    if kind == "cos":
        return (np.arange(n) + 0.5) * math.pi / x
    if kind == "sin":
        return np.arange(1, n + 1) * math.pi / x
    return sps.jn_zeros(0, n) / x


def _weight(kind: str, x: float, u):
    if kind == "cos":
        return np.cos(u * x)
    if kind == "sin":
        return np.sin(u * x)
    return sps.j0(u * x)


def _oscillatory_tail(f, kind: str, x: float, start: float, atol: float,
                      max_zeros: int = 16000) -> float:
    """int_start^inf f(u) w(u x) du for a smooth decaying ``f``.

    Panels run between consecutive zeros of the weight and the partial sums
    are accelerated with Wynn's epsilon algorithm.
    """
    nz = 64
    zeros = _weight_zeros(kind, x, nz)
    while zeros[-1] <= start and nz < max_zeros:
        nz *= 4
        zeros = _weight_zeros(kind, x, nz)
    zeros = zeros[zeros > start]
    # up to the first zero the weight does not oscillate; f may vary on scale ``start``
    first = zeros[0]
    n_geo = max(1, int(math.ceil(math.log(first / start) / math.log(1.5))))
    nodes, weights = panel_nodes(np.geomspace(start, first, n_geo + 1), 20)
    total = float(np.dot(weights, f(nodes) * _weight(kind, x, nodes)))
    partial = []
    i = 0
    while True:
        if i + 1 >= len(zeros):
            if nz >= max_zeros:
                break
            nz *= 2
            z = _weight_zeros(kind, x, nz)
            zeros = z[z > start]
        nodes, weights = panel_nodes(zeros[i:i + 2], 20)
        total += float(np.dot(weights, f(nodes) * _weight(kind, x, nodes)))
        partial.append(total)
        i += 1
        if len(partial) >= 12 and len(partial) % 4 == 0:
            if max(abs(v - total) for v in partial[-12:]) <= atol:
                return total
            lim, err = wynn_epsilon(partial[-12:])
            if err <= atol:
                return lim
    lim, err = wynn_epsilon(partial[-12:])
    raise AccuracyError(f"oscillatory tail did not converge (estimate {err:.3e})", err, lim)


def _asymptotic_start(p: ModelParams, t: float, n_terms: int = 60):
    """Frequency beyond which FY equals its algebraic expansion to double precision."""
    beta, zeta = p.beta, p.zeta
    big_x = _pole_free_radius(beta) ** beta
    k = n_terms
    while True:
        env = math.exp(math.lgamma(beta * k + 1 - zeta) - k * math.log(big_x)) / math.pi
        if env < 1e-18 * big_x**-1:
            break
        big_x *= 1.5
    c = 0.5 * p.nu * t**beta
    return (big_x / c) ** (1 / p.alpha), _asym_coeffs(beta, zeta, n_terms), c


def _algebraic_fy(p: ModelParams, t: float, coeffs, c: float):
    tz = t ** (p.zeta - 1)

    def fy(u):
        with np.errstate(over="ignore"):
            inv = 1.0 / (c * np.asarray(u, dtype=float) ** p.alpha)
        acc = np.zeros_like(inv)
        for a in coeffs[:0:-1]:
            acc = (acc + a) * inv
        return tz * acc

    return fy


def kernel_Y(p: ModelParams, t: float, x_abs: float, tol: float = 1e-9) -> float:
    """Y(t, x) in real space from the radial inverse Fourier transform of FY.

    The frequency integral is split at the point where FY has reached its
    algebraic expansion: below it Gauss-Legendre panels resolve both the
    Fourier phase and the oscillation of FY itself, above it the smooth
    algebraic part is integrated against the oscillatory weight.
    """
    if not t > 0:
        raise DomainError("kernel_Y needs t > 0")
    if not x_abs >= 0:
        raise DomainError("|x| must be >= 0")
    if x_abs == 0:
        return _y_at_origin(p, t)
    x = float(x_abs)
    u0, coeffs, c = _asymptotic_start(p, t)
    # resolution: a quarter period of the Fourier phase and of the pole oscillation
    r0 = (c * u0**p.alpha) ** (1 / p.beta)
    if p.beta > 1:
        pole_step = (p.beta / p.alpha) * (u0 / r0) * (math.pi / 2) / max(math.sin(math.pi / p.beta), 0.05)
    else:
        pole_step = u0 / 40
    step = min(math.pi / (2 * x), pole_step, u0 / 8)
    n_pan = int(math.ceil(u0 / step))
    edges = np.linspace(0.0, u0, n_pan + 1)

    kind = {1: "cos", 2: "j0", 3: "sin"}[p.d]
    radial = (lambda u: 1.0) if p.d == 1 else (lambda u: u)
    scale = {1: 1.0 / math.pi, 2: 1.0 / (2 * math.pi), 3: 1.0 / (2 * math.pi**2 * x)}[p.d]

    def head_f(u):
        return fourier_Y(p, t, u) * radial(u) * _weight(kind, x, u)

    first, _ = tanh_sinh(lambda u, dl, dr: head_f(dl), 0.0, edges[1], rtol=1e-14, atol=1e-300)
    nodes, weights = panel_nodes(edges[1:], 20)
    head = first + float(np.dot(weights, head_f(nodes)))

    tail = 0.0
    if np.any(coeffs[1:] != 0):
        fa = _algebraic_fy(p, t, coeffs, c)
        tail = _oscillatory_tail(lambda u: fa(u) * radial(u), kind, x, u0,
                                 1e-2 * tol * max(abs(head), 1e-300))
    val = scale * (head + tail)
    if not math.isfinite(val):
        raise AccuracyError("oscillatory quadrature produced a non-finite value", math.inf, val)
    return float(val)


def y_squared_quadrature(p: ModelParams, t: float, tol: float = 1e-6) -> float:
    """int Y(t, x)**2 dx by real-space radial quadrature of :func:`kernel_Y`.

    Independent of the Fourier-side constants, so it serves as their check.
    Panels grow geometrically until they stop contributing; for alpha < 2
    the remaining x**-(2(d+alpha)) tail is added in closed form.
    """
    if not t > 0:
        raise DomainError("y_squared_quadrature needs t > 0")
    area = 2 * math.pi ** (p.d / 2) / gamma(p.d / 2)
    scale = (0.5 * p.nu * t**p.beta) ** (1 / p.alpha)

    def f(r):
        return np.array([kernel_Y(p, t, x) ** 2 * x ** (p.d - 1) for x in np.atleast_1d(r)])

    r0 = 1e-3 * scale
    total, _ = tanh_sinh(lambda u, dl, dr: f(dl), 0.0, r0, rtol=1e-10, atol=1e-300)
    lo = r0
    while True:
        hi = 2 * lo
        nodes, weights = panel_nodes(np.array([lo, hi]), 20)
        piece = float(np.dot(weights, f(nodes)))
        total += piece
        lo = hi
        if lo > 8 * scale and abs(piece) < 1e-3 * tol * total:
            break
        if lo > 1e6 * scale:
            raise AccuracyError("Y**2 quadrature did not converge", abs(piece), total)
    if p.alpha < 2:
        power = 2 * (p.d + p.alpha) - (p.d - 1)
        total += lo * f(lo)[0] / (power - 1)
    return area * total


class ConstantPair(NamedTuple):
    c: float
    c_star: float
    gamma1: float
    gamma2: float


def plancherel_prefactor(p: ModelParams) -> float:
    return 2 ** (1 - p.d + p.d / p.alpha) / (gamma(p.d / 2) * math.pi ** (p.d / 2) * p.nu ** (p.d / p.alpha))


def _asym_coeffs(beta: float, zeta: float, n: int) -> np.ndarray:
    """a_k with E_{beta,zeta}(-x) ~ sum_{k>=1} a_k x**-k; index 0 unused."""
    k = np.arange(n + 1)
    a = (-1.0) ** (k + 1) * sps.rgamma(zeta - beta * k)
    a[0] = 0.0
    return a


def _pole_free_radius(beta: float) -> float:
    """R beyond which the pole terms of E_{beta,.}(-R**beta) are below 1e-17."""
    if beta <= 1.0:
        return 40.0
    damp = -math.cos(math.pi / beta)
    return float(min(max(40.0, 40.0 / damp), 2.0e4))


def _tail_radius(beta: float, zeta_min: float, n_terms: int = 60) -> float:
    """R from which the algebraic expansions (n_terms terms) are exact in double."""
    r = _pole_free_radius(beta)
    k = n_terms
    while True:
        x = r**beta
        env = math.exp(math.lgamma(beta * k + 1 - zeta_min) - k * math.log(x)) / math.pi
        if env < 1e-18 / x:
            return r
        r *= 1.25


def radial_ml_integral(alpha: float, beta: float, d: int, z1: float, z2: float,
                       lam: float = 1.0, mode: str = "product", c1: float = 1.0,
                       weight: float = 0.0, absolute: bool = False,
                       nodes: int = 20) -> float:
    """int_0^inf v**(d-1+weight) G(v) dv where, with E_z(x) = E_{beta,z}(-x),

    ``mode="product"``: G = E_{z1}(lam v**alpha) E_{z2}(v**alpha)
    ``mode="diffsq"``:  G = (c1 E_{z1}(lam v**alpha) - E_{z2}(v**alpha))**2

    The integral runs in R = (v**alpha)**(1/beta): unit panels where either
    factor still carries its oscillating pole terms, geometric panels where
    both are smooth, and the algebraic expansions beyond that.
    """
    e = (d + weight) / alpha
    if not 0 < e < 2:
        raise DomainError(f"moment exponent {e:.4g} outside the integrable range (0, 2)")
    n_terms = 60
    lb = lam ** (1.0 / beta)
    r_pole = _pole_free_radius(beta)
    r_tail = max(_tail_radius(beta, min(z1, z2), n_terms), r_pole)

    def g(r2):
        x2 = r2**beta
        e1 = mittag_leffler(beta, z1, lam * x2)
        e2 = mittag_leffler(beta, z2, x2)
        v = e1 * e2 if mode == "product" else (c1 * e1 - e2) ** 2
        if absolute:
            v = np.abs(v)
        with np.errstate(divide="ignore"):
            w = np.where(r2 > 0, r2 ** (beta * e - 1), 0.0)
        return (beta / alpha) * w * v

    def g_dist(r2, dl, dr):
        return g(dl)

    head, _ = tanh_sinh(g_dist, 0.0, 1.0 / lb, rtol=1e-14, atol=1e-300)

    def geometric(lo, hi, ratio=1.5):
        if hi <= lo:
            return np.array([lo])
        k = max(1, int(math.ceil(math.log(hi / lo) / math.log(ratio))))
        return np.geomspace(lo, hi, k + 1)

    def unit(lo, hi, width):
        if hi <= lo:
            return np.array([lo])
        k = max(1, int(math.ceil((hi - lo) / width)))
        return np.linspace(lo, hi, k + 1)

    pieces = []
    if beta > 1:
        # E1 oscillates up to R1 = r_pole, i.e. R2 = r_pole / lb
        pieces.append(unit(1.0 / lb, r_pole / lb, 1.0 / lb))
        lo2 = r_pole / lb
        if lo2 < 1.0:
            pieces.append(geometric(lo2, 1.0))
            lo2 = 1.0
        pieces.append(unit(lo2, r_pole, 1.0))
        pieces.append(geometric(r_pole, r_tail))
    else:
        pieces.append(geometric(1.0 / lb, r_tail))
    edges = np.unique(np.concatenate(pieces))
    rn, rw = panel_nodes(edges, nodes)
    body = float(np.dot(rw, g(rn)))

    big_x = edges[-1] ** beta
    # coefficients scaled by big_x**-k so the convolution cannot overflow
    k = np.arange(n_terms + 1.0)
    a = _asym_coeffs(beta, z1, n_terms) * np.exp(-k * math.log(lam * big_x))
    b = _asym_coeffs(beta, z2, n_terms) * np.exp(-k * math.log(big_x))
    if mode == "product":
        conv = np.convolve(a, b)
    else:
        ec = c1 * a - b
        conv = np.convolve(ec, ec)
    m = np.arange(conv.size)
    nz = conv != 0
    if np.any(nz & (m <= e)):
        raise DomainError("algebraic tail is not integrable for these parameters")
    terms = np.zeros_like(conv)
    terms[nz] = conv[nz] * big_x**e / (m[nz] - e)
    tail = float(np.sum(terms)) / alpha
    if absolute:
        tail = abs(tail)
    return head + body + tail


def plancherel_integral(alpha: float, beta: float, z1: float, z2: float, d: int,
                        weight: float = 0.0, absolute: bool = False,
                        nodes: int = 20) -> float:
    """int_0^inf u**(d-1+weight) E_{beta,z1}(-u**alpha) E_{beta,z2}(-u**alpha) du."""
    return radial_ml_integral(alpha, beta, d, z1, z2, 1.0, "product", 1.0, weight,
                              absolute, nodes)


@lru_cache(maxsize=512)
def _constant_cached(alpha, beta, gamma1, gamma2, nu, d) -> tuple:
    p = ModelParams.__new__(ModelParams)
    object.__setattr__(p, "alpha", alpha)
    object.__setattr__(p, "nu", nu)
    object.__setattr__(p, "d", d)
    pref = plancherel_prefactor(p)
    z1, z2 = beta + gamma1, beta + gamma2
    c = pref * plancherel_integral(alpha, beta, z1, z2, d)
    if gamma1 == gamma2:
        return c, c
    c_fine = pref * plancherel_integral(alpha, beta, z1, z2, d, nodes=30)
    cs = pref * plancherel_integral(alpha, beta, z1, z2, d, absolute=True, nodes=40)
    return c_fine, max(cs, abs(c_fine))


def plancherel_constant(p: ModelParams, gamma1: Optional[float] = None,
                        gamma2: Optional[float] = None) -> ConstantPair:
    """C_{g1,g2} and its absolute-value version C*_{g1,g2} (memoized)."""
    g1 = p.gamma if gamma1 is None else float(gamma1)
    g2 = g1 if gamma2 is None else float(gamma2)
    c, cs = _constant_cached(p.alpha, p.beta, g1, g2, p.nu, p.d)
    return ConstantPair(c, cs, g1, g2)


def int_Y_squared(p: ModelParams, t: float) -> float:
    """int Y(t, x)**2 dx = C_gamma t**(2(beta+gamma-1) - d beta/alpha)."""
    if not t > 0:
        raise DomainError("int_Y_squared needs t > 0")
    c = plancherel_constant(p).c
    return c * t ** (2 * (p.zeta - 1) - p.d * p.beta / p.alpha)


def j0_multipliers(p: ModelParams, t: float, k, length: float):
    """Mode multipliers of the homogeneous solution on a circle of ``length``.

    Returns ``(m0, m1)``: ``m0`` damps the initial value, ``m1`` the initial
    velocity (zero when beta <= 1).
    """
    k = np.asarray(k, dtype=float)
    if t == 0:
        return np.ones_like(k), np.zeros_like(k)
    c = 0.5 * p.nu * t**p.beta * (2 * math.pi * np.abs(k) / length) ** p.alpha
    m0 = mittag_leffler(p.beta, 1.0, c)
    m1 = t * mittag_leffler(p.beta, 2.0, c) if p.beta > 1 else np.zeros_like(k)
    return m0, m1


def j0_periodic(p: ModelParams, mu_coeffs, t: float, x, length: float = 1.0,
                mu1_coeffs=None):
    """Homogeneous solution J0(t, x) on a circle from Fourier coefficients.

    Coefficients follow the ``numpy.fft.rfft(samples) / n`` convention:
    mu(x) = c_0 + 2 Re sum_{k>=1} c_k exp(2 pi i k x / length).  Returns
    ``(value, truncation_estimate)`` where the estimate is the size of the
    highest quarter of retained modes.
    """
    if not t >= 0:
        raise DomainError("t must be >= 0")
    c = np.asarray(mu_coeffs, dtype=complex)
    c1 = np.asarray([] if mu1_coeffs is None else mu1_coeffs, dtype=complex)
    # missing trailing coefficients are zero
    size = max(c.size, c1.size)
    c = np.pad(c, (0, size - c.size))
    c1 = np.pad(c1, (0, size - c1.size))
    k = np.arange(size)
    m0, m1 = j0_multipliers(p, t, k, length)
    amp = c * m0 + c1 * m1
    w = np.where(k == 0, 1.0, 2.0)
    x = np.asarray(x, dtype=float)
    phase = np.exp(2j * math.pi * np.multiply.outer(x, k) / length)
    val = np.real(phase @ (w * amp))
    tail = float(np.sum(np.abs(w * amp)[-max(1, c.size // 4):])) if c.size > 1 else 0.0
    return (float(val) if val.ndim == 0 else val), tail

"""Pure-Python kernels; the fallback for :mod:`fracholder._core`.

Both modules expose the same functions with the same semantics:

``ml_neg(beta, zeta, x)``
    E_{beta,zeta}(-x) for a float64 array ``x >= 0``.
``history_sum(kernel, forcing, n, out)``
    ``out[:] = sum_{m<=n} kernel[n - m] * forcing[m]`` over complex rows.

The Mittag-Leffler evaluation switches between three branches on
``R = x**(1/beta)``: the power series for ``R <= SERIES_R``, the
asymptotic expansion (algebraic terms plus the residues of the poles of
the Laplace transform) for ``R >= ASYMP_R``, and in between a trapezoidal
rule on an optimal parabolic Bromwich contour in the manner of Garrappa.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.special import gammaln, rgamma

SERIES_R = 6.0
ASYMP_R = 36.0
MAX_TERMS = 300

_LOG_EPS = math.log(np.finfo(float).eps)
_LOG_TARGET = math.log(1e-15)


def _rgamma(a):
    return float(rgamma(a))


def series_branch(beta, zeta, x):
    """Power series with Kahan summation. Returns (values, converged mask)."""
    x = np.asarray(x, dtype=float)
    s = np.zeros_like(x)
    c = np.zeros_like(x)
    term_pow = np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(MAX_TERMS):
        term = np.where(done, 0.0, term_pow * rgamma(beta * k + zeta))
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        if k > 2:
            small = np.abs(term) <= 1e-17 * np.maximum(1.0, np.abs(s))
            past = beta * k + zeta > 1.0 + (x ** (1.0 / beta) if beta > 0 else 0.0)
            done |= small & past
            if done.all():
                break
        term_pow = np.where(done, 0.0, term_pow * (-x))
    return s, done


def asymptotic_branch(beta, zeta, x):
    """Algebraic expansion plus pole residues. Returns (values, converged).

    The stopping rule uses the envelope x**-k Gamma(beta k + 1 - zeta) / pi of
    the terms, since 1/Gamma(zeta - beta k) itself oscillates through zeros.
    """
    x = np.asarray(x, dtype=float)
    logx = np.log(x)
    s = np.zeros_like(x)
    c = np.zeros_like(x)
    p = -np.ones_like(x)
    inv = 1.0 / x
    active = np.ones(x.shape, dtype=bool)
    converged = np.zeros(x.shape, dtype=bool)
    for k in range(1, MAX_TERMS):
        p = -p * inv  # (-1)**(k+1) x**-k
        term = np.where(active, p * rgamma(zeta - beta * k), 0.0)
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        env = np.exp(-k * logx + gammaln(beta * k + 1.0 - zeta)) / math.pi
        ok = env <= 1e-17 * np.maximum(np.abs(s), inv)
        converged |= active & ok
        # past the smallest envelope term the expansion only diverges
        active &= ~ok & (beta * k < x ** (1.0 / beta) + 1.0)
        if not active.any():
            break
    if beta > 1.0:
        r = x ** (1.0 / beta)
        phase = math.pi / beta
        s = s + (2.0 / beta) * r ** (1.0 - zeta) * np.exp(r * math.cos(phase)) * np.cos(
            r * math.sin(phase) + (1.0 - zeta) * phase
        )
    return s, converged


def _param_rb(phi_j, phi_j1, pj, qj, log_epsilon):
    t = 1.0
    fac = 1.01
    f_max = math.exp(log_epsilon - _LOG_EPS)
    sq_j = math.sqrt(phi_j)
    threshold = 2.0 * math.sqrt((log_epsilon - _LOG_EPS) / t)
    sq_j1 = min(math.sqrt(phi_j1), threshold - sq_j)
    f_bar = 1.0
    if pj < 1e-14 and qj < 1e-14:
        sqb_j, sqb_j1 = sq_j, sq_j1
        adm = True
    elif pj < 1e-14:
        sqb_j = sq_j
        f_min = fac * (sq_j / (sq_j1 - sq_j)) ** qj if sq_j > 0 else fac
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fq = f_bar ** (-1.0 / qj)
            sqb_j1 = (2 * sq_j1 - fq * sq_j) / (2 + fq)
            adm = True
        else:
            adm = False
    elif qj < 1e-14:
        sqb_j1 = sq_j1
        f_min = fac * (sq_j1 / (sq_j1 - sq_j)) ** pj
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            sqb_j = (2 * sq_j + fp * sq_j1) / (2 - fp)
            adm = True
        else:
            adm = False
    else:
        f_min = fac * (sq_j + sq_j1) / (sq_j1 - sq_j) ** max(pj, qj)
        if f_min < f_max:
            f_min = max(f_min, 1.5)
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = f_bar ** (-1.0 / pj)
            fq = f_bar ** (-1.0 / qj)
            w = -phi_j1 * t / log_epsilon
            den = 2 + w - (1 + w) * fp + fq
            sqb_j = ((2 + w + fq) * sq_j + fp * sq_j1) / den
            sqb_j1 = (-(1 + w) * fq * sq_j + (2 + w - (1 + w) * fp) * sq_j1) / den
            adm = True
        else:
            adm = False
    if not adm:
        return 0.0, 0.0, math.inf
    log_epsilon = log_epsilon - math.log(f_bar)
    w = -sqb_j1**2 * t / log_epsilon
    mu = (((1 + w) * sqb_j + sqb_j1) / (2 + w)) ** 2
    h = -2 * math.pi / log_epsilon * (sqb_j1 - sqb_j) / ((1 + w) * sqb_j + sqb_j1)
    n = math.ceil(math.sqrt(1 - log_epsilon / t / mu) / h)
    return mu, h, n


def _param_ru(phi_j, pj, log_epsilon):
    t = 1.0
    sq_phi_j = math.sqrt(phi_j)
    phib = phi_j * 1.01 if phi_j > 0 else 0.01
    sqb = math.sqrt(phib)
    f_min, f_max, f_tar = 1.0, 10.0, 5.0
    for _ in range(100):
        phi_t = phib * t
        lept = log_epsilon / phi_t
        n = math.ceil(phi_t / math.pi * (1 - 3 * lept / 2 + math.sqrt(1 - 2 * lept)))
        a = math.pi * n / phi_t
        sq_mu = sqb * abs(4 - a) / abs(7 - math.sqrt(1 + 12 * a))
        fbar = ((sqb - sq_phi_j) / sq_mu) ** (-pj)
        if pj < 1e-14 or f_min < fbar < f_max:
            break
        sqb = f_tar ** (-1.0 / pj) * sq_mu + sq_phi_j
        phib = sqb * sqb
    mu = sq_mu * sq_mu
    h = (-3 * a - 2 + 2 * math.sqrt(1 + 12 * a)) / (4 - a) / n
    threshold = (log_epsilon - _LOG_EPS) / t
    if mu > threshold:
        q = 0.0 if abs(pj) < 1e-14 else f_tar ** (-1.0 / pj) * math.sqrt(mu)
        phib = (q + sq_phi_j) ** 2
        if phib < threshold:
            w = math.sqrt(_LOG_EPS / (_LOG_EPS - log_epsilon))
            u = math.sqrt(-phib * t / _LOG_EPS)
            mu = threshold
            n = math.ceil(w * log_epsilon / 2 / math.pi / (u * w - 1))
            h = math.sqrt(_LOG_EPS / (_LOG_EPS - log_epsilon)) / n
        else:
            n, h = math.inf, 0.0
    return mu, h, n


def contour_plan(beta, zeta, x):
    """Contour parameters ``(mu, h, n, residue_poles)`` for E_{beta,zeta}(-x)."""
    kmin = math.ceil(-beta / 2.0 - 0.5)
    kmax = math.floor(beta / 2.0 - 0.5)
    r = x ** (1.0 / beta)
    poles = []
    for k in range(kmin, kmax + 1):
        s = r * cmath.exp(1j * (math.pi + 2 * k * math.pi) / beta)
        phi = 0.5 * (s.real + abs(s))
        if phi > 1e-15:
            poles.append((phi, s))
    poles.sort(key=lambda ps: ps[0])
    sing = [0j] + [s for _, s in poles]
    phi = [0.0] + [ph for ph, _ in poles] + [math.inf]
    nsing = len(sing)
    p = [max(0.0, -2.0 * (beta - zeta + 1.0))] + [1.0] * (nsing - 1)
    q = [1.0] * (nsing - 1) + [math.inf]
    log_epsilon = _LOG_TARGET
    while True:
        adm = [
            j
            for j in range(nsing)
            if phi[j] < (log_epsilon - _LOG_EPS) and phi[j] < phi[j + 1]
        ]
        best = (0.0, 0.0, math.inf, 0)
        for j in adm:
            if j < nsing - 1:
                mu, h, n = _param_rb(phi[j], phi[j + 1], p[j], q[j], log_epsilon)
            else:
                mu, h, n = _param_ru(phi[j], p[j], log_epsilon)
            if n < best[2]:
                best = (mu, h, n, j)
        if best[2] > 200 and log_epsilon < -2.0:
            log_epsilon += math.log(10.0)
            continue
        mu, h, n, j = best
        return mu, h, int(n), sing[j + 1:]


def contour_branch_scalar(beta, zeta, x):
    mu, h, n, residue_poles = contour_plan(beta, zeta, x)
    u = h * np.arange(0, n + 1)
    z = mu * (1j * u + 1.0) ** 2
    zd = 2.0 * mu * (1j - u)
    s = np.exp(z) * z ** (beta - zeta) / (z**beta + x) * zd
    im = s.imag
    total = h / (2.0 * math.pi) * (im[0] + 2.0 * im[1:].sum())
    for sp in residue_poles:
        total += (sp ** (1.0 - zeta) * cmath.exp(sp)).real / beta
    return total


def contour_branch(beta, zeta, x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.zeros_like(x)
    if beta <= 1.0:
        # no poles on the principal sheet: one plan serves every x
        mu, h, n, _ = contour_plan(beta, zeta, float(x.flat[0]))
        u = h * np.arange(0, n + 1)
        z = mu * (1j * u + 1.0) ** 2
        zd = 2.0 * mu * (1j - u)
        g = np.exp(z) * z ** (beta - zeta) * zd
        zb = z**beta
        s = (g[None, :] / (zb[None, :] + x.reshape(-1, 1))).imag
        out = h / (2.0 * math.pi) * (s[:, 0] + 2.0 * s[:, 1:].sum(axis=1))
        return out.reshape(x.shape)
    return np.array([contour_branch_scalar(beta, zeta, float(v)) for v in x.flat]).reshape(
        x.shape
    )


def ml_neg(beta, zeta, x):
    """E_{beta,zeta}(-x) elementwise for ``x >= 0`` (no argument checking)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    flat_x = x.ravel()
    flat = out.ravel()
    r = flat_x ** (1.0 / beta)
    todo = np.ones(flat_x.shape, dtype=bool)

    idx = np.nonzero(r <= SERIES_R)[0]
    if idx.size:
        v, ok = series_branch(beta, zeta, flat_x[idx])
        flat[idx[ok]] = v[ok]
        todo[idx[ok]] = False
    idx = np.nonzero(todo & (r >= ASYMP_R))[0]
    if idx.size:
        v, ok = asymptotic_branch(beta, zeta, flat_x[idx])
        flat[idx[ok]] = v[ok]
        todo[idx[ok]] = False
    idx = np.nonzero(todo)[0]
    if idx.size:
        flat[idx] = contour_branch(beta, zeta, flat_x[idx])
    return flat.reshape(x.shape)


def history_sum(kernel, forcing, n, out):
    m = n + 1
    np.einsum("ij,ij->j", kernel[m - 1::-1], forcing[:m], out=out)
    return out

"""Quadrature and extrapolation helpers.

Integrands passed to :func:`tanh_sinh` receive three arrays: the node ``x``
and its distances ``dl = x - a`` and ``dr = b - x``.  The distances are
computed without cancellation, which is what makes algebraic endpoint
singularities such as ``(b - x)**(q - 1)`` integrable to full precision.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import AccuracyError

_T_MAX = 6.0


@lru_cache(maxsize=32)
def _ts_level(level: int):
    """Nodes (as complement 1 - x), signed abscissae and weights of one level.

    Level 0 holds t = 0, +-1, ..., level k > 0 holds the odd multiples of
    2**-k.  Only t >= 0 is stored; the rule is symmetric.
    """
    h = 2.0**-level
    if level == 0:
        t = np.arange(0.0, _T_MAX + 0.5 * h, h)
    else:
        t = np.arange(h, _T_MAX, 2 * h)
    u = 0.5 * math.pi * np.sinh(t)
    e2 = np.exp(-2.0 * u)
    comp = 2.0 * e2 / (1.0 + e2)  # 1 - tanh(u)
    w = 0.5 * math.pi * np.cosh(t) * 4.0 * e2 / (1.0 + e2) ** 2
    keep = comp > 0.0
    return t[keep], comp[keep], w[keep]


def _ts_level_sum(f, a, b, level):
    t, comp, w = _ts_level(level)
    half = 0.5 * (b - a)
    near = half * comp  # distance to the nearer endpoint
    # on tiny intervals the outermost distances underflow; their weight is nil
    ok = near > 0.0
    t, near, w = t[ok], near[ok], w[ok]
    far = (b - a) - near
    mirror = t > 0
    dl = np.concatenate([far, near[mirror]])
    dr = np.concatenate([near, far[mirror]])
    ww = np.concatenate([w, w[mirror]])
    x = np.where(dl <= dr, a + dl, b - dr)
    vals = np.asarray(f(x, dl, dr), dtype=float)
    return half * float(np.dot(ww, vals))


def tanh_sinh(f, a, b, rtol=1e-12, atol=0.0, max_level=9, min_level=3):
    """Double-exponential quadrature of ``f`` over ``[a, b]``.

    Returns ``(value, error_estimate)``.  Raises :class:`AccuracyError`
    when the tolerance is not met within ``max_level`` halvings.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        val, err = tanh_sinh(f, b, a, rtol, atol, max_level, min_level)
        return -val, err
    h = 1.0
    acc = _ts_level_sum(f, a, b, 0)
    est_prev = acc * h
    diff_prev = math.inf
    for level in range(1, max_level + 1):
        h *= 0.5
        acc += _ts_level_sum(f, a, b, level)
        est = acc * h
        diff = abs(est - est_prev)
        if not math.isfinite(est):
            raise AccuracyError("non-finite integrand value", math.inf, est)
        err = diff * diff / diff_prev if diff_prev > 0 and math.isfinite(diff_prev) else diff
        err = max(err, 4 * np.finfo(float).eps * abs(est))
        tol = max(atol, rtol * abs(est))
        if level >= min_level and (err <= tol or diff <= tol * 1e-3):
            return est, err
        est_prev, diff_prev = est, diff
    raise AccuracyError(
        f"tanh-sinh quadrature did not converge (estimate {err:.3e})", err, est
    )


@lru_cache(maxsize=16)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def panel_nodes(edges, n=20):
    """Gauss-Legendre nodes and weights on every panel of ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def panel_integrate(f, edges, n=20):
    nodes, weights = panel_nodes(edges, n)
    return float(np.dot(weights, f(nodes)))


def wynn_epsilon(partial_sums):
    """Wynn's epsilon algorithm; returns ``(limit, error_estimate)``.

    The estimate compares the two last even-column diagonals.
    """
    s = [float(v) for v in partial_sums]
    n = len(s)
    if n < 3:
        return s[-1], math.inf
    e_prev = [0.0] * (n + 1)
    e_cur = list(s)
    evens = [s[-1]]
    for k in range(1, n):
        e_next = []
        for i in range(len(e_cur) - 1):
            d = e_cur[i + 1] - e_cur[i]
            if d == 0.0:
                e_next.append(math.inf)
            else:
                e_next.append(e_prev[i + 1] + 1.0 / d)
        e_prev, e_cur = e_cur, e_next
        if k % 2 == 0 and e_cur and math.isfinite(e_cur[-1]):
            evens.append(e_cur[-1])
        if len(e_cur) < 2:
            break
    if len(evens) < 2:
        return evens[-1], math.inf
    return evens[-1], abs(evens[-1] - evens[-2])


def richardson(hs, values, exponents):
    """Extrapolate ``v(h) = L + sum_j c_j h**p_j`` to ``h = 0``.

    Uses the last ``len(exponents) + 1`` samples.  Returns ``(L, spread)``
    where ``spread`` is the change against the extrapolant that drops the
    last exponent.
    """
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    m = len(exponents)
    if len(hs) < m + 1:
        raise ValueError("not enough samples for the requested exponents")

    def solve(k):
        hh, vv = hs[-(k + 1):], values[-(k + 1):]
        a = np.ones((k + 1, k + 1))
        for j, p in enumerate(exponents[:k]):
            a[:, j + 1] = hh**p
        return float(np.linalg.solve(a, vv)[0])

    full = solve(m)
    lower = solve(m - 1) if m >= 1 else values[-1]
    return full, abs(full - lower)


def one_sided_weights(k: int, order: int):
    """Forward-difference weights for the k-th derivative on offsets 0..m.

    ``m = k + order - 1`` so the stencil is exact for polynomials of degree
    ``k + order - 1``; multiply by ``h**-k``.
    """
    m = k + order - 1
    offsets = np.arange(m + 1, dtype=float)
    a = np.vander(offsets, increasing=True).T
    rhs = np.zeros(m + 1)
    rhs[k] = math.factorial(k)
    return offsets, np.linalg.solve(a, rhs)

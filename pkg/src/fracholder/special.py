"""Gamma and two-parameter Mittag-Leffler functions on the negative axis."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy import special as sps

from .errors import AccuracyError, DomainError

if os.environ.get("FRACHOLDER_PURE") == "1":
    from . import _mlpy as _kern

    BACKEND = "python"
else:
    try:
        from . import _core as _kern

        BACKEND = "compiled"
    except ImportError:
        from . import _mlpy as _kern

        BACKEND = "python"


def gamma(x: float) -> float:
    """Gamma function; raises :class:`DomainError` at the poles."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x:g}")
    return float(sps.gamma(x))


def rgamma(x):
    """1/Gamma(x), zero at the poles; accepts arrays."""
    return sps.rgamma(x)


@dataclass(frozen=True)
class MLQuery:
    beta: float
    zeta: float
    x: float

    def __post_init__(self):
        _check(self.beta, self.x)


def _check(beta, x):
    if not (0.0 < beta <= 2.0) or not math.isfinite(beta):
        raise DomainError(f"beta must lie in (0, 2], got {beta}")
    xmin = np.min(x) if np.size(x) else 0.0
    if np.isnan(xmin) or xmin < 0:
        raise DomainError("argument x must be >= 0 (the function is evaluated at -x)")


def _closed_form(beta, zeta, x):
    if beta == 1.0 and zeta == 1.0:
        return np.exp(-x)
    if beta == 1.0 and zeta == 2.0:
        return np.where(x > 0, -np.expm1(-x) / np.where(x > 0, x, 1.0), 1.0)
    if beta == 2.0 and zeta == 1.0:
        return np.cos(np.sqrt(x))
    if beta == 2.0 and zeta == 2.0:
        r = np.sqrt(x)
        return np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
    return None


def mittag_leffler(beta, zeta=None, x=None):
    """E_{beta,zeta}(-x) for ``x >= 0``; scalar in, scalar out.

    Absolute error is below 1e-10 for ``x <= 1e6``.  ``zeta`` may be any
    real number, including non-positive values.  An :class:`MLQuery` may be
    passed in place of the three arguments.
    """
    if isinstance(beta, MLQuery):
        beta, zeta, x = beta.beta, beta.zeta, beta.x
    beta = float(beta)
    zeta = float(zeta)
    scalar = np.ndim(x) == 0
    xa = np.asarray(x, dtype=float)
    _check(beta, xa)
    out = _closed_form(beta, zeta, xa)
    if out is None:
        out = _kern.ml_neg(beta, zeta, np.ascontiguousarray(xa.ravel())).reshape(xa.shape)
    if not np.all(np.isfinite(out)):
        bad = xa[~np.isfinite(out)].ravel()[0]
        raise AccuracyError(
            f"Mittag-Leffler evaluation failed at beta={beta}, zeta={zeta}, x={bad}"
        )
    return float(out) if scalar else out


def ml_envelope(beta: float, zeta: float, x_max: float, n: int = 400) -> float:
    """Smallest A with |E_{beta,zeta}(-x)| (1 + x) <= A on [0, x_max].

    A log grid brackets every local maximum, which is then refined by a
    bounded Brent search.
    """
    if not (0.0 < beta < 2.0):
        raise DomainError(f"the envelope needs beta in (0, 2), got {beta}")
    if not x_max > 0:
        raise DomainError("x_max must be positive")
    lo = min(1e-6, x_max * 1e-3)
    grid = np.concatenate([[0.0], np.geomspace(lo, x_max, n)])

    def g(x):
        return abs(mittag_leffler(beta, zeta, x)) * (1.0 + x)

    vals = np.abs(mittag_leffler(beta, zeta, grid)) * (1.0 + grid)
    best = float(vals.max())
    inner = np.nonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    for i in inner:
        res = optimize.minimize_scalar(lambda x: -g(x), bounds=(grid[i - 1], grid[i + 1]),
                                       method="bounded", options={"xatol": 1e-12 * grid[i + 1]})
        best = max(best, -float(res.fun))
    return best

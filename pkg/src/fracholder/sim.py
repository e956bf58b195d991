"""Monte Carlo simulation of the mild solution on a periodic interval.

The stochastic convolution is stepped in Fourier space.  With cell-averaged
kernel multipliers

    Yhat[j, k] = (1/dt) int_{j dt}^{(j+1) dt} FY(tau, xi_k) dtau * sinc(xi_k dx / 2)

and left-point evaluation of sigma(u), one step reads

    uhat_{n+1} = J0hat(t_{n+1}) + (1/dx) sum_{m<=n} Yhat[n-m] * rfft(sigma(u_m) W_m),

where W_m holds the white-noise masses of the cells at step m (standard
deviation sqrt(dt dx)).  Additive noise is a single FFT convolution in time.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, InstabilityError
from .holder import FitResult, IncrementCurve, fit_exponent
from .kernels import ModelParams, j0_multipliers
from .special import _kern, mittag_leffler

OVERFLOW_GUARD = 1e150
THREADS_ENV = "FRACHOLDER_THREADS"


@dataclass(frozen=True)
class Sigma:
    """Noise coefficient: ``constant`` (c), ``linear`` (lam * u) or ``table``.

    A table is piecewise linear through ``(x, y)`` and continues with the end
    slopes, so its Lipschitz constant is the largest segment slope.
    """

    kind: str
    c: float = 0.0
    lam: float = 0.0
    x: tuple = ()
    y: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "table"):
            raise DomainError(f"unknown sigma kind {self.kind!r}")
        if self.kind == "table":
            x = np.asarray(self.x, dtype=float)
            if len(x) < 2 or len(x) != len(self.y) or np.any(np.diff(x) <= 0):
                raise DomainError("sigma table needs >= 2 increasing x values matching y")
        if not math.isfinite(self.lipschitz):
            raise DomainError("sigma must have a finite Lipschitz constant")

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "linear":
            return abs(self.lam)
        return float(np.max(np.abs(np.diff(self.y) / np.diff(self.x))))

    @property
    def additive(self) -> bool:
        return self.kind == "constant"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.c)
        if self.kind == "linear":
            return self.lam * u
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        out = np.interp(u, x, y)
        lo, hi = u < x[0], u > x[-1]
        out[lo] = y[0] + (u[lo] - x[0]) * (y[1] - y[0]) / (x[1] - x[0])
        out[hi] = y[-1] + (u[hi] - x[-1]) * (y[-1] - y[-2]) / (x[-1] - x[-2])
        return out

    def as_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "linear":
            return {"kind": "linear", "lam": self.lam}
        return {"kind": "table", "x": list(self.x), "y": list(self.y)}

    @classmethod
    def from_dict(cls, d: dict) -> "Sigma":
        kind = d.get("kind")
        if kind == "constant":
            return cls("constant", c=float(d["c"]))
        if kind == "linear":
            return cls("linear", lam=float(d["lam"]))
        if kind == "table":
            return cls("table", x=tuple(map(float, d["x"])), y=tuple(map(float, d["y"])))
        raise DomainError(f"unknown sigma kind {kind!r}")


def _coeffs(v) -> np.ndarray:
    """Complex coefficients from a list of [re, im] pairs or numbers."""
    arr = np.asarray(v, dtype=float) if len(v) else np.zeros((0, 2))
    if arr.ndim == 1:
        return arr.astype(complex)
    return arr[:, 0] + 1j * arr[:, 1]


@dataclass(frozen=True)
class SimConfig:
    """Simulation set-up.

    ``mu`` and ``mu1`` are Fourier coefficients in the ``rfft(samples) / n``
    convention; ``mu1`` (initial velocity) is only allowed when beta > 1.
    """

    p: ModelParams
    L: float
    nx: int
    nt: int
    T_end: float
    sigma: Sigma
    seed: int
    replicates: int = 1
    mu: tuple = ()
    mu1: tuple = ()

    def __post_init__(self):
        if self.p.d != 1:
            raise DomainError("simulation is restricted to d = 1")
        if not self.L > 0 or not self.T_end > 0:
            raise DomainError("L and T_end must be positive")
        if self.nx < 8 or self.nt < 8:
            raise DomainError("nx and nt must be at least 8")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if len(self.mu) > self.nx // 2 + 1 or len(self.mu1) > self.nx // 2 + 1:
            raise DomainError("more initial coefficients than grid modes")
        if len(self.mu1) and self.p.beta <= 1:
            raise DomainError("an initial velocity is only meaningful for beta > 1")

    @property
    def dt(self) -> float:
        return self.T_end / self.nt

    @property
    def dx(self) -> float:
        return self.L / self.nx

    def as_dict(self) -> dict:
        pair = lambda c: [[float(np.real(z)), float(np.imag(z))] for z in c]  # noqa: E731
        return {
            "params": self.p.as_dict(),
            "L": self.L,
            "nx": self.nx,
            "nt": self.nt,
            "T_end": self.T_end,
            "sigma": self.sigma.as_dict(),
            "init": {"mu": pair(self.mu), "mu1": pair(self.mu1)},
            "seed": self.seed,
            "replicates": self.replicates,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        required = ["params", "L", "nx", "nt", "T_end", "sigma", "init", "seed", "replicates"]
        missing = [k for k in required if k not in d]
        if missing:
            raise DomainError(f"config is missing {', '.join(missing)}")
        pr = d["params"]
        p = ModelParams(float(pr["alpha"]), float(pr["beta"]), float(pr["gamma"]),
                        float(pr["nu"]), int(pr["d"]))
        init = d["init"]
        return cls(p, float(d["L"]), int(d["nx"]), int(d["nt"]), float(d["T_end"]),
                   Sigma.from_dict(d["sigma"]), int(d["seed"]), int(d["replicates"]),
                   tuple(_coeffs(init.get("mu", []))), tuple(_coeffs(init.get("mu1", []))))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (floats written with repr)."""
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Field2D:
    """Simulated values with shape ``(replicates, nt + 1, nx)``; row 0 is t = 0."""

    values: np.ndarray
    dt: float
    dx: float
    config_hash: str
    seed: int

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(list(self.values.shape)).encode())
        h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return h.hexdigest()

    def sidecar(self) -> dict:
        return {
            "dims": list(self.values.shape),
            "axes": ["replicate", "time", "space"],
            "dtype": "float64",
            "byte_order": "little",
            "dt": self.dt,
            "dx": self.dx,
            "seed": self.seed,
            "config_digest": self.config_hash,
            "field_digest": self.digest(),
        }

    def write(self, path: str) -> str:
        """Write the raw float64 field to ``path`` and the sidecar to ``path + '.json'``."""
        np.ascontiguousarray(self.values, dtype="<f8").tofile(path)
        side = path + ".json"
        with open(side, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2)
        return side

    @classmethod
    def read(cls, path: str) -> "Field2D":
        with open(path + ".json") as fh:
            meta = json.load(fh)
        vals = np.fromfile(path, dtype="<f8").reshape(meta["dims"])
        return cls(vals, meta["dt"], meta["dx"], meta["config_digest"], meta["seed"])


def _kernel_multipliers(cfg: SimConfig) -> np.ndarray:
    """Cell-averaged Fourier multipliers Yhat[j, k], j = 0..nt-1."""
    p = cfg.p
    k = np.arange(cfg.nx // 2 + 1)
    xi = 2 * math.pi * k / cfg.L
    tau = cfg.dt * np.arange(cfg.nt + 1)
    arg = 0.5 * p.nu * np.multiply.outer(tau**p.beta, xi**p.alpha)
    prim = (tau**p.zeta)[:, None] * mittag_leffler(p.beta, p.zeta + 1, arg)
    yhat = np.diff(prim, axis=0) / cfg.dt
    return yhat * np.sinc(xi * cfg.dx / (2 * math.pi))


def _j0_field(cfg: SimConfig) -> Optional[np.ndarray]:
    """J0 on the grid for all nt + 1 times, or None when the data vanish."""
    if not len(cfg.mu) and not len(cfg.mu1):
        return None
    nk = cfg.nx // 2 + 1
    mu = np.zeros(nk, complex)
    mu[: len(cfg.mu)] = cfg.mu
    mu1 = np.zeros(nk, complex)
    mu1[: len(cfg.mu1)] = cfg.mu1
    k = np.arange(nk)
    out = np.empty((cfg.nt + 1, cfg.nx))
    for n in range(cfg.nt + 1):
        m0, m1 = j0_multipliers(cfg.p, n * cfg.dt, k, cfg.L)
        out[n] = np.fft.irfft((mu * m0 + mu1 * m1) * cfg.nx, n=cfg.nx)
    return out


def _noise(cfg: SimConfig, replicate: int) -> np.ndarray:
    """Cell masses W[m, j] for one replicate.

    Philox is keyed by (seed, replicate); cell (m, j) always occupies the same
    position of that stream, independent of scheduling.
    """
    bg = np.random.Philox(key=np.array([cfg.seed, replicate], dtype=np.uint64))
    w = np.random.Generator(bg).standard_normal((cfg.nt, cfg.nx))
    return w * math.sqrt(cfg.dt * cfg.dx)


def _replicate(cfg: SimConfig, r: int, yhat: np.ndarray, j0: Optional[np.ndarray]) -> np.ndarray:
    nt, nx = cfg.nt, cfg.nx
    out = np.empty((nt + 1, nx))
    out[0] = 0.0 if j0 is None else j0[0]
    w = _noise(cfg, r)
    if cfg.sigma.additive:
        f = np.fft.rfft(w, axis=1)
        size = 2 * nt
        conv = np.fft.ifft(np.fft.fft(yhat, size, axis=0) * np.fft.fft(f, size, axis=0), axis=0)[:nt]
        out[1:] = np.fft.irfft(conv * (cfg.sigma.c / cfg.dx), n=nx, axis=1)
        if j0 is not None:
            out[1:] += j0[1:]
    else:
        forcing = np.zeros((nt, nx // 2 + 1), complex)
        acc = np.zeros(nx // 2 + 1, complex)
        kern = np.ascontiguousarray(yhat, dtype=complex)
        for n in range(nt):
            forcing[n] = np.fft.rfft(cfg.sigma(out[n]) * w[n])
            _kern.history_sum(kern, forcing, n, acc)
            row = np.fft.irfft(acc / cfg.dx, n=nx)
            if j0 is not None:
                row += j0[n + 1]
            out[n + 1] = row
            if not np.all(np.isfinite(row)) or np.max(np.abs(row)) > OVERFLOW_GUARD:
                raise InstabilityError(f"solution blew up at step {n + 1} (replicate {r})", n + 1)
    if not np.all(np.isfinite(out)) or np.max(np.abs(out)) > OVERFLOW_GUARD:
        raise InstabilityError(f"solution blew up (replicate {r})", nt)
    return out


def thread_count() -> int:
    v = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(v)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {v!r}")
    if n < 1:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {v!r}")
    return n


def simulate(cfg: SimConfig, threads: Optional[int] = None) -> Field2D:
    """All replicates of the discretized mild solution.

    Each replicate is a deterministic function of (config, seed, replicate
    index), so the result does not depend on ``threads``.
    """
    yhat = _kernel_multipliers(cfg)
    j0 = _j0_field(cfg)
    values = np.empty((cfg.replicates, cfg.nt + 1, cfg.nx))
    threads = thread_count() if threads is None else threads

    def run(r):
        values[r] = _replicate(cfg, r, yhat, j0)

    if threads == 1 or cfg.replicates == 1:
        for r in range(cfg.replicates):
            run(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(cfg.replicates)))
    return Field2D(values, cfg.dt, cfg.dx, cfg.digest(), cfg.seed)


def scheme_variance(cfg: SimConfig, n: int) -> float:
    """Exact variance of the noise part of u at step n under additive noise.

    This is what the sampler targets; its distance from the continuum value
    is pure discretization error.
    """
    if not cfg.sigma.additive:
        raise DomainError("closed-form variance needs additive noise")
    yhat = _kernel_multipliers(cfg)[:n]
    w = _mode_weights(cfg.nx)
    return float(cfg.sigma.c**2 * cfg.dt / cfg.L * np.sum(np.abs(yhat) ** 2 * w))


def _mode_weights(nx: int) -> np.ndarray:
    w = np.full(nx // 2 + 1, 2.0)
    w[0] = 1.0
    if nx % 2 == 0:
        w[-1] = 1.0
    return w


def scheme_increments(cfg: SimConfig, direction: str, lags: Sequence[int],
                      t_index: Optional[int] = None) -> np.ndarray:
    """Exact mean squared increments of the scheme under additive noise.

    Same conventions as :func:`empirical_holder`; useful to separate
    discretization bias from Monte Carlo error.
    """
    if not cfg.sigma.additive:
        raise DomainError("closed-form increments need additive noise")
    yh = _kernel_multipliers(cfg)
    w = _mode_weights(cfg.nx)
    scale = cfg.sigma.c**2 * cfg.dt / cfg.L
    out = []
    if direction == "time":
        n = cfg.nt // 2 if t_index is None else t_index
        for h in lags:
            # u_{n+h} - u_n: cells m < n see the kernel difference, later cells only u_{n+h}
            old = yh[h:n + h] - yh[:n]
            new = yh[:h]
            out.append(scale * np.sum(w * (np.sum(np.abs(old) ** 2, axis=0)
                                           + np.sum(np.abs(new) ** 2, axis=0))))
    elif direction == "space":
        n = cfg.nt if t_index is None else t_index
        spec = np.sum(np.abs(yh[:n]) ** 2, axis=0) * w
        xi = 2 * math.pi * np.arange(cfg.nx // 2 + 1) / cfg.L
        for h in lags:
            out.append(scale * np.sum(spec * 2 * (1 - np.cos(xi * h * cfg.dx))))
    else:
        raise DomainError(f"direction must be 'time' or 'space', got {direction!r}")
    return np.array(out)


class HolderEstimate(NamedTuple):
    exponent: float
    fit: FitResult
    curve: IncrementCurve
    beyond_resolvable: bool


def _mean_sq(a: np.ndarray) -> float:
    return float(np.mean(np.square(a)))


def empirical_holder(field: Field2D, direction: str, lags: Sequence[int],
                     t_index: Optional[int] = None) -> HolderEstimate:
    """Exponent from the slope of mean squared increments against the lag.

    Increments are averaged over replicates and space.  ``lags`` are grid
    steps; time increments start at row ``t_index`` (default: the middle row),
    space increments use row ``t_index`` (default: the last row) with periodic
    shifts.  The exponent is half the fitted slope; values above 0.95 are
    flagged as beyond what a Hölder exponent can express on the grid.
    """
    v = field.values
    if v.ndim == 2:
        v = v[None]
    lags = np.asarray(sorted(set(int(h) for h in lags)))
    if len(lags) < 4 or lags[0] < 1:
        raise DomainError("need at least 4 distinct positive lags")
    nrow, ncol = v.shape[1], v.shape[2]
    if direction == "time":
        t0 = nrow // 2 if t_index is None else t_index
        if t0 + lags[-1] >= nrow:
            raise DomainError("time lags run past the end of the field")
        vals = [_mean_sq(v[:, t0 + h] - v[:, t0]) for h in lags]
        step = field.dt
    elif direction == "space":
        t0 = nrow - 1 if t_index is None else t_index
        if lags[-1] >= ncol:
            raise DomainError("space lags exceed the grid")
        row = v[:, t0]
        vals = [_mean_sq(np.roll(row, -h, axis=1) - row) for h in lags]
        step = field.dx
    else:
        raise DomainError(f"direction must be 'time' or 'space', got {direction!r}")
    if min(vals) <= 0:
        raise DomainError("averaged increments vanish; the data are degenerate")
    curve = IncrementCurve(lags * step, vals, direction)
    fit = fit_exponent(curve)
    expo = fit.slope / 2
    return HolderEstimate(expo, fit, curve, expo > 0.95)


def refined(cfg: SimConfig, factor: int = 2) -> SimConfig:
    d = cfg.as_dict()
    d["nx"] = cfg.nx * factor
    d["nt"] = cfg.nt * factor
    out = SimConfig.from_dict(d)
    return out


class RefinementReport(NamedTuple):
    coarse: dict
    fine: dict
    max_change: float
    tolerance: float
    passed: bool


def refinement_check(cfg: SimConfig, time_lags: Sequence[float], space_lags: Sequence[float],
                     tolerance: float) -> RefinementReport:
    """Fit exponents on ``cfg`` and on the grid refined by 2 in both directions.

    Lags are physical (time units and length units) so both grids measure
    the same increments.
    """
    out = []
    for c in (cfg, refined(cfg)):
        fld = simulate(c)
        tl = [round(h / c.dt) for h in time_lags]
        sl = [round(h / c.dx) for h in space_lags]
        out.append({"time": empirical_holder(fld, "time", tl).exponent,
                    "space": empirical_holder(fld, "space", sl).exponent})
        del fld
    change = max(abs(out[0][k] - out[1][k]) for k in ("time", "space"))
    return RefinementReport(out[0], out[1], change, tolerance, change < tolerance)

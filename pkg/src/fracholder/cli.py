"""Command-line interface.

Curves go out as CSV with a header row, summaries and reports as JSON and
simulated fields as raw little-endian float64 with a JSON sidecar.  Every
run that writes files also writes a manifest listing them.

Exit codes: 0 success, 2 domain error (including bad flags or input
files), 3 accuracy error or failed verification, 4 instability.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import AccuracyError, DomainError, InstabilityError
from .fracops import (RealFunction, caputo_derivative, fractional_taylor_remainder,
                      local_frac_derivative, power_function, rl_derivative, rl_integral)
from .holder import (DEFAULT_WINDOW, HolderOrder, IncrementCurve, caputo_h_limit, fit_exponent,
                     increment_space, increment_tail, increment_time, lag_grid)
from .kernels import ModelParams, exponents, kernel_Y, plancherel_constant
from .sim import SimConfig, empirical_holder, simulate
from .special import mittag_leffler
from .verify import PROFILES, SUITES, report, run_suite

EXIT_OK, EXIT_DOMAIN, EXIT_ACCURACY, EXIT_INSTABILITY = 0, 2, 3, 4

# default fit tolerances by curve kind
KIND_TOLERANCE = {"time": 0.05, "tail": 0.05, "space": 0.07}


@dataclass
class RunManifest:
    command_line: List[str]
    config_digest: str
    code_version: str
    seed: Optional[int]
    started: str
    finished: str = ""
    outputs: List[str] = field(default_factory=list)

    def write(self, path: str):
        """Finish the manifest and write it; outputs are stored relative to its directory."""
        self.finished = _now()
        base = os.path.dirname(os.path.abspath(path))
        self.outputs = [os.path.relpath(os.path.abspath(p), base) for p in self.outputs]
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _digest(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class _Run:
    """Routes outputs to files or stdout and keeps the manifest."""

    def __init__(self, args, argv, digest=None, seed=None):
        self.out = getattr(args, "out", None)
        cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "out_dir", "handler")}
        self.manifest = RunManifest(["fracholder"] + list(argv), digest or _digest(cfg),
                                    __version__, seed, _now())

    def _sibling(self, suffix: str) -> str:
        return os.path.splitext(self.out)[0] + suffix

    def emit(self, text: str):
        if self.out is None:
            sys.stdout.write(text)
        else:
            self.write_file(self.out, text)

    def emit_summary(self, obj: dict):
        text = json.dumps(obj, indent=2) + "\n"
        if self.out is None:
            sys.stderr.write(text)
        else:
            self.write_file(self._sibling(".summary.json"), text)

    def write_file(self, path: str, text: str):
        with open(path, "w") as fh:
            fh.write(text)
        self.manifest.outputs.append(path)

    def close(self, manifest_path: Optional[str] = None):
        if manifest_path is None and self.out is not None:
            manifest_path = self._sibling(".manifest.json")
        if manifest_path is not None:
            self.manifest.write(manifest_path)


def _params(args) -> ModelParams:
    return ModelParams(args.alpha, args.beta, args.gamma, args.nu, args.d)


def _grid(values, rng, log=False):
    if values is not None:
        return np.asarray(values, dtype=float)
    lo, hi, n = rng
    if n != int(n) or n < 1:
        raise DomainError("the point count of a range must be a positive integer")
    if log:
        if not 0 < lo < hi:
            raise DomainError("a geometric range needs 0 < lo < hi")
        return np.geomspace(lo, hi, int(n))
    return np.linspace(lo, hi, int(n))


def _window(text: Optional[str]) -> Optional[slice]:
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise DomainError(f"window must look like 'start:stop', got {text!r}")
    try:
        lo, hi = (int(p) if p.strip() else None for p in parts)
    except ValueError:
        raise DomainError(f"window bounds must be integers, got {text!r}")
    return slice(lo, hi)


def cmd_ml(args, argv):
    run = _Run(args, argv)
    xs = _grid(args.x, args.x_range, args.log)
    vals = mittag_leffler(args.beta, args.zeta, xs)
    run.emit(_csv_text(["x", "value"], zip(xs, np.atleast_1d(vals))))
    run.close()
    return EXIT_OK


def cmd_kernel(args, argv):
    p = _params(args)
    run = _Run(args, argv)
    xs = _grid(args.x, args.x_range, args.log)
    rows = [(args.t, x, kernel_Y(p, args.t, abs(x))) for x in xs]
    run.emit(_csv_text(["t", "x", "value"], rows))
    run.close()
    return EXIT_OK


def cmd_constants(args, argv):
    p = _params(args)
    run = _Run(args, argv)
    pair = plancherel_constant(p, args.gamma1, args.gamma2)
    run.emit(_csv_text(["gamma1", "gamma2", "c", "c_star"],
                       [(pair.gamma1, pair.gamma2, pair.c, pair.c_star)]))
    run.close()
    return EXIT_OK


def cmd_exponents(args, argv):
    p = ModelParams(args.alpha, args.beta, args.gamma, args.nu, args.d)
    run = _Run(args, argv)
    e = exponents(p)
    run.emit(json.dumps({"rho": e.rho, "theta": e.theta, "time": e.time_exp,
                         "space": e.space_exp}) + "\n")
    run.close()
    return EXIT_OK


def _expected_slope(p: ModelParams, kind: str) -> float:
    if kind == "tail":
        return p.rho
    if kind == "time":
        return min(p.rho, 2.0)
    return min(p.theta - p.d, 2.0)


def cmd_increments(args, argv):
    p = _params(args)
    kind = args.kind
    base = args.t if kind == "space" else args.s
    if base is None:
        raise DomainError("--t is required for space increments" if kind == "space"
                          else f"--s is required for {kind} increments")
    if args.lags is not None:
        lags = np.asarray(sorted(args.lags), dtype=float)
    else:
        lo, hi, n = args.lag_range
        if n != int(n) or n < 2:
            raise DomainError("the lag count must be an integer >= 2")
        lags = lag_grid(1.0 if kind == "space" else base, int(n), lo, hi)
    if kind == "time":
        vals = [increment_time(p, base, base + h, args.method) for h in lags]
    elif kind == "tail":
        vals = [increment_tail(p, base, base + h) for h in lags]
    else:
        vals = [increment_space(p, base, h) for h in lags]
    run = _Run(args, argv)
    run.emit(_csv_text(["lag", "value"], zip(lags, vals)))
    window = DEFAULT_WINDOW if args.window is None else _window(args.window)
    fit = fit_exponent(IncrementCurve(lags, vals, kind), window)
    expected = _expected_slope(p, kind)
    tol = KIND_TOLERANCE[kind] if args.tolerance is None else args.tolerance
    run.emit_summary({
        "kind": kind,
        "slope": fit.slope,
        "expected_exponent": expected,
        "tolerance": tol,
        "tolerance_pass": abs(fit.slope - expected) <= tol,
        "intercept": fit.intercept,
        "residual_rms": fit.residual_rms,
        "n_points": fit.n_points,
    })
    run.close()
    return EXIT_OK


def _read_curve(path: str, xcol: Optional[str], ycol: Optional[str]):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DomainError(f"{path} has no data rows")
    header = rows[0]
    try:
        ix = header.index(xcol) if xcol else 0
        iy = header.index(ycol) if ycol else 1
    except ValueError:
        raise DomainError(f"column not found in header {header}")
    try:
        x = [float(r[ix]) for r in rows[1:] if r]
        y = [float(r[iy]) for r in rows[1:] if r]
    except (ValueError, IndexError):
        raise DomainError(f"{path}: non-numeric data (is the header row missing?)")
    return np.array(x), np.array(y)


def cmd_fit(args, argv):
    x, y = _read_curve(args.csv, args.x_col, args.y_col)
    order = np.argsort(x)
    fit = fit_exponent(IncrementCurve(x[order], y[order], args.kind), _window(args.window))
    run = _Run(args, argv)
    run.emit(json.dumps(fit._asdict()) + "\n")
    run.close()
    return EXIT_OK


def cmd_lfd(args, argv):
    p = _params(args)
    order = HolderOrder.for_params(p, args.q)
    res = caputo_h_limit(p, order, args.s, args.delta0, args.levels)
    run = _Run(args, argv)
    run.emit(_csv_text(["t_minus_s", "caputo_value"], res.samples))
    first = res.samples[0][1]
    run.emit_summary({"q": order.q, "n": order.n, "rho": order.rho, "status": res.status,
                      "limit": res.value, "spread": res.error,
                      "ratio_to_first": abs(res.value) / abs(first) if first else math.inf})
    run.close()
    return EXIT_OK


def _test_function(args, s: float, hi: float) -> RealFunction:
    c = args.c
    if args.func == "power":
        if args.p is None:
            raise DomainError("--p is required for the power family")
        return power_function(args.p, s, hi, c)
    if args.func == "const":
        return power_function(0.0, s, hi, c)
    if args.func == "exp":
        return RealFunction(lambda y: np.exp(c * (y - s)), s, hi, 10**6,
                            lambda y, k: c**k * np.exp(c * (y - s)), lambda u: np.exp(c * u))
    a, b, lam = args.ml_alpha, args.ml_beta, args.lam
    if a is None or b is None or lam is None:
        raise DomainError("--ml-alpha, --ml-beta and --lam are required for the ml family")
    if lam > 0:
        raise DomainError("the ml family needs lam <= 0")

    def value(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return u ** (b - 1) * mittag_leffler(a, b, -lam * u**a)

    return RealFunction(lambda y: value(np.asarray(y) - s), s, hi, 0, None, value)


def cmd_fracop(args, argv):
    s = args.s
    run = _Run(args, argv)
    if args.op == "lfd":
        hi = args.hi if args.hi is not None else s + 1.0
        f = _test_function(args, s, hi)
        res = local_frac_derivative(f, args.q, s)
        run.emit(_csv_text(["s", "status", "value"], [(s, res.status, res.value)]))
        run.close()
        return EXIT_OK
    ts = _grid(args.t, args.t_range)
    hi = args.hi if args.hi is not None else float(np.max(ts))
    f = _test_function(args, s, hi)
    ops = {
        "rl-integral": lambda t: rl_integral(f, args.q, s, t),
        "rl-derivative": lambda t: rl_derivative(f, args.q, s, t),
        "caputo": lambda t: caputo_derivative(f, args.q, s, t),
        "remainder": lambda t: fractional_taylor_remainder(f, args.q, s, t),
    }
    run.emit(_csv_text(["t", "value"], [(t, ops[args.op](t)) for t in ts]))
    run.close()
    return EXIT_OK


def _analysis_lags(cfg: SimConfig, analysis: dict, key: str, limit: int):
    lags = analysis.get(key)
    if lags is None:
        lags = [h for h in (1, 2, 4, 8, 16) if h < limit]
    return [int(h) for h in lags]


def cmd_simulate(args, argv):
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config {args.config}: {exc}")
    cfg = SimConfig.from_dict(raw)
    os.makedirs(args.out_dir, exist_ok=True)
    run = _Run(args, argv, digest=cfg.digest(), seed=cfg.seed)
    fld = simulate(cfg)
    path = os.path.join(args.out_dir, "field.bin")
    side = fld.write(path)
    run.manifest.outputs += [path, side]

    analysis = raw.get("analysis", {})
    inc_rows, fit_rows = [], []
    specs = (("time", _analysis_lags(cfg, analysis, "time_lags", cfg.nt // 2)),
             ("space", _analysis_lags(cfg, analysis, "space_lags", cfg.nx)))
    for direction, lags in specs:
        est = empirical_holder(fld, direction, lags)
        inc_rows += [(direction, h, v) for h, v in zip(est.curve.lags, est.curve.values)]
        fit_rows.append((direction, est.exponent, est.fit.slope, est.fit.intercept,
                         est.fit.residual_rms, est.fit.n_points,
                         "true" if est.beyond_resolvable else "false"))
    run.write_file(os.path.join(args.out_dir, "increments.csv"),
                   _csv_text(["direction", "lag", "mean_sq_increment"], inc_rows))
    run.write_file(os.path.join(args.out_dir, "fits.csv"),
                   _csv_text(["direction", "exponent", "slope", "intercept", "residual_rms",
                              "n_points", "beyond_resolvable"], fit_rows))
    run.close(os.path.join(args.out_dir, "manifest.json"))
    sys.stdout.write(json.dumps({"field_digest": fld.digest(), "config_digest": cfg.digest()}) + "\n")
    return EXIT_OK


def cmd_verify(args, argv):
    checks = run_suite(args.suite, args.tol_profile, args.inject_perturbation)
    rep = {"suite": args.suite, "tol_profile": args.tol_profile,
           "perturbation": args.inject_perturbation, **report(checks)}
    run = _Run(args, argv)
    run.emit(json.dumps(rep, indent=2) + "\n")
    run.close()
    return EXIT_OK if rep["passed"] else EXIT_ACCURACY


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DomainError(message)


def _model_flags(p, with_nu=True):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    if with_nu:
        p.add_argument("--nu", type=float, required=True)
    else:
        p.add_argument("--nu", type=float, default=1.0, help="does not affect the exponents")
    p.add_argument("--d", type=int, required=True)


def _points(p, name):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument(f"--{name}", type=float, nargs="+")
    g.add_argument(f"--{name}-range", type=float, nargs=3, metavar=("LO", "HI", "N"))


def _out(p):
    p.add_argument("--out", help="output file (default: stdout); a manifest is written beside it")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="fracholder", description=__doc__.split("\n")[0])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ml", help="Mittag-Leffler E_{beta,zeta}(-x)")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    _points(p, "x")
    p.add_argument("--log", action="store_true", help="geometric spacing for --x-range")
    _out(p)
    p.set_defaults(handler=cmd_ml)

    p = sub.add_parser("kernel", help="fundamental solution Y(t, x)")
    _model_flags(p)
    p.add_argument("--t", type=float, required=True)
    _points(p, "x")
    p.add_argument("--log", action="store_true")
    _out(p)
    p.set_defaults(handler=cmd_kernel)

    p = sub.add_parser("constants", help="Plancherel constants C and C*")
    _model_flags(p)
    p.add_argument("--gamma1", type=float)
    p.add_argument("--gamma2", type=float)
    _out(p)
    p.set_defaults(handler=cmd_constants)

    p = sub.add_parser("exponents", help="rho, theta and the Hölder exponents")
    _model_flags(p, with_nu=False)
    _out(p)
    p.set_defaults(handler=cmd_exponents)

    p = sub.add_parser("increments", help="second-moment increment curves")
    _model_flags(p)
    p.add_argument("--kind", choices=("time", "space", "tail"), required=True)
    p.add_argument("--s", type=float, help="base time for time and tail increments")
    p.add_argument("--t", type=float, help="time for space increments")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lags", type=float, nargs="+")
    g.add_argument("--lag-range", type=float, nargs=3, metavar=("LO", "HI", "N"),
                   default=(1e-4, 1e-1, 12), help="geometric lags, relative to s for time and tail")
    p.add_argument("--method", choices=("direct", "identity"), default="direct")
    p.add_argument("--window", help="fit window as start:stop (default drops the 2 largest lags)")
    p.add_argument("--tolerance", type=float)
    _out(p)
    p.set_defaults(handler=cmd_increments)

    p = sub.add_parser("fit", help="log-log slope of a CSV curve")
    p.add_argument("--csv", required=True)
    p.add_argument("--window", help="rows to fit as start:stop (default: all)")
    p.add_argument("--x-col")
    p.add_argument("--y-col")
    p.add_argument("--kind", choices=("time", "space", "tail"), default="time")
    _out(p)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("lfd", help="Caputo derivative of h_s near s and its limit")
    _model_flags(p)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--delta0", type=float)
    p.add_argument("--levels", type=int, default=7)
    _out(p)
    p.set_defaults(handler=cmd_lfd)

    p = sub.add_parser("fracop", help="fractional operators on test functions")
    p.add_argument("--op", choices=("rl-integral", "rl-derivative", "caputo", "lfd", "remainder"),
                   required=True)
    p.add_argument("--func", choices=("power", "exp", "const", "ml"), required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=float, nargs="+")
    g.add_argument("--t-range", type=float, nargs=3, metavar=("LO", "HI", "N"))
    p.add_argument("--hi", type=float, help="right end of the function's domain")
    p.add_argument("--p", type=float, help="power for the power family")
    p.add_argument("--c", type=float, default=1.0, help="coefficient, or rate for exp")
    p.add_argument("--ml-alpha", type=float)
    p.add_argument("--ml-beta", type=float)
    p.add_argument("--lam", type=float)
    _out(p)
    p.set_defaults(handler=cmd_fracop)

    p = sub.add_parser("simulate", help="Monte Carlo simulation from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("--suite", choices=SUITES + ("all",), required=True)
    p.add_argument("--tol-profile", choices=tuple(PROFILES), default="default")
    p.add_argument("--inject-perturbation", type=float, default=0.0, help=argparse.SUPPRESS)
    _out(p)
    p.set_defaults(handler=cmd_verify)
    return top


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        if args.handler is cmd_fracop and args.op != "lfd" and args.t is None and args.t_range is None:
            raise DomainError("--t or --t-range is required")
        return args.handler(args, argv)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except OSError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

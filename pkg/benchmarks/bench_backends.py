"""Compare the compiled core with the pure-Python kernels.

    python3 benchmarks/bench_backends.py [--repeat N]

Times Mittag-Leffler evaluation on each branch (series, contour,
asymptotic) and the convolution history sum used by the multiplicative
noise stepper, and checks that both backends return the same numbers.
"""
import argparse
import timeit

import numpy as np

from fracholder import _mlpy

try:
    from fracholder import _core
except ImportError:
    _core = None


def ml_cases():
    # x = R**beta picks the branch through R
    for name, radius in (("series", (0.1, 5.0)), ("contour", (7.0, 30.0)), ("asymptotic", (40.0, 400.0))):
        for beta, zeta in ((0.6, 1.1), (1.5, 1.7)):
            x = np.linspace(*radius, 2000) ** beta
            yield f"ml_neg {name:10s} beta={beta}", lambda m, b=beta, z=zeta, x=x: m.ml_neg(b, z, x)


def history_cases(rng):
    for nt, nk in ((512, 129), (2048, 257)):
        kern = rng.normal(size=(nt, nk)) + 1j * rng.normal(size=(nt, nk))
        forcing = rng.normal(size=(nt, nk)) + 1j * rng.normal(size=(nt, nk))
        out = np.zeros(nk, complex)
        steps = range(0, nt, nt // 16)

        def run(m, kern=kern, forcing=forcing, out=out, steps=steps):
            for n in steps:
                m.history_sum(kern, forcing, n, out)
            return out.copy()

        yield f"history_sum nt={nt} nk={nk}", run


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not available; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'case':40s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s} {'max diff':>10s}")
    for label, fn in list(ml_cases()) + list(history_cases(rng)):
        ref, got = fn(_mlpy), fn(_core)
        diff = float(np.max(np.abs(np.asarray(ref) - np.asarray(got))))
        tp = best(lambda: fn(_mlpy), args.repeat)
        tc = best(lambda: fn(_core), args.repeat)
        print(f"{label:40s} {1e3 * tp:10.2f} {1e3 * tc:12.2f} {tp / tc:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()

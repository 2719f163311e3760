"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both backends; the table reports the
best wall time and the largest absolute difference between the two outputs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from diracgap.kernels import available_backends
from diracgap.measure import ChargeMeasure


def _inputs():
    pot = (ChargeMeasure.shell(0.4, 1.0) + ChargeMeasure.ball(0.4, 0.5)).radial_potential()
    edges, coeffs = np.asarray(pot.edges, float), np.asarray(pot.coeffs, float)
    r = np.geomspace(1e-4, 50.0, 200_000)
    rng = np.random.default_rng(0)
    n_int, order, nq = 200, 6, 8
    u = rng.standard_normal((n_int, nq, order))
    v = rng.standard_normal((n_int, nq, order))
    w = rng.random((n_int, nq))
    y0 = np.array([1.0, -0.1])
    return {
        "laurent_eval": (edges, coeffs, r),
        "band_gram": (u, v, w),
        "dirac_shoot": (np.log(1e-6), np.log(40.0), y0, -1.0, 0.75, edges, coeffs, np.inf, 1e-12),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = available_backends()
    inputs = _inputs()
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}{'max diff':>12}")
    for kernel, call_args in inputs.items():
        times, outs = {}, {}
        for name, mod in backends.items():
            fn = getattr(mod, kernel)
            outs[name] = np.asarray(fn(*call_args))
            n = 1 if kernel == "dirac_shoot" and name == "python" else args.repeat
            times[name] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=n))
        diff = max(float(np.max(np.abs(o - outs["python"]))) for o in outs.values())
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{kernel:<14}" + "".join(f"{times[n]:>11.4f}s" for n in backends) + f"{speed:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()

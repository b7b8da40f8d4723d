"""Compare the compiled stepping kernel against the numpy fallback.

Usage: python3 benchmarks/bench_integrator.py [--sizes 100,400,1000] [--t-end 10]

Runs the same scenario through both backends (the compiled one must be
built) and reports wall time per integration plus the relative speedup.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from graphon_sir import _stepper_py, sampling, sir
from graphon_sir import graphon as G


def scenario(n: int, t_end: float):
    a = sampling.bernoulli_random(G.SmallWorld(0.1, 0.3), n, seed=17)
    coeff = sampling.coefficient_averages(1.5, 1 / 7, n)
    i0 = np.zeros(n)
    i0[0] = 1e-4
    init = sir.SirState(1.0 - i0, i0, np.zeros(n))
    spec = sir.IntegratorSpec("dopri8", dt=0.05, t_end=t_end, thin=10)
    return spec, a, coeff, init


def run_backend(kernel, spec, a, coeff, init, repeats: int) -> tuple[float, float]:
    saved = sir._kernel
    sir._kernel = kernel
    try:
        best = float("inf")
        final = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            traj = sir.integrate(spec, "standard", a, coeff, init)
            best = min(best, time.perf_counter() - t0)
            final = traj.i[-1].sum()
        return best, float(final)
    finally:
        sir._kernel = saved


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100,400,1000")
    parser.add_argument("--t-end", type=float, default=10.0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    try:
        from graphon_sir import _stepper
    except ImportError:
        raise SystemExit("compiled kernel not built; run pip install -e . first")

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>6} {'compiled [ms]':>14} {'python [ms]':>12} {'speedup':>8}  agreement")
    for n in sizes:
        spec, a, coeff, init = scenario(n, args.t_end)
        t_c, f_c = run_backend(_stepper, spec, a, coeff, init, args.repeats)
        t_p, f_p = run_backend(_stepper_py, spec, a, coeff, init, args.repeats)
        agree = abs(f_c - f_p) / max(abs(f_c), 1e-30)
        print(
            f"{n:>6} {1e3 * t_c:>14.2f} {1e3 * t_p:>12.2f} {t_p / t_c:>8.2f}x"
            f"  rel diff {agree:.2e}"
        )


if __name__ == "__main__":
    main()

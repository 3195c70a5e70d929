"""Compare the compiled and pure-Python iteration kernels.

    python benchmarks/bench_kernels.py [--T 20000] [--repeat 3]

Times a long two-region simulation and a small sweep on each backend and
checks that both produce bit-identical tails.
"""
import argparse
import time
from dataclasses import replace

import numpy as np

from ddmetapop import DispersalFunction, DispersalMatrix, GrowthMap, build_model, simulate
from ddmetapop._kernels import _fast
from ddmetapop.scenario import load_bundled
from ddmetapop.sweep import SweepSpec, run_sweep


def two_region(a1=90.0, a2=0.14):
    R, S = ((0.2, 0.6), (0.7, 0.3)), ((10, 3), (12, 6))
    D = DispersalMatrix([[DispersalFunction.richards(R[i][j], 0.5, S[i][j]) for j in range(2)]
                         for i in range(2)])
    return build_model([GrowthMap.ricker(a1, 0.04), GrowthMap.hassell(a2, 0.01)], D)


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--T", type=int, default=20_000, help="steps per simulation")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--grid", type=int, default=6, help="sweep resolution per axis")
    args = p.parse_args()

    if _fast is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    model = two_region()
    results = {}
    for backend in ("compiled", "python"):
        t, tr = best_of(lambda: simulate(model, [131, 19], args.T, args.T // 2, 100, backend=backend),
                        args.repeat)
        results[backend] = (t, tr)
        print(f"simulate  {backend:8s} T={args.T:<7d} {t * 1e3:9.2f} ms  "
              f"{t / args.T * 1e9:8.1f} ns/step")
    same = np.array_equal(results["compiled"][1].states, results["python"][1].states)
    print(f"speedup   {results['python'][0] / results['compiled'][0]:.1f}x  (tails identical: {same})")

    sc = load_bundled("fig8_grid")
    spec = SweepSpec(sc, tuple(replace(a, resolution=args.grid) for a in sc.sweep.axes),
                     replace(sc.sweep.sim, T=args.T, burn_in=args.T - 1000))
    sweeps = {}
    for backend in ("compiled", "python"):
        t, res = best_of(lambda: run_sweep(spec, threads=1, backend=backend), 1)
        sweeps[backend] = (t, res)
        print(f"sweep     {backend:8s} {args.grid}x{args.grid} cells {t:9.2f} s")
    same = sweeps["compiled"][1].to_csv() == sweeps["python"][1].to_csv()
    print(f"speedup   {sweeps['python'][0] / sweeps['compiled'][0]:.1f}x  (tables identical: {same})")


if __name__ == "__main__":
    main()

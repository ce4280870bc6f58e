"""Time the renormalized chain sum on a sector grid, compiled vs numpy.

    python benchmarks/bench_chain_sum.py --points 2000 --repeat 3
"""

import argparse
import time

import numpy as np

from landau_order import _kernels_py, kernels


def run(impl, r, z, args):
    best = float("inf")
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        out = impl.chain_sum(r, z, args.period, 1.0, 1.0, 0.5, args.period / 2,
                             0.0, args.tol, 1 << 20)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=2000, help="grid nodes to evaluate")
    p.add_argument("--period", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    r = np.ascontiguousarray(rng.uniform(0.05, 10.0, args.points))
    z = np.ascontiguousarray(rng.uniform(0.0, args.period, args.points))

    t_py, v_py = run(_kernels_py, r, z, args)
    print(f"numpy   {t_py * 1e3:9.1f} ms  ({args.points / t_py:,.0f} nodes/s)")
    if kernels.compiled_impl is None:
        print("cython  not built")
        return
    t_c, v_c = run(kernels.compiled_impl, r, z, args)
    print(f"cython  {t_c * 1e3:9.1f} ms  ({args.points / t_c:,.0f} nodes/s)")
    print(f"speedup {t_py / t_c:.1f}x, max |diff| {np.max(np.abs(v_c - v_py)):.1e}")


if __name__ == "__main__":
    main()

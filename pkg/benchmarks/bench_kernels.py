"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from pparabolic.certifier.algebra import thm11_params
from pparabolic.certifier.certify import _stack, condition_polys
from pparabolic.kernels import MODE_INTERVAL, MODE_LIPSCHITZ, backend_module
from pparabolic.params import WeightRecipe


def cases():
    polys = []
    for p, g in [(3.0, 0.0), (20.0, 0.5), (40.0, -0.95)]:
        polys.append(_stack(condition_polys(WeightRecipe.thm11(p, g), thm11_params(p, g))))
    x = np.linspace(0.0, np.pi, 129)
    u = np.ascontiguousarray(np.sin(x)[:, None] * np.sin(x)[None, :])
    h = float(x[1] - x[0])

    def sweep_lip(mod):
        for lo, hi in polys:
            mod.sweep(lo, hi, 1e-4, 40, MODE_LIPSCHITZ)

    def sweep_int(mod):
        for lo, hi in polys:
            mod.sweep(lo, hi, 1e-4, 40, MODE_INTERVAL)

    def rhs(mod):
        mod.monotone_rhs(u, h, h, 4.0, -0.5, 1e-3)

    return {"sweep (lipschitz, 3 points)": sweep_lip, "sweep (interval, 3 points)": sweep_int,
            "monotone_rhs (129^2)": rhs}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py = backend_module("python")
    try:
        cy = backend_module("compiled")
    except ImportError:
        cy = None
        print("compiled backend not built; timing the fallback only")
    print(f"{'kernel':32s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, fn in cases().items():
        n = 1 if name.startswith("monotone") else 3
        t_py = min(timeit.repeat(lambda: fn(py), number=n, repeat=args.repeat)) / n * 1e3
        if cy is None:
            print(f"{name:32s} {t_py:12.3f} {'-':>14s} {'-':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=n, repeat=args.repeat)) / n * 1e3
        print(f"{name:32s} {t_py:12.3f} {t_cy:14.3f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()

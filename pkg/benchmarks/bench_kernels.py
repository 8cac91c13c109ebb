"""Compare the compiled and pure-Python integration kernels.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Runs the same fixed-step and adaptive integrations through both kernels,
checks they agree, and reports time per step and the speedup.
"""

import argparse
import time

import numpy as np

from ecogame import _kernels_py
from ecogame.dynamics import _clamp_bounds, kernel_params
from ecogame.model import reference_config

try:
    from ecogame import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _run(mod, method, steps):
    cfg = reference_config()
    y0 = [0.3, 0.6, 0.4]
    lo, hi = _clamp_bounds(y0)
    p = kernel_params(cfg)
    # convergence eps of 0 disables early exit so every run takes ``steps`` steps
    if method == "rk4":
        return mod.integrate_rk4(p, y0, lo, hi, 0.01, steps * 0.01, 0.0, 10.0, 100)
    return mod.integrate_dopri(p, y0, lo, hi, 1e-10, 1e-12, 0.01, 0.05, steps * 0.01, 0.0, 10.0, 100)


def _best(mod, method, steps, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = _run(mod, method, steps)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels_c is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")

    print(f"{'method':<8}{'backend':<10}{'steps':>10}{'ns/step':>12}{'speedup':>10}")
    for method in ("rk4", "dopri"):
        tc, oc = _best(_kernels_c, method, args.steps, args.repeat)
        tp, op = _best(_kernels_py, method, args.steps, 1)
        assert oc[4] == op[4], "kernels took different step counts"
        assert np.allclose(oc[1], op[1], rtol=1e-10, atol=1e-14), "kernels disagree"
        n = oc[4]
        print(f"{method:<8}{'cython':<10}{n:>10}{tc / n * 1e9:>12.1f}{'':>10}")
        print(f"{method:<8}{'python':<10}{n:>10}{tp / n * 1e9:>12.1f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()

"""Benchmark: compiled extension core vs pure-numpy fallback on the hot paths.

Run as `python benchmarks/bench_backends.py`.  The two backends implement the
same operations (profile evaluation and the fused collision quadratures); the
numbers here justify shipping the extension.
"""

import math
import time

import numpy as np

from boltzcf import _fast, charfn, kernel
from boltzcf._fast import pure_backend
from boltzcf.quad import reduced_fixed_rule

try:
    from boltzcf._fast import _core as compiled_backend
except ImportError:
    compiled_backend = None


def _time(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    grid = charfn.RadialGrid()
    phi = charfn.cf_mix(
        0.4, charfn.make_gaussian(0.8, grid), charfn.make_stable(1.5, grid)
    )
    data = phi.interp_data()
    xs = grid.positive_nodes
    pts = np.geomspace(2e-7, 39.9, 200_000)

    backends = [("pure", pure_backend())]
    if compiled_backend is not None:
        backends.append(("compiled", compiled_backend))
    print(f"active backend: {_fast.BACKEND}")
    print(f"{'operation':<34}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'ratio':>9}")

    rows = [("eval_profile (200k pts)", lambda b: b.eval_profile(data, pts))]
    for n in (128, 256, 512):
        s, sc, w = reduced_fixed_rule(kernel.constant_kernel(1 / (4 * math.pi)), 0.5, 0.5, n)
        rows.append(
            (
                f"collision_bracket ({s.size} nodes)",
                lambda b, s=s, sc=sc, w=w: b.collision_bracket(data, s, sc, w, xs),
            )
        )
        rows.append(
            (
                f"gain_bilinear ({s.size} nodes)",
                lambda b, s=s, sc=sc, w=w: b.gain_bilinear(data, data, s, sc, w, xs),
            )
        )

    for label, op in rows:
        times = [_time(lambda b=b: op(b), 5) for _, b in backends]
        ratio = times[0] / times[-1] if len(times) > 1 else 1.0
        cells = "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        print(f"{label:<34}{cells}{ratio:>8.1f}x")

    if compiled_backend is not None:
        s, sc, w = reduced_fixed_rule(kernel.constant_kernel(1 / (4 * math.pi)), 0.5, 0.5, 256)
        a = pure_backend().collision_bracket(data, s, sc, w, xs)
        b = compiled_backend.collision_bracket(data, s, sc, w, xs)
        print(f"backend agreement (sup): {np.max(np.abs(a - b)):.3e}")


if __name__ == "__main__":
    main()

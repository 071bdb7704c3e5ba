"""Time the compiled kernels against the pure-numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is called on
identical inputs by both backends; the table lists the best of several
repeats and the speedup of the compiled version.
"""
import timeit

import numpy as np

from nicf import _kernels_py
from nicf.chebyshev import barycentric_weights, cgl_nodes

try:
    from nicf import _kernels as _kernels_cy
except ImportError:  # pragma: no cover
    _kernels_cy = None


def _cases():
    rng = np.random.default_rng(0)
    x = rng.uniform(0.0, 0.5, 1_000_000)
    nodes = cgl_nodes(0.0, 0.5, 64)
    bw = barycentric_weights(64)
    values = np.cos(7 * nodes)
    grid = np.linspace(0.0, 0.5, 100_000)
    points = rng.uniform(0.0, 0.5, (2000, 65))
    weights = rng.uniform(0.0, 1.0, (2000, 65))
    return {
        "map_step folded 1e6": lambda k: k.map_step(0, x),
        "iterate_map folded 1e6 x 10": lambda k: k.iterate_map(0, x, 10),
        "iterate_map hurwitz 1e6 x 10": lambda k: k.iterate_map(4, x, 10),
        "barycentric_eval 1e5 pts deg 64": lambda k: k.barycentric_eval(nodes, bw, values, grid),
        "accumulate_branches 2000 x 65": lambda k: k.accumulate_branches(
            nodes, bw, points, weights, np.zeros((65, 65))),
    }


def main(repeat: int = 5) -> None:
    print(f"{'kernel':34s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, call in _cases().items():
        t_py = min(timeit.repeat(lambda: call(_kernels_py), number=1, repeat=repeat))
        if _kernels_cy is None:
            print(f"{name:34s} {1e3 * t_py:12.2f} {'n/a':>12s} {'n/a':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: call(_kernels_cy), number=1, repeat=repeat))
        print(f"{name:34s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the numba and numpy backends on the two hot kernels.

Run from the repository root:

    PYTHONPATH=src python benchmarks/bench_kernels.py
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from vvcantor import (DIRICHLET, MonteCarloNeckEvaluator, Xoshiro256StarStar,
                      _kernels, assemble, build_tree, decompose,
                      inertia_counts, refine_uniform, stream_seed)
from vvcantor.catalog import Catalog, ContractionMap, WeightedIFS


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    leb = Catalog(0.0, 1.0, (
        WeightedIFS((ContractionMap(0.5, 0.0), ContractionMap(0.5, 0.5)),
                    (0.5, 0.5)),
    ), (1.0,))
    two = Catalog(0.0, 1.0, (
        WeightedIFS((ContractionMap(1 / 3, 0.0), ContractionMap(1 / 3, 2 / 3)),
                    (0.5, 0.5)),
        WeightedIFS((ContractionMap(0.2, 0.0), ContractionMap(0.2, 0.4),
                     ContractionMap(0.2, 0.8)), (1 / 3, 1 / 3, 1 / 3)),
    ), (0.5, 0.5))

    rng = Xoshiro256StarStar(stream_seed(1, 0))
    dec = refine_uniform(decompose(build_tree(leb, 1, 0, rng=rng), 0), 16384)
    pencil = assemble(dec, DIRICHLET)
    xs = np.geomspace(1.0, 1e8, 400)

    evaluator = MonteCarloNeckEvaluator(two, 2, 20_000, master_seed=3)

    backends = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])
    print(f"pencil dim {pencil.dim}, {xs.size} shifts; "
          f"{evaluator.blocks} blocks, mean first neck "
          f"{evaluator.neck_waits.mean():.1f}")
    print(f"{'backend':8} {'sturm_counts':>14} {'block_log_sums':>16}")
    results = {}
    for backend in backends:
        _kernels.set_backend(backend)
        inertia_counts(pencil, xs[:2])          # warm up / jit compile
        evaluator.log_sums(0.4)
        t_sturm, counts = timeit(lambda: inertia_counts(pencil, xs))
        t_dp, sums = timeit(lambda: evaluator.log_sums(0.4))
        results[backend] = (counts, sums)
        print(f"{backend:8} {t_sturm * 1e3:12.2f}ms {t_dp * 1e3:14.2f}ms")
    if len(backends) == 2:
        c_np, s_np = results["numpy"]
        c_nb, s_nb = results["numba"]
        print(f"counts identical: {np.array_equal(c_np, c_nb)}")
        print(f"log-sum max |delta|: {np.abs(s_np - s_nb).max():.3e}")


if __name__ == "__main__":
    main()

"""Timing comparison of the compiled and pure-Python sweep kernels."""

from __future__ import annotations

import time
import warnings

from . import kernels
from .aggregation import kmeans_partition, uniform_boundary_disaggregation
from .mdp import random_mdp
from .simulator import build_run_config, results_identical, run_distributed_vi
from .traffic import build_routing_mdp, load_bundled_city, sample_speeds


def _best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases():
    net = load_bundled_city()
    city = build_routing_mdp(net, sample_speeds(net, 0), 0.9)
    part = kmeans_partition(net.xy, 5, seed=0)
    yield "city n=300 q=5", city, part
    dense = random_mdp(400, 4, 7, max_successors=20)
    yield "random n=400 q=8", dense, kmeans_partition(
        [(i % 20, i // 20) for i in range(dense.n)], 8, seed=0
    )


def run_benchmark(repeat=3):
    """Yield one report line per case; both backends must agree bit for bit."""
    try:
        kernels.get_backend("cython")
    except ImportError:
        yield "compiled kernels not built; only the pure-Python backend is available"
        return
    for name, mdp, part in _cases():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            disagg = uniform_boundary_disaggregation(mdp, part)
        config = build_run_config(part.q, c_threshold=0.1, tolerance=1e-8)
        times = {}
        results = {}
        for backend in ("cython", "python"):
            times[backend], results[backend] = _best_of(
                lambda: run_distributed_vi(mdp, part, disagg, config, backend=backend), repeat
            )
        same = results_identical(results["cython"], results["python"])
        yield (
            f"{name:20s} iters={results['cython'].iterations:4d}  "
            f"cython={times['cython'] * 1e3:8.2f} ms  python={times['python'] * 1e3:9.2f} ms  "
            f"speedup={times['python'] / times['cython']:6.1f}x  identical={same}"
        )

"""End-to-end traffic experiments shared by the CLI and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import kmeans_partition, uniform_boundary_disaggregation
from .mdp import value_iteration
from .metrics import ErrorSummary, normalized_errors
from .simulator import RunResult, build_run_config, run_distributed_vi
from .traffic import build_routing_mdp, sample_speeds

ORACLE_TOL = 1e-10


@dataclass
class TrafficRun:
    seed: int
    mdp: object
    speeds: object
    partition: object
    disagg: object
    J_star: np.ndarray
    result: RunResult
    errors: ErrorSummary


def traffic_run(net, q, seed, *, alpha=0.9, c_threshold=0.1, tolerance=1e-8, B=0,
                schedule="complete", max_iters=100_000, record_history=False, workers=1,
                kmeans_iters=100):
    """Sample speeds, partition with k-means, run both solvers, score the result.

    ``seed`` drives both the speed sample and the k-means initialization.
    """
    speeds = sample_speeds(net, seed)
    mdp = build_routing_mdp(net, speeds, alpha)
    partition = kmeans_partition(net.xy, q, seed=seed, max_iters=kmeans_iters)
    disagg = uniform_boundary_disaggregation(mdp, partition)
    J_star, _ = value_iteration(mdp, tol=ORACLE_TOL)
    config = build_run_config(
        q, c_threshold=c_threshold, tolerance=tolerance, max_iters=max_iters,
        schedule=schedule, B=B, record_history=record_history,
    )
    result = run_distributed_vi(mdp, partition, disagg, config, workers=workers)
    return TrafficRun(seed, mdp, speeds, partition, disagg, J_star, result,
                      normalized_errors(result, J_star))


@dataclass
class SweepRow:
    q: int
    mean_avg_error: float
    std_avg_error: float
    mean_max_error: float
    runs: int
    failures: int
    mean_iterations: float
    mean_messages: float


def sweep_agents(net, q_list, seeds, **kwargs):
    """Seed-averaged normalized errors for each agent count.

    A failing run (exception or non-convergence) is counted in
    ``failures`` and left out of the averages; the sweep continues.
    """
    rows = []
    for q in q_list:
        avg, mx, iters, msgs = [], [], [], []
        failures = 0
        for seed in seeds:
            try:
                run = traffic_run(net, q, seed, **kwargs)
            except (ValueError, RuntimeError):
                failures += 1
                continue
            if not run.result.converged:
                failures += 1
                continue
            avg.append(run.errors.avg)
            mx.append(run.errors.max)
            iters.append(run.result.iterations)
            msgs.append(run.result.messages_sent)
        ok = len(avg)
        rows.append(SweepRow(
            q=q,
            mean_avg_error=float(np.mean(avg)) if ok else float("nan"),
            std_avg_error=float(np.std(avg)) if ok else float("nan"),
            mean_max_error=float(np.mean(mx)) if ok else float("nan"),
            runs=ok,
            failures=failures,
            mean_iterations=float(np.mean(iters)) if ok else float("nan"),
            mean_messages=float(np.mean(msgs)) if ok else float("nan"),
        ))
    return rows

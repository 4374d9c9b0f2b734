"""Convergence instrumentation, the aggregation error bound, and error metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ZERO_VALUE_TOL = 1e-12


class ErrorSummary(NamedTuple):
    avg: float
    max: float
    excluded: int


class BoundCheck(NamedTuple):
    holds: bool
    worst_violation: float
    bound: float
    delta: float


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration increments of a recorded run.

    Index ``k`` refers to the step from iteration ``k`` to ``k + 1``.
    ``delta[k][l]`` holds ``V_l^{k+1} - V_l^k`` per local state and
    ``eps[k]`` the ``(q, q)`` matrix ``r^{k+1} - r^k``. The windowed
    maxima sum the last ``B + 1`` increments and are NaN for ``k < B``.
    """

    B: int
    delta: list
    delta_bar: np.ndarray
    eps: np.ndarray
    eps_inf: np.ndarray
    delta_bar_window: np.ndarray
    eps_window: np.ndarray

    @property
    def steps(self):
        return self.delta_bar.shape[0]

    def combined(self):
        """``max(delta_bar_window, eps_window)`` for ``k >= B``."""
        return np.maximum(self.delta_bar_window, self.eps_window)[self.B :]

    def contraction_violations(self, alpha, atol=1e-9):
        """Indices ``k`` (relative to ``B``) where ``s_k > alpha * s_{k-1} + atol``."""
        s = self.combined()
        return np.flatnonzero(s[1:] > alpha * s[:-1] + atol) + 1


def _window_sum(x, B):
    # x: (K, q) nonnegative; out[k] = max_l sum_{n=k-B}^{k} x[n, l]
    K = x.shape[0]
    out = np.full(K, np.nan)
    if K == 0:
        return out
    c = np.vstack([np.zeros((1, x.shape[1])), np.cumsum(x, axis=0)])
    for k in range(B, K):
        out[k] = float(np.max(c[k + 1] - c[k - B]))
    return out


def trace_from_history(result, B=None):
    """Rebuild the convergence quantities from a recorded run."""
    h = result.history
    if h is None or not h.r:
        raise ValueError("result carries no history; rerun with record_history=True")
    B = result.schedule.B if B is None else int(B)
    if B < 0:
        raise ValueError("B must be nonnegative")
    return trace_from_snapshots(h.r_array(), h.V, B)


def trace_from_snapshots(r, V, B):
    """Same as :func:`trace_from_history` on raw snapshot lists.

    ``r`` has shape ``(K + 1, q, q)``; ``V[k]`` is a list of per-agent
    local value arrays.
    """
    r = np.asarray(r, dtype=np.float64)
    K = r.shape[0] - 1
    if len(V) != K + 1:
        raise ValueError("need one V snapshot per r snapshot")
    q = r.shape[1]
    delta = [[V[k + 1][l] - V[k][l] for l in range(q)] for k in range(K)]
    delta_bar = np.array(
        [[float(np.max(np.abs(d))) if d.size else 0.0 for d in row] for row in delta]
    ).reshape(K, q)
    eps = np.diff(r, axis=0)
    eps_inf = np.abs(eps).max(axis=2) if K else np.zeros((0, q))
    return IterationTrace(
        B=B,
        delta=delta,
        delta_bar=delta_bar,
        eps=eps,
        eps_inf=eps_inf,
        delta_bar_window=_window_sum(delta_bar, B),
        eps_window=_window_sum(eps_inf, B),
    )


def intra_partition_spread(J_star, partition):
    """Largest spread ``max J* - min J*`` inside any single partition."""
    J = np.asarray(J_star, dtype=np.float64)
    if J.shape != (partition.n,):
        raise ValueError("value function does not match the partition")
    return max(float(J[s].max() - J[s].min()) for s in partition.sets)


def error_bound(alpha, delta):
    return alpha * delta / (1.0 - alpha)


def check_error_bound(result, J_star, partition=None, alpha=None, slack=None):
    """Check ``|V_l(i) - J*(i)| <= alpha * delta / (1 - alpha) + slack``.

    Only meaningful for runs where all agents talk every round, so runs
    with ``B > 0`` are refused. ``slack`` defaults to ten times the run
    tolerance. ``worst_violation`` is the largest excess over the bound
    (negative when every state has margin).
    """
    if result.schedule.B != 0:
        raise ValueError("the error bound is only established for B = 0 runs")
    partition = result.partition if partition is None else partition
    alpha = result.alpha if alpha is None else alpha
    slack = 10.0 * result.config.tolerance if slack is None else slack
    J = np.asarray(J_star, dtype=np.float64)
    delta = intra_partition_spread(J, partition)
    bound = error_bound(alpha, delta)
    err = np.abs(result.values() - J)
    worst = float(np.max(err - bound))
    return BoundCheck(worst <= slack, worst, bound, delta)


def normalized_errors(result_or_values, J_star):
    """Mean and max of ``|V(i) - J*(i)| / |J*(i)|`` over states.

    States with ``|J*(i)| < 1e-12`` are skipped and counted in
    ``excluded``; the mean is over the remaining states.
    """
    if hasattr(result_or_values, "values") and callable(result_or_values.values):
        V = result_or_values.values()
    else:
        V = np.asarray(result_or_values, dtype=np.float64)
    J = np.asarray(J_star, dtype=np.float64)
    if V.shape != J.shape:
        raise ValueError("value vectors differ in length")
    keep = np.abs(J) >= ZERO_VALUE_TOL
    excluded = int(np.count_nonzero(~keep))
    if not np.any(keep):
        return ErrorSummary(0.0, 0.0, excluded)
    rel = np.abs(V[keep] - J[keep]) / np.abs(J[keep])
    return ErrorSummary(float(np.mean(rel)), float(np.max(rel)), excluded)


def write_metrics(rows, path):
    """Write ``metric,value`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for name, value in rows:
            w.writerow([name, repr(value) if isinstance(value, float) else value])


def run_metrics(result, J_star):
    """Standard summary rows for a distributed run against the oracle."""
    errs = normalized_errors(result, J_star)
    delta = intra_partition_spread(J_star, result.partition)
    return [
        ("avg_error", errs.avg),
        ("max_error", errs.max),
        ("excluded_states", errs.excluded),
        ("delta", delta),
        ("bound", error_bound(result.alpha, delta)),
        ("iterations", result.iterations),
        ("messages", result.messages_sent),
        ("message_ceiling", result.message_ceiling()),
        ("converged", int(result.converged)),
    ]

import warnings

import numpy as np
import pytest

from aggvi.aggregation import AggregationWarning
from aggvi.mdp import DiscountedMdp

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_aggregation_fallback():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AggregationWarning)
        yield


def dense_random(n, n_actions, seed, alpha=0.9, density=0.6, cost_range=(0.0, 10.0)):
    """Dense tables ``P[i, u, j]``, ``G[i, u, j]`` with every state having ``n_actions`` actions.

    Returned alongside the sparse MDP built from them so tests can use the
    dense tables as an independent oracle.
    """
    rng = np.random.default_rng(seed)
    P = np.zeros((n, n_actions, n))
    G = np.zeros((n, n_actions, n))
    records = []
    for i in range(n):
        for u in range(n_actions):
            mask = rng.random(n) < density
            mask[rng.integers(n)] = True
            w = np.where(mask, rng.random(n) + 0.01, 0.0)
            p = w / w.sum()
            nz = np.flatnonzero(p)
            p[nz[-1]] = 1.0 - p[nz[:-1]].sum()
            P[i, u] = p
            G[i, u] = np.where(mask, rng.uniform(*cost_range, size=n), 0.0)
            records.extend((i, u, int(j), float(P[i, u, j]), float(G[i, u, j])) for j in nz)
    return DiscountedMdp.from_transitions(n, alpha, records), P, G


def dense_backup(P, G, alpha, J):
    """``(TJ, argmin)`` by explicit enumeration over actions."""
    n, A, _ = P.shape
    out = np.empty(n)
    arg = np.empty(n, dtype=int)
    for i in range(n):
        best = None
        for u in range(A):
            v = sum(P[i, u, j] * (G[i, u, j] + alpha * J[j]) for j in range(n) if P[i, u, j] > 0)
            if best is None or v < best:
                best, arg[i] = v, u
        out[i] = best
    return out, arg


def dense_gauss_seidel(P, G, alpha, J, order=None):
    """One in-place sweep over ``order`` (all states ascending by default)."""
    J = np.array(J, dtype=float)
    n, A, _ = P.shape
    for i in range(n) if order is None else order:
        J[i] = min(
            sum(P[i, u, j] * (G[i, u, j] + alpha * J[j]) for j in range(n) if P[i, u, j] > 0)
            for u in range(A)
        )
    return J


def chain_mdp(costs, alpha=0.9):
    """Deterministic chain 0 -> 1 -> ... -> n-1 (absorbing, zero cost)."""
    n = len(costs) + 1
    recs = [(i, 0, i + 1, 1.0, c) for i, c in enumerate(costs)]
    recs.append((n - 1, 0, n - 1, 1.0, 0.0))
    return DiscountedMdp.from_transitions(n, alpha, recs)

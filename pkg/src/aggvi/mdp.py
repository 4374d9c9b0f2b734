"""Finite discounted MDPs and the centralized value-iteration oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

PROB_SUM_TOL = 1e-12


class MdpError(ValueError):
    """Raised when an MDP violates its structural invariants."""


class MdpParseError(MdpError):
    """Raised for malformed MDP files; carries the offending line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NotConvergedError(RuntimeError):
    def __init__(self, message, values=None, iterations=0):
        super().__init__(message)
        self.values = values
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class DiscountedMdp:
    """Sparse discounted MDP with states ``0..n-1``.

    Storage is CSR-like in two levels. Actions of state ``i`` are rows
    ``state_ptr[i]:state_ptr[i+1]`` (sorted by ``action_ids``); the
    transitions of row ``a`` are entries ``row_ptr[a]:row_ptr[a+1]`` of
    ``col`` (successor), ``prob`` and ``cost``.

    Use :meth:`from_transitions` rather than building the arrays by hand.
    """

    n: int
    alpha: float
    state_ptr: np.ndarray
    action_ids: np.ndarray
    row_ptr: np.ndarray
    col: np.ndarray
    prob: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        for name in ("state_ptr", "action_ids", "row_ptr", "col", "prob", "cost"):
            getattr(self, name).setflags(write=False)
        self.validate()

    @classmethod
    def from_transitions(cls, n, alpha, transitions):
        """Build from an iterable of ``(i, u, j, p, g)`` records.

        Zero-probability records are dropped. Duplicate ``(i, u, j)``
        triples are rejected.
        """
        n = int(n)
        rows: dict[tuple[int, int], dict[int, tuple[float, float]]] = {}
        for i, u, j, p, g in transitions:
            i, u, j, p, g = int(i), int(u), int(j), float(p), float(g)
            if not (0 <= i < n and 0 <= j < n):
                raise MdpError(f"state index out of range in transition ({i}, {u}, {j})")
            succ = rows.setdefault((i, u), {})
            if j in succ:
                raise MdpError(f"duplicate transition ({i}, {u}, {j})")
            if p != 0.0:
                succ[j] = (p, g)
        return cls._from_rows(n, alpha, rows)

    @classmethod
    def _from_rows(cls, n, alpha, rows):
        per_state: list[list[int]] = [[] for _ in range(n)]
        for i, u in rows:
            per_state[i].append(u)
        state_ptr = [0]
        action_ids, row_ptr, col, prob, cost = [], [0], [], [], []
        for i in range(n):
            if not per_state[i]:
                raise MdpError(f"state {i} has no actions")
            for u in sorted(per_state[i]):
                action_ids.append(u)
                for j in sorted(rows[(i, u)]):
                    p, g = rows[(i, u)][j]
                    col.append(j)
                    prob.append(p)
                    cost.append(g)
                row_ptr.append(len(col))
            state_ptr.append(len(action_ids))
        return cls(
            n=n,
            alpha=float(alpha),
            state_ptr=np.asarray(state_ptr, dtype=np.int64),
            action_ids=np.asarray(action_ids, dtype=np.int64),
            row_ptr=np.asarray(row_ptr, dtype=np.int64),
            col=np.asarray(col, dtype=np.int64),
            prob=np.asarray(prob, dtype=np.float64),
            cost=np.asarray(cost, dtype=np.float64),
        )

    def validate(self):
        if not (0.0 <= self.alpha < 1.0):
            raise MdpError(f"discount factor must lie in [0, 1), got {self.alpha}")
        if self.n < 1:
            raise MdpError("an MDP needs at least one state")
        if len(self.state_ptr) != self.n + 1 or np.any(np.diff(self.state_ptr) < 1):
            raise MdpError("every state needs at least one action")
        if np.any(np.diff(self.row_ptr) < 1):
            raise MdpError("every action needs at least one successor")
        if np.any((self.col < 0) | (self.col >= self.n)):
            raise MdpError("successor index out of range")
        if np.any((self.prob < 0.0) | (self.prob > 1.0)):
            raise MdpError("transition probabilities must lie in [0, 1]")
        if not np.all(np.isfinite(self.cost)):
            raise MdpError("stage costs must be finite")
        sums = np.add.reduceat(self.prob, self.row_ptr[:-1])
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_SUM_TOL)
        if bad.size:
            i, u = self.row_owner(int(bad[0]))
            raise MdpError(
                f"probabilities of state {i}, action {u} sum to {sums[bad[0]]!r}, not 1"
            )

    @property
    def n_rows(self):
        return len(self.action_ids)

    def actions(self, i):
        return self.action_ids[self.state_ptr[i] : self.state_ptr[i + 1]].tolist()

    def row_owner(self, row):
        i = int(np.searchsorted(self.state_ptr, row, side="right") - 1)
        return i, int(self.action_ids[row])

    def successors(self, i, u):
        """``[(j, p, g), ...]`` for state ``i`` under action ``u``."""
        lo, hi = self.state_ptr[i], self.state_ptr[i + 1]
        pos = np.flatnonzero(self.action_ids[lo:hi] == u)
        if pos.size == 0:
            raise KeyError(f"action {u} not available in state {i}")
        a = lo + int(pos[0])
        sl = slice(self.row_ptr[a], self.row_ptr[a + 1])
        return list(zip(self.col[sl].tolist(), self.prob[sl].tolist(), self.cost[sl].tolist()))

    def transitions(self):
        """Iterate ``(i, u, j, p, g)`` records in storage order."""
        for i in range(self.n):
            for a in range(self.state_ptr[i], self.state_ptr[i + 1]):
                u = int(self.action_ids[a])
                for e in range(self.row_ptr[a], self.row_ptr[a + 1]):
                    yield i, u, int(self.col[e]), float(self.prob[e]), float(self.cost[e])

    def with_alpha(self, alpha):
        return DiscountedMdp(
            n=self.n,
            alpha=float(alpha),
            state_ptr=self.state_ptr,
            action_ids=self.action_ids,
            row_ptr=self.row_ptr,
            col=self.col,
            prob=self.prob,
            cost=self.cost,
        )


def _check_values(mdp, J):
    J = np.ascontiguousarray(J, dtype=np.float64)
    if J.shape != (mdp.n,):
        raise ValueError(f"value function must have {mdp.n} entries, got shape {J.shape}")
    return J


def bellman_backup(mdp, J, i):
    """One-step lookahead at state ``i``: ``(value, argmin_action)``.

    Ties go to the lowest action identifier.
    """
    J = _check_values(mdp, J)
    if not 0 <= i < mdp.n:
        raise IndexError(f"state {i} out of range")
    best_v, best_u = 0.0, None
    for a in range(mdp.state_ptr[i], mdp.state_ptr[i + 1]):
        acc = 0.0
        for e in range(mdp.row_ptr[a], mdp.row_ptr[a + 1]):
            acc = acc + mdp.prob[e] * (mdp.cost[e] + mdp.alpha * J[mdp.col[e]])
        if best_u is None or acc < best_v:
            best_v, best_u = float(acc), int(mdp.action_ids[a])
    return best_v, best_u


def bellman_operator(mdp, J):
    """Apply T to ``J``; returns ``(TJ, greedy_actions)``."""
    J = _check_values(mdp, J)
    out = np.empty(mdp.n)
    best = np.empty(mdp.n, dtype=np.int64)
    kernels.bellman_sweep(
        mdp.state_ptr, mdp.row_ptr, mdp.col, mdp.prob, mdp.cost, mdp.alpha, J, out, best
    )
    return out, mdp.action_ids[best]


def value_iteration(mdp, tol=1e-10, max_iters=100_000, J0=None, raise_on_failure=True):
    """Synchronous value iteration from ``J0`` (zeros by default).

    Stops when the sup-norm difference of successive iterates is at most
    ``tol``. Returns ``(J, iterations)``. Hitting ``max_iters`` raises
    :class:`NotConvergedError` unless ``raise_on_failure`` is false, in
    which case ``iterations == max_iters`` signals the failure.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    J = np.zeros(mdp.n) if J0 is None else _check_values(mdp, J0).copy()
    out = np.empty(mdp.n)
    best = np.empty(mdp.n, dtype=np.int64)
    for k in range(1, max_iters + 1):
        kernels.bellman_sweep(
            mdp.state_ptr, mdp.row_ptr, mdp.col, mdp.prob, mdp.cost, mdp.alpha, J, out, best
        )
        diff = float(np.max(np.abs(out - J)))
        J, out = out, J
        if diff <= tol:
            return J, k
    if raise_on_failure:
        raise NotConvergedError(
            f"value iteration did not reach tol={tol} in {max_iters} iterations",
            values=J,
            iterations=max_iters,
        )
    return J, max_iters


def greedy_policy(mdp, J):
    return bellman_operator(mdp, J)[1]


def random_mdp(n, n_actions, rng, alpha=0.9, max_successors=None, cost_range=(0.0, 10.0)):
    """Random MDP for tests and experiments.

    Each state gets between 1 and ``n_actions`` actions; each action a
    random successor set of size up to ``max_successors`` (default ``n``)
    with Dirichlet-like probabilities. The last probability is set so the
    row sums to one within rounding.
    """
    rng = np.random.default_rng(rng)
    max_successors = n if max_successors is None else min(max_successors, n)
    records = []
    for i in range(n):
        for u in range(int(rng.integers(1, n_actions + 1))):
            k = int(rng.integers(1, max_successors + 1))
            succ = np.sort(rng.choice(n, size=k, replace=False))
            w = rng.random(k) + 1e-3
            p = w / w.sum()
            p[-1] = 1.0 - float(np.sum(p[:-1]))
            g = rng.uniform(*cost_range, size=k)
            records.extend((i, u, int(j), float(pj), float(gj)) for j, pj, gj in zip(succ, p, g))
    return DiscountedMdp.from_transitions(n, alpha, records)


# ---------------------------------------------------------------------------
# File format
#
#   # comment
#   <n> <alpha>
#   <i> <u> <j> <p> <g>      one record per line, whitespace separated
#
# Integers for i, u, j; reals for alpha, p, g. Duplicate (i, u, j) triples
# are rejected.


def parse_mdp(text):
    header = None
    records = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if header is None:
                if len(tok) != 2:
                    raise MdpParseError("expected header '<n> <alpha>'", lineno)
                header = (int(tok[0]), float(tok[1]))
                continue
            if len(tok) != 5:
                raise MdpParseError("expected record '<i> <u> <j> <p> <g>'", lineno)
            i, u, j = int(tok[0]), int(tok[1]), int(tok[2])
            p, g = float(tok[3]), float(tok[4])
        except ValueError as exc:
            if isinstance(exc, MdpParseError):
                raise
            raise MdpParseError(str(exc), lineno) from None
        if (i, u, j) in seen:
            raise MdpParseError(f"duplicate transition ({i}, {u}, {j})", lineno)
        if not (math.isfinite(p) and math.isfinite(g)):
            raise MdpParseError("non-finite probability or cost", lineno)
        seen.add((i, u, j))
        records.append((i, u, j, p, g))
    if header is None:
        raise MdpParseError("empty MDP file")
    return DiscountedMdp.from_transitions(header[0], header[1], records)


def format_mdp(mdp):
    lines = [f"{mdp.n} {mdp.alpha!r}"]
    lines.extend(f"{i} {u} {j} {p!r} {g!r}" for i, u, j, p, g in mdp.transitions())
    return "\n".join(lines) + "\n"


def load_mdp(path):
    return parse_mdp(Path(path).read_text())


def save_mdp(mdp, path):
    Path(path).write_text(format_mdp(mdp))

"""Synchronous-round simulator for distributed aggregated value iteration.

Each round ``k``:

1. every agent sweeps its own states against its current estimates
   ``r_l`` (no agent sees another agent's round-``k`` output);
2. agent ``l`` sends its new aggregate to all current neighbors if it
   moved more than ``c_threshold`` since its last send, or if some
   current neighbor has not heard from it in the last ``B`` rounds;
3. messages are delivered at the round barrier; non-receivers keep
   their old estimates;
4. the run stops once no agent's estimate vector moved by more than
   ``tolerance`` (sup-norm).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .agent import AgentState, LocalView, agent_update
from .schedule import CommSchedule, make_schedule_complete, make_schedule_round_robin


class Broadcast(NamedTuple):
    k: int
    sender: int
    receivers: tuple
    value: float
    forced: bool


@dataclass(frozen=True)
class RunConfig:
    c_threshold: float = 0.0
    tolerance: float = 1e-8
    max_iters: int = 100_000
    schedule: CommSchedule | None = None
    alpha_override: float | None = None
    record_history: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.c_threshold >= 0:
            raise ValueError("c_threshold must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.alpha_override is not None and not 0 <= self.alpha_override < 1:
            raise ValueError("alpha must lie in [0, 1)")

    def schedule_for(self, q):
        if self.schedule is None:
            return make_schedule_complete(q)
        if self.schedule.q != q:
            raise ValueError(f"schedule is for {self.schedule.q} agents, partition has {q}")
        return self.schedule


@dataclass
class RunHistory:
    """Snapshots indexed by iteration.

    ``r[k]`` is the ``(q, q)`` matrix of estimates ``r_{l,m}^k`` and
    ``V[k][l]`` agent ``l``'s local values at the start of iteration
    ``k`` (so ``k = 0`` is the initialization). ``sent[k, l, m]`` marks a
    message from ``l`` to ``m`` during iteration ``k``.
    """

    r: list = field(default_factory=list)
    V: list = field(default_factory=list)
    sent: list = field(default_factory=list)

    def r_array(self):
        return np.stack(self.r)

    def sent_array(self):
        return np.stack(self.sent) if self.sent else np.zeros((0, 0, 0), dtype=bool)


@dataclass
class RunResult:
    V_final: list
    r_final: np.ndarray
    iterations: int
    messages_sent: int
    broadcast_log: list
    converged: bool
    partition: object
    config: RunConfig
    schedule: CommSchedule
    alpha: float
    history: RunHistory | None = None

    def values(self):
        """Global vector where each state takes its owner's local value."""
        out = np.empty(self.partition.n)
        for l, s in enumerate(self.partition.sets):
            out[s] = self.V_final[l]
        return out

    def disagreement(self):
        """``max_{l,m} |r_{l,m} - r_{m,m}|`` at the end of the run."""
        own = np.diag(self.r_final)
        return float(np.max(np.abs(self.r_final - own[None, :])))

    def message_ceiling(self):
        q = self.partition.q
        return q * (q - 1) * self.iterations


def run_distributed_vi(mdp, partition, disagg, config=None, workers=1, backend=None,
                       initial_states=None):
    """Run the multi-agent iteration to termination or ``max_iters``.

    ``workers > 1`` fans agent sweeps over a thread pool; results are
    identical to the sequential mode. Non-convergence is reported through
    ``RunResult.converged``.
    """
    config = RunConfig() if config is None else config
    if partition.n != mdp.n:
        raise ValueError("partition and MDP disagree on the number of states")
    if disagg.partition != partition:
        raise ValueError("disaggregation was built for a different partition")
    q = partition.q
    schedule = config.schedule_for(q)
    alpha = mdp.alpha if config.alpha_override is None else config.alpha_override
    views = [LocalView.from_mdp(mdp, partition, l, alpha) for l in range(q)]
    if initial_states is None:
        states = [AgentState.initial(partition, l) for l in range(q)]
    else:
        states = [s.copy() for s in initial_states]

    history = RunHistory() if config.record_history else None
    if history is not None:
        history.r.append(np.stack([s.r for s in states]))
        history.V.append([s.V.copy() for s in states])

    def update(l):
        return agent_update(views[l], disagg, states[l], backend=backend)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    log = []
    messages = 0
    converged = False
    B = schedule.B
    k = 0
    try:
        while k < config.max_iters:
            outs = list(pool.map(update, range(q))) if pool else [update(l) for l in range(q)]

            new_r = [s.r.copy() for s in states]
            sent = np.zeros((q, q), dtype=bool)
            outbox = []
            for l, (_, r_own, _) in enumerate(outs):
                new_r[l][l] = r_own
                st = states[l]
                nbrs = schedule.neighbors(k, l)
                if not nbrs:
                    continue
                forced = any(st.last_contact[m] < k - B for m in nbrs)
                if forced or abs(r_own - st.r_prev_broadcast) > config.c_threshold:
                    st.r_prev_broadcast = r_own
                    st.last_contact[list(nbrs)] = k
                    outbox.append(Broadcast(k, l, nbrs, r_own, forced))
                    messages += len(nbrs)
                    sent[l, list(nbrs)] = True
                    sent[l, l] = True
            log.extend(outbox)
            for b in outbox:
                for m in b.receivers:
                    new_r[m][b.sender] = b.value

            change = 0.0
            for l, (V, _, _) in enumerate(outs):
                change = max(change, float(np.max(np.abs(new_r[l] - states[l].r))))
                states[l].V = V
                states[l].r = new_r[l]
            k += 1
            if history is not None:
                history.r.append(np.stack(new_r))
                history.V.append([s.V.copy() for s in states])
                history.sent.append(sent)
            if change <= config.tolerance:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    return RunResult(
        V_final=[s.V for s in states],
        r_final=np.stack([s.r for s in states]),
        iterations=k,
        messages_sent=messages,
        broadcast_log=log,
        converged=converged,
        partition=partition,
        config=config,
        schedule=schedule,
        alpha=alpha,
        history=history,
    )


# -- run configuration file (JSON) -------------------------------------------
#   {"alpha": 0.9, "c_threshold": 0.1, "tolerance": 1e-8, "max_iters": 100000,
#    "schedule": "complete" | "round-robin", "B": 0, "seed": 0,
#    "record_history": false}

CONFIG_KEYS = {"alpha", "c_threshold", "tolerance", "max_iters", "schedule", "B", "seed",
               "record_history"}


def load_run_config(path):
    """Read a JSON run configuration into a plain dict (unknown keys rejected)."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("run configuration must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown run configuration keys: {sorted(unknown)}")
    return data


def build_run_config(q, *, c_threshold=0.0, tolerance=1e-8, max_iters=100_000,
                     schedule="complete", B=0, alpha=None, record_history=False):
    if isinstance(schedule, CommSchedule):
        sched = schedule
    elif schedule == "complete":
        sched = make_schedule_complete(q, B)
    elif schedule == "round-robin":
        sched = make_schedule_round_robin(q, B)
    else:
        raise ValueError(f"unknown schedule kind {schedule!r}")
    return RunConfig(
        c_threshold=float(c_threshold),
        tolerance=float(tolerance),
        max_iters=int(max_iters),
        schedule=sched,
        alpha_override=alpha,
        record_history=record_history,
    )


def with_history(config):
    return replace(config, record_history=True)


# -- output files --------------------------------------------------------------


def write_history(result, path):
    """Rows ``k, agent, m, r_value, sent_flag``: ``r_{agent,m}`` after round ``k``.

    ``sent_flag`` is 1 when ``agent`` sent to ``m`` in round ``k``; on the
    diagonal it is 1 when ``agent`` broadcast at all.
    """
    if result.history is None:
        raise ValueError("run was not recorded; set record_history")
    r = result.history.r_array()
    sent = result.history.sent_array()
    q = result.partition.q
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "agent", "m", "r_value", "sent_flag"])
        for k in range(sent.shape[0]):
            for l in range(q):
                for m in range(q):
                    w.writerow([k, l, m, repr(float(r[k + 1, l, m])), int(sent[k, l, m])])


def write_broadcast_log(result, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "sender", "receivers", "value", "forced"])
        for b in result.broadcast_log:
            w.writerow([b.k, b.sender, " ".join(map(str, b.receivers)), repr(b.value),
                        int(b.forced)])


def write_local_values(result, directory):
    """One ``agent_<l>.txt`` per agent with ``state value`` lines."""
    directory = Path(directory)
    paths = []
    for l, s in enumerate(result.partition.sets):
        p = directory / f"agent_{l}.txt"
        p.write_text(format_values(s, result.V_final[l]))
        paths.append(p)
    return paths


def format_values(states, values):
    return "".join(f"{int(i)} {float(v)!r}\n" for i, v in zip(states, values))


def parse_values(text):
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line:
            i, v = line.split()
            out[int(i)] = float(v)
    return out


def results_identical(a, b):
    """Bit-level equality of two runs (values, estimates, and message log)."""
    return (
        a.iterations == b.iterations
        and a.messages_sent == b.messages_sent
        and a.broadcast_log == b.broadcast_log
        and np.array_equal(a.r_final, b.r_final)
        and all(np.array_equal(x, y) for x, y in zip(a.V_final, b.V_final))
    )


__all__ = [
    "Broadcast", "RunConfig", "RunHistory", "RunResult", "run_distributed_vi",
    "build_run_config", "load_run_config", "write_history", "write_broadcast_log",
    "write_local_values", "results_identical",
]

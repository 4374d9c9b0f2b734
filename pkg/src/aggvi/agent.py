"""Single-agent local update: a Gauss-Seidel sweep over the agent's own states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .aggregation import aggregate

NEVER = -(2**62)


@dataclass(frozen=True, eq=False)
class LocalView:
    """Transition data an agent owns: rows for origins in its partition.

    Successor references are pre-resolved into ``target``: a value
    ``t >= 0`` points at local slot ``t`` of the agent's value vector,
    ``t < 0`` at aggregate estimate ``r[-t - 1]`` of the owning partition.
    """

    agent: int
    states: np.ndarray
    alpha: float
    state_ptr: np.ndarray
    action_ids: np.ndarray
    row_ptr: np.ndarray
    target: np.ndarray
    prob: np.ndarray
    cost: np.ndarray

    @classmethod
    def from_mdp(cls, mdp, partition, agent, alpha=None):
        states = partition.sets[agent]
        state_ptr, action_ids, row_ptr, target, prob, cost = [0], [], [0], [], [], []
        member_of = partition.member_of
        local_pos = partition.local_pos
        for i in states.tolist():
            for a in range(mdp.state_ptr[i], mdp.state_ptr[i + 1]):
                action_ids.append(int(mdp.action_ids[a]))
                lo, hi = mdp.row_ptr[a], mdp.row_ptr[a + 1]
                js = mdp.col[lo:hi]
                owner = member_of[js]
                target.extend(np.where(owner == agent, local_pos[js], -owner - 1).tolist())
                prob.extend(mdp.prob[lo:hi].tolist())
                cost.extend(mdp.cost[lo:hi].tolist())
                row_ptr.append(len(target))
            state_ptr.append(len(action_ids))
        i64 = np.int64
        return cls(
            agent=agent,
            states=states,
            alpha=mdp.alpha if alpha is None else float(alpha),
            state_ptr=np.asarray(state_ptr, dtype=i64),
            action_ids=np.asarray(action_ids, dtype=i64),
            row_ptr=np.asarray(row_ptr, dtype=i64),
            target=np.asarray(target, dtype=i64),
            prob=np.asarray(prob, dtype=np.float64),
            cost=np.asarray(cost, dtype=np.float64),
        )

    @property
    def size(self):
        return int(self.states.size)

    def greedy_actions(self, V, r):
        """Minimizing action per local state (lowest id on ties)."""
        acts = np.empty(self.size, dtype=np.int64)
        for k in range(self.size):
            best_v, best_a = 0.0, -1
            for a in range(self.state_ptr[k], self.state_ptr[k + 1]):
                acc = 0.0
                for e in range(self.row_ptr[a], self.row_ptr[a + 1]):
                    t = self.target[e]
                    nxt = V[t] if t >= 0 else r[-t - 1]
                    acc = acc + self.prob[e] * (self.cost[e] + self.alpha * nxt)
                if best_a < 0 or acc < best_v:
                    best_v, best_a = acc, a
            acts[k] = self.action_ids[best_a]
        return acts


@dataclass
class AgentState:
    """Mutable per-agent state carried between iterations."""

    agent: int
    V: np.ndarray
    r: np.ndarray
    r_prev_broadcast: float = 0.0
    last_contact: np.ndarray = field(default=None)

    def __post_init__(self):
        self.V = np.array(self.V, dtype=np.float64)
        self.r = np.array(self.r, dtype=np.float64)
        if self.last_contact is None:
            self.last_contact = np.full(self.r.size, NEVER, dtype=np.int64)

    @classmethod
    def initial(cls, partition, agent, V0=None, r0=None):
        size = partition.sets[agent].size
        V = np.zeros(size) if V0 is None else V0
        r = np.zeros(partition.q) if r0 is None else r0
        state = cls(agent, V, r)
        if state.V.shape != (size,) or state.r.shape != (partition.q,):
            raise ValueError("initial vectors have the wrong shape")
        return state

    def copy(self):
        return AgentState(
            self.agent, self.V.copy(), self.r.copy(), self.r_prev_broadcast,
            self.last_contact.copy(),
        )


def agent_update(view, disagg, state, backend=None):
    """One local sweep; returns ``(new_V, new_r_own, max_abs_change)``.

    States are visited in ascending index order and each backup reads the
    values already updated earlier in the same sweep. Foreign successors
    are valued by ``state.r``. ``state`` itself is not modified.
    """
    if state.V.shape != (view.size,):
        raise ValueError(f"agent {view.agent} holds {state.V.size} values, expected {view.size}")
    impl = kernels.get_backend(backend)
    V = state.V.copy()
    r = np.ascontiguousarray(state.r, dtype=np.float64)
    change = impl.gauss_seidel_sweep(
        view.state_ptr, view.row_ptr, view.target, view.prob, view.cost, view.alpha, V, r
    )
    return V, aggregate(disagg, view.agent, V), float(change)

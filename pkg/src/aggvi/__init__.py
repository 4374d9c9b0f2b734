"""Distributed value iteration with hard state aggregation.

A team of agents each owns one block of a discounted MDP's states and the
transitions leaving them. Agents sweep their own states and exchange only
one scalar per block (a weighted aggregate of their value function),
broadcasting when it moved by more than a threshold or when a peer has
not heard from them within the connectivity window.
"""

from .aggregation import (
    Disaggregation,
    Partition,
    aggregate,
    kmeans_partition,
    uniform_boundary_disaggregation,
)
from .agent import AgentState, LocalView, agent_update
from .kernels import BACKEND
from .mdp import DiscountedMdp, bellman_backup, bellman_operator, value_iteration
from .metrics import (
    check_error_bound,
    intra_partition_spread,
    normalized_errors,
    trace_from_history,
)
from .schedule import (
    CommSchedule,
    make_schedule_complete,
    make_schedule_custom,
    make_schedule_round_robin,
)
from .simulator import RunConfig, RunResult, run_distributed_vi
from .traffic import RoadNetwork, build_routing_mdp, load_network, sample_speeds

__version__ = "0.1.0"

__all__ = [
    "AgentState", "BACKEND", "CommSchedule", "Disaggregation", "DiscountedMdp", "LocalView",
    "Partition", "RoadNetwork", "RunConfig", "RunResult", "aggregate", "agent_update",
    "bellman_backup", "bellman_operator", "build_routing_mdp", "check_error_bound",
    "intra_partition_spread", "kmeans_partition", "load_network", "make_schedule_complete",
    "make_schedule_custom", "make_schedule_round_robin", "normalized_errors",
    "run_distributed_vi", "sample_speeds", "trace_from_history",
    "uniform_boundary_disaggregation", "value_iteration",
]

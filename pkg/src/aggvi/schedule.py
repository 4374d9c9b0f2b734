"""Periodic directed communication schedules with a connectivity window."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from pathlib import Path


class ScheduleError(ValueError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


@dataclass(frozen=True)
class CommSchedule:
    """Edge sets ``E(k) = edge_sets[k % period]`` over ``q`` agents.

    An edge ``(s, t)`` lets agent ``s`` send to agent ``t`` at iteration
    ``k``. The schedule guarantees that every ``B + 1`` consecutive
    iterations together contain every ordered pair.
    """

    kind: str
    q: int
    B: int
    edge_sets: tuple

    def __post_init__(self):
        if self.q < 1:
            raise ScheduleError("need q >= 1")
        if self.B < 0:
            raise ScheduleError("B must be nonnegative")
        if not self.edge_sets:
            raise ScheduleError("schedule has no iterations")
        sets = tuple(frozenset((int(s), int(t)) for s, t in es) for es in self.edge_sets)
        for es in sets:
            for s, t in es:
                if s == t or not (0 <= s < self.q and 0 <= t < self.q):
                    raise ScheduleError(f"invalid edge ({s}, {t}) for q={self.q}")
        object.__setattr__(self, "edge_sets", sets)
        bad = first_disconnected_window(sets, self.q, self.B)
        if bad is not None:
            raise ScheduleError(
                f"window starting at iteration {bad} (length {self.B + 1}) "
                "does not connect every ordered agent pair",
                window=bad,
            )
        # neighbor lists per (phase, sender), sorted for deterministic delivery order
        nbrs = tuple(
            tuple(tuple(sorted(t for s, t in es if s == l)) for l in range(self.q)) for es in sets
        )
        object.__setattr__(self, "_neighbors", nbrs)

    @property
    def period(self):
        return len(self.edge_sets)

    def edges(self, k):
        return self.edge_sets[k % self.period]

    def neighbors(self, k, agent):
        """Receivers reachable from ``agent`` at iteration ``k``."""
        return self._neighbors[k % self.period][agent]

    def describe(self):
        return f"{self.kind}(q={self.q}, B={self.B}, period={self.period})"


def all_pairs(q):
    return list(permutations(range(q), 2))


def first_disconnected_window(edge_sets, q, B):
    """Start index of the first window lacking an ordered pair, or ``None``.

    Windows wrap around the period, so checking one period covers every
    ``k``.
    """
    need = set(all_pairs(q))
    if not need:
        return None
    P = len(edge_sets)
    for start in range(P):
        seen = set()
        for i in range(min(B + 1, P)):
            seen |= edge_sets[(start + i) % P]
        if seen != need:
            return start
    return None


def make_schedule_complete(q, B=0):
    """Every ordered pair at every iteration.

    ``B`` only sets the staleness window used to force broadcasts; a
    complete graph satisfies the connectivity requirement for any ``B``.
    """
    return CommSchedule("complete", q, B, (frozenset(all_pairs(q)),))


def make_schedule_round_robin(q, B):
    """Ordered pairs dealt in lexicographic order over ``B + 1`` phases.

    Pair number ``p`` is active at phases ``p mod (B + 1)``; each pair is
    therefore present exactly once per period and any ``B + 1``
    consecutive iterations cover all pairs.
    """
    P = B + 1
    phases = [set() for _ in range(P)]
    for p, pair in enumerate(all_pairs(q)):
        phases[p % P].add(pair)
    return CommSchedule("round-robin", q, B, tuple(frozenset(s) for s in phases))


def make_schedule_custom(edge_sets, B, q=None):
    """Periodic schedule from explicit per-iteration edge sets.

    Raises :class:`ScheduleError` naming the first window that fails the
    connectivity check.
    """
    edge_sets = [set(es) for es in edge_sets]
    if q is None:
        q = 1 + max((max(s, t) for es in edge_sets for s, t in es), default=0)
    return CommSchedule("custom", q, B, tuple(frozenset(es) for es in edge_sets))


# Custom schedule file:
#   period <P>
#   <k> <sender> <receiver>      0 <= k < P, one directed edge per line


def parse_schedule(text, q, B):
    period = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "period":
            if len(tok) != 2:
                raise ScheduleError(f"line {lineno}: expected 'period <P>'")
            period = int(tok[1])
            continue
        if len(tok) != 3:
            raise ScheduleError(f"line {lineno}: expected '<k> <sender> <receiver>'")
        edges.append((lineno, int(tok[0]), int(tok[1]), int(tok[2])))
    if period is None:
        period = 1 + max((k for _, k, _, _ in edges), default=0)
    sets = [set() for _ in range(period)]
    for lineno, k, s, t in edges:
        if not 0 <= k < period:
            raise ScheduleError(f"line {lineno}: phase {k} outside period {period}")
        sets[k].add((s, t))
    return make_schedule_custom(sets, B, q=q)


def load_schedule(path, q, B):
    return parse_schedule(Path(path).read_text(), q, B)


def format_schedule(schedule):
    lines = [f"period {schedule.period}"]
    for k, es in enumerate(schedule.edge_sets):
        lines.extend(f"{k} {s} {t}" for s, t in sorted(es))
    return "\n".join(lines) + "\n"

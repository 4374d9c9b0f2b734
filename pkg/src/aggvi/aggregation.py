"""Hard aggregation: state partitions, disaggregation weights, aggregate values."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SIMPLEX_TOL = 1e-12


class AggregationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint cover of ``0..n-1`` by ``q`` nonempty sets.

    ``member_of[j]`` is the owning partition of state ``j``; this is the
    hard aggregation map. ``sets[l]`` lists the members of partition
    ``l`` in ascending order and ``local_pos[j]`` is the position of ``j``
    inside its own set.
    """

    member_of: np.ndarray
    q: int

    def __post_init__(self):
        m = np.ascontiguousarray(self.member_of, dtype=np.int64)
        m.setflags(write=False)
        object.__setattr__(self, "member_of", m)
        if m.ndim != 1 or m.size == 0:
            raise ValueError("member_of must be a nonempty 1-D array")
        if self.q < 1:
            raise ValueError("a partition needs q >= 1")
        if m.min() < 0 or m.max() >= self.q:
            raise ValueError("partition index out of range")
        sets = tuple(np.flatnonzero(m == l) for l in range(self.q))
        for l, s in enumerate(sets):
            if s.size == 0:
                raise ValueError(f"partition {l} is empty")
            s.setflags(write=False)
        local_pos = np.empty_like(m)
        for s in sets:
            local_pos[s] = np.arange(s.size)
        local_pos.setflags(write=False)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "local_pos", local_pos)

    @classmethod
    def from_sets(cls, sets, n=None):
        sets = [sorted(int(i) for i in s) for s in sets]
        total = sum(len(s) for s in sets)
        n = total if n is None else n
        member_of = np.full(n, -1, dtype=np.int64)
        for l, s in enumerate(sets):
            for i in s:
                if not 0 <= i < n:
                    raise ValueError(f"state {i} out of range")
                if member_of[i] != -1:
                    raise ValueError(f"state {i} appears in more than one set")
                member_of[i] = l
        if np.any(member_of < 0):
            raise ValueError(f"state {int(np.flatnonzero(member_of < 0)[0])} is not covered")
        return cls(member_of, len(sets))

    @property
    def n(self):
        return int(self.member_of.size)

    def phi(self, j, l):
        """Hard aggregation probability."""
        return 1.0 if self.member_of[j] == l else 0.0

    def __eq__(self, other):
        return (
            isinstance(other, Partition)
            and self.q == other.q
            and np.array_equal(self.member_of, other.member_of)
        )

    def __hash__(self):
        return hash((self.q, self.member_of.tobytes()))


@dataclass(frozen=True, eq=False)
class Disaggregation:
    """Per-partition weight vectors aligned with ``partition.sets[l]``.

    ``weights[l][k]`` is the disaggregation probability of state
    ``partition.sets[l][k]``; states outside ``I_l`` implicitly carry 0.
    """

    partition: Partition
    weights: tuple

    def __post_init__(self):
        if len(self.weights) != self.partition.q:
            raise ValueError("need one weight vector per partition")
        ws = []
        for l, w in enumerate(self.weights):
            w = np.array(w, dtype=np.float64)
            if w.shape != self.partition.sets[l].shape:
                raise ValueError(f"weights of partition {l} do not match its size")
            if np.any((w < 0.0) | (w > 1.0)) or not np.all(np.isfinite(w)):
                raise ValueError(f"weights of partition {l} must lie in [0, 1]")
            if abs(float(np.sum(w)) - 1.0) > SIMPLEX_TOL:
                raise ValueError(f"weights of partition {l} sum to {np.sum(w)!r}, not 1")
            w.setflags(write=False)
            ws.append(w)
        object.__setattr__(self, "weights", tuple(ws))

    @classmethod
    def from_mapping(cls, partition, d):
        """Build from a sparse ``{(l, i): weight}`` mapping."""
        ws = [np.zeros(s.size) for s in partition.sets]
        for (l, i), w in d.items():
            if partition.member_of[i] != l:
                raise ValueError(f"state {i} is not in partition {l}; weight must be 0")
            ws[l][partition.local_pos[i]] = w
        return cls(partition, tuple(ws))

    @classmethod
    def uniform(cls, partition):
        return cls(partition, tuple(np.full(s.size, 1.0 / s.size) for s in partition.sets))

    def weight(self, l, i):
        if self.partition.member_of[i] != l:
            return 0.0
        return float(self.weights[l][self.partition.local_pos[i]])

    def as_mapping(self):
        out = {}
        for l, s in enumerate(self.partition.sets):
            for i, w in zip(s.tolist(), self.weights[l].tolist()):
                if w != 0.0:
                    out[(l, i)] = w
        return out


def aggregate(disagg, l, V):
    """Aggregate value of partition ``l``: the d-weighted sum of ``V``.

    ``V`` is either an array aligned with ``partition.sets[l]`` or a
    mapping ``state -> value``. A mapping must cover every state with
    positive weight.
    """
    w = disagg.weights[l]
    if isinstance(V, dict):
        members = disagg.partition.sets[l]
        total = 0.0
        for i, wi in zip(members.tolist(), w.tolist()):
            if wi == 0.0:
                continue
            if i not in V:
                raise KeyError(f"no value for state {i} (weight {wi})")
            total += wi * V[i]
        return float(total)
    V = np.asarray(V, dtype=np.float64)
    if V.shape != w.shape:
        raise ValueError(f"local value vector of partition {l} needs {w.size} entries")
    return _dot(w, V)


def _dot(w, v):
    # left-to-right sum; keeps both kernel backends on identical aggregates
    total = 0.0
    for a, b in zip(w.tolist(), v.tolist()):
        total += a * b
    return total


def boundary_states(mdp, partition):
    """Per-partition sorted arrays of boundary states.

    A state is on the boundary if some action reaches a state of another
    partition with positive probability.
    """
    owner_row = np.repeat(np.arange(mdp.n), np.diff(mdp.state_ptr))
    owner_entry = np.repeat(owner_row, np.diff(mdp.row_ptr))
    crossing = partition.member_of[mdp.col] != partition.member_of[owner_entry]
    is_boundary = np.zeros(mdp.n, dtype=bool)
    is_boundary[owner_entry[crossing & (mdp.prob > 0)]] = True
    return [s[is_boundary[s]] for s in partition.sets]


def uniform_boundary_disaggregation(mdp, partition):
    """Uniform weights over each partition's boundary states.

    A partition without boundary states falls back to uniform weights over
    all its members, with an :class:`AggregationWarning`.
    """
    if partition.n != mdp.n:
        raise ValueError("partition and MDP disagree on the number of states")
    ws = []
    for l, (s, b) in enumerate(zip(partition.sets, boundary_states(mdp, partition))):
        w = np.zeros(s.size)
        if b.size == 0:
            warnings.warn(
                f"partition {l} has no boundary states; using uniform weights",
                AggregationWarning,
                stacklevel=2,
            )
            w[:] = 1.0 / s.size
        else:
            w[partition.local_pos[b]] = 1.0 / b.size
        ws.append(w)
    return Disaggregation(partition, tuple(ws))


def random_partition(n, q, rng):
    """Uniformly shuffled assignment with every partition nonempty."""
    if not 1 <= q <= n:
        raise ValueError("need 1 <= q <= n")
    rng = np.random.default_rng(rng)
    labels = np.concatenate([np.arange(q), rng.integers(0, q, size=n - q)])
    return Partition(rng.permutation(labels), q)


def random_disaggregation(partition, rng):
    rng = np.random.default_rng(rng)
    ws = []
    for s in partition.sets:
        w = rng.random(s.size) + 1e-3
        w /= w.sum()
        w[-1] = max(0.0, 1.0 - float(np.sum(w[:-1])))
        ws.append(w)
    return Disaggregation(partition, tuple(ws))


def kmeans_partition(points, q, seed=0, max_iters=100):
    """Lloyd's k-means on 2-D points, returned as a :class:`Partition`.

    Initial centers are ``q`` distinct input points drawn with ``seed``.
    Ties in assignment go to the lowest center index. An empty cluster
    steals the point farthest from its own center (taken from a cluster
    with more than one member). Partition labels are renumbered by the
    smallest member index so the result does not depend on center order.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    n = pts.shape[0]
    if q < 1 or q > n:
        raise ValueError(f"cannot form {q} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centers = pts[rng.choice(n, size=q, replace=False)].copy()
    labels = None
    for _ in range(max_iters):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        new = _repair_empty(new, d2, q)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(q):
            centers[c] = pts[labels == c].mean(axis=0)
    return Partition(_canonical_labels(labels, q), q)


def _repair_empty(labels, d2, q):
    labels = labels.copy()
    for c in range(q):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=q)
        own = d2[np.arange(labels.size), labels]
        own = np.where(counts[labels] > 1, own, -np.inf)
        labels[int(np.argmax(own))] = c
    return labels


def _canonical_labels(labels, q):
    first = [int(np.flatnonzero(labels == c)[0]) for c in range(q)]
    order = np.argsort(first, kind="stable")
    relabel = np.empty(q, dtype=np.int64)
    relabel[order] = np.arange(q)
    return relabel[labels]


# -- text formats ------------------------------------------------------------
#   partition:       "<state_index> <partition_index>" per line
#   disaggregation:  "<partition_index> <state_index> <weight>" per line (nonzero only)


def format_partition(partition):
    return "".join(f"{i} {l}\n" for i, l in enumerate(partition.member_of.tolist()))


def parse_partition(text):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 2:
            raise ValueError(f"line {lineno}: expected '<state> <partition>'")
        i, l = int(tok[0]), int(tok[1])
        if i in pairs:
            raise ValueError(f"line {lineno}: state {i} listed twice")
        pairs[i] = l
    n = len(pairs)
    if sorted(pairs) != list(range(n)):
        raise ValueError("partition file must list states 0..n-1 exactly once")
    member_of = np.array([pairs[i] for i in range(n)], dtype=np.int64)
    return Partition(member_of, int(member_of.max()) + 1)


def format_disaggregation(disagg):
    return "".join(f"{l} {i} {w!r}\n" for (l, i), w in disagg.as_mapping().items())


def parse_disaggregation(text, partition):
    d = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 3:
            raise ValueError(f"line {lineno}: expected '<partition> <state> <weight>'")
        d[(int(tok[0]), int(tok[1]))] = float(tok[2])
    return Disaggregation.from_mapping(partition, d)


def save_partition(partition, path):
    Path(path).write_text(format_partition(partition))


def load_partition(path):
    return parse_partition(Path(path).read_text())

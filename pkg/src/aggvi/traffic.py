"""Road networks: text format, speed sampling, and the routing MDP.

Network file grammar (one record per line, ``#`` starts a comment)::

    N <id> <x> <y>                      junction with planar coordinates (m)
    E <from> <to> <length> <limit>      directed road, length in m, limit in m/s
    A <id>                              access node (exactly one)

Ids are arbitrary whitespace-free tokens. State ``i`` of the routing MDP is
the ``i``-th retained ``N`` record.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .mdp import DiscountedMdp

SPEED_FRACTION = (0.25, 1.0)
BUNDLED_CITY = "grid_city.net"


class NetworkParseError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NetworkWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    node_ids: tuple
    xy: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    length: np.ndarray
    limit: np.ndarray
    access: int
    pruned: tuple = field(default=())

    @property
    def n_nodes(self):
        return len(self.node_ids)

    @property
    def n_edges(self):
        return int(self.src.size)

    @property
    def access_id(self):
        return self.node_ids[self.access]

    def out_edges(self, i):
        return np.flatnonzero(self.src == i)


@dataclass(frozen=True, eq=False)
class SpeedSample:
    speeds: np.ndarray
    seed: object = None


def parse_network(text):
    """Parse and validate a network; unreachable nodes are pruned with a warning."""
    nodes: dict[str, int] = {}
    ids, xy = [], []
    edges = []
    access = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        try:
            if kind == "N":
                if len(tok) != 4:
                    raise NetworkParseError("expected 'N <id> <x> <y>'", lineno)
                if tok[1] in nodes:
                    raise NetworkParseError(f"duplicate node {tok[1]!r}", lineno)
                x, y = float(tok[2]), float(tok[3])
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise NetworkParseError("non-finite coordinate", lineno)
                nodes[tok[1]] = len(ids)
                ids.append(tok[1])
                xy.append((x, y))
            elif kind == "E":
                if len(tok) != 5:
                    raise NetworkParseError("expected 'E <from> <to> <length> <limit>'", lineno)
                length, limit = float(tok[3]), float(tok[4])
                if not (length > 0 and math.isfinite(length)):
                    raise NetworkParseError("edge length must be positive", lineno)
                if not (limit > 0 and math.isfinite(limit)):
                    raise NetworkParseError("speed limit must be positive", lineno)
                edges.append((lineno, tok[1], tok[2], length, limit))
            elif kind == "A":
                if len(tok) != 2:
                    raise NetworkParseError("expected 'A <id>'", lineno)
                if access is not None:
                    raise NetworkParseError("more than one access line", lineno)
                access = (lineno, tok[1])
            else:
                raise NetworkParseError(f"unknown record type {kind!r}", lineno)
        except NetworkParseError:
            raise
        except ValueError as exc:
            raise NetworkParseError(str(exc), lineno) from None
    if access is None:
        raise NetworkParseError("missing access line 'A <id>'")
    if access[1] not in nodes:
        raise NetworkParseError(f"access node {access[1]!r} is not declared", access[0])
    src, dst, length, limit = [], [], [], []
    for lineno, a, b, ln, lim in edges:
        for end in (a, b):
            if end not in nodes:
                raise NetworkParseError(f"edge endpoint {end!r} is not declared", lineno)
        src.append(nodes[a])
        dst.append(nodes[b])
        length.append(ln)
        limit.append(lim)
    net = RoadNetwork(
        node_ids=tuple(ids),
        xy=np.asarray(xy, dtype=np.float64).reshape(-1, 2),
        src=np.asarray(src, dtype=np.int64),
        dst=np.asarray(dst, dtype=np.int64),
        length=np.asarray(length, dtype=np.float64),
        limit=np.asarray(limit, dtype=np.float64),
        access=nodes[access[1]],
    )
    return prune_unreachable(net)


def load_network(path):
    return parse_network(Path(path).read_text())


def bundled_city_path():
    return resources.files("aggvi").joinpath("data", BUNDLED_CITY)


def load_bundled_city():
    return parse_network(bundled_city_path().read_text())


def reaches_access(net):
    """Boolean mask of nodes with a directed path to the access node."""
    preds = [[] for _ in range(net.n_nodes)]
    for a, b in zip(net.src.tolist(), net.dst.tolist()):
        preds[b].append(a)
    seen = np.zeros(net.n_nodes, dtype=bool)
    seen[net.access] = True
    queue = deque([net.access])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if not seen[u]:
                seen[u] = True
                queue.append(u)
    return seen


def prune_unreachable(net):
    keep = reaches_access(net)
    if keep.all():
        return net
    dropped = tuple(net.node_ids[i] for i in np.flatnonzero(~keep))
    warnings.warn(
        f"pruned {len(dropped)} node(s) that cannot reach the access node: "
        + ", ".join(dropped[:10]) + (" ..." if len(dropped) > 10 else ""),
        NetworkWarning,
        stacklevel=3,
    )
    new_index = np.cumsum(keep) - 1
    emask = keep[net.src] & keep[net.dst]
    return RoadNetwork(
        node_ids=tuple(net.node_ids[i] for i in np.flatnonzero(keep)),
        xy=net.xy[keep],
        src=new_index[net.src[emask]],
        dst=new_index[net.dst[emask]],
        length=net.length[emask],
        limit=net.limit[emask],
        access=int(new_index[net.access]),
        pruned=net.pruned + dropped,
    )


def format_network(net):
    lines = [f"N {nid} {x!r} {y!r}" for nid, (x, y) in zip(net.node_ids, net.xy.tolist())]
    ids = net.node_ids
    lines.extend(
        f"E {ids[a]} {ids[b]} {ln!r} {lim!r}"
        for a, b, ln, lim in zip(net.src.tolist(), net.dst.tolist(), net.length.tolist(),
                                 net.limit.tolist())
    )
    lines.append(f"A {net.access_id}")
    return "\n".join(lines) + "\n"


def sample_speeds(net, seed):
    """Average edge speeds drawn uniformly in [25 %, 100 %] of the limit."""
    rng = np.random.default_rng(seed)
    lo, hi = SPEED_FRACTION
    return SpeedSample(rng.uniform(lo, hi, size=net.n_edges) * net.limit, seed)


def format_speeds(net, speeds):
    ids = net.node_ids
    return "".join(
        f"{ids[a]} {ids[b]} {s!r}\n"
        for a, b, s in zip(net.src.tolist(), net.dst.tolist(), speeds.speeds.tolist())
    )


def edge_costs(net, speeds):
    """Expected travel time per edge in seconds."""
    return net.length / speeds.speeds


def build_routing_mdp(net, speeds, alpha=0.9):
    """Shortest-time routing toward the access node as a discounted MDP.

    Each outgoing edge of a node is one action (numbered in file order)
    moving deterministically to the edge head at cost length / speed.
    The access node has a single zero-cost self-loop.
    """
    if speeds.speeds.shape != (net.n_edges,):
        raise ValueError("need exactly one speed per edge")
    if np.any(speeds.speeds <= 0):
        raise ValueError("sampled speeds must be positive")
    cost = edge_costs(net, speeds)
    records = [(net.access, 0, net.access, 1.0, 0.0)]
    counts = np.zeros(net.n_nodes, dtype=np.int64)
    for e, (a, b) in enumerate(zip(net.src.tolist(), net.dst.tolist())):
        if a == net.access:
            continue
        records.append((a, int(counts[a]), b, 1.0, float(cost[e])))
        counts[a] += 1
    dead = [net.node_ids[i] for i in np.flatnonzero(counts == 0) if i != net.access]
    if dead:
        raise ValueError(f"nodes without outgoing roads: {', '.join(dead[:10])}")
    return DiscountedMdp.from_transitions(net.n_nodes, alpha, records)


@dataclass(frozen=True)
class CityCounts:
    nodes: int
    edges: int


def generate_grid_city(rows=12, cols=25, seed=2022, spacing=120.0):
    """Jittered Manhattan-style city with arterials and one-way streets.

    Every fourth row and column is an arterial (13.4 m/s limit, always
    two-way); other streets are residential (8.9 m/s), about 15 % one-way
    and about 6 % missing. The access node is the south-east corner
    junction, where traffic leaves the city. Returns ``(text, counts)`` where ``counts`` describes
    the generated file before any pruning.
    """
    rng = np.random.default_rng(seed)
    xy = np.empty((rows, cols, 2))
    for r in range(rows):
        for c in range(cols):
            xy[r, c] = (c * spacing + rng.uniform(-25, 25), r * spacing + rng.uniform(-25, 25))

    def nid(r, c):
        return r * cols + c

    lines = []
    for r in range(rows):
        for c in range(cols):
            x, y = (round(float(v), 1) for v in xy[r, c])
            lines.append(f"N {nid(r, c)} {x!r} {y!r}")
    n_edges = 0
    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0)):
                r2, c2 = r + dr, c + dc
                if r2 >= rows or c2 >= cols:
                    continue
                arterial = (dr == 0 and r % 4 == 0) or (dc == 0 and c % 4 == 0)
                u = rng.random(3)
                if not arterial and u[0] < 0.06:
                    continue
                straight = float(np.hypot(*(xy[r2, c2] - xy[r, c])))
                length = round(straight * (1.0 + 0.15 * float(u[1])), 1)
                limit = 13.4 if arterial else 8.9
                a, b = nid(r, c), nid(r2, c2)
                if arterial or u[2] >= 0.15:
                    pairs = [(a, b), (b, a)]
                elif u[2] < 0.075:
                    pairs = [(a, b)]
                else:
                    pairs = [(b, a)]
                for s, t in pairs:
                    lines.append(f"E {s} {t} {length!r} {limit!r}")
                    n_edges += 1
    lines.append(f"A {nid(rows - 1, cols - 1)}")
    text = "# synthetic grid city, seed=%d, %dx%d\n" % (seed, rows, cols) + "\n".join(lines) + "\n"
    return text, CityCounts(rows * cols, n_edges)

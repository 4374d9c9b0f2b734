import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggvi.aggregation import (
    AggregationWarning,
    Disaggregation,
    Partition,
    aggregate,
    format_disaggregation,
    format_partition,
    kmeans_partition,
    parse_disaggregation,
    parse_partition,
    random_disaggregation,
    random_partition,
    uniform_boundary_disaggregation,
)
from aggvi.mdp import DiscountedMdp


def line_graph():
    # 0 - 1 | 2 - 3, two-way edges, one action per edge
    edges = [(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)]
    return graph_mdp(4, edges)


def graph_mdp(n, edges):
    counts = [0] * n
    recs = []
    for a, b in edges:
        recs.append((a, counts[a], b, 1.0, 1.0))
        counts[a] += 1
    for i in range(n):
        if counts[i] == 0:
            recs.append((i, 0, i, 1.0, 0.0))
    return DiscountedMdp.from_transitions(n, 0.9, recs)


def test_partition_from_sets_and_phi():
    p = Partition.from_sets([[2, 0], [1, 3]])
    assert p.q == 2 and p.n == 4
    np.testing.assert_array_equal(p.member_of, [0, 1, 0, 1])
    np.testing.assert_array_equal(p.sets[0], [0, 2])
    assert p.phi(2, 0) == 1.0 and p.phi(2, 1) == 0.0
    assert p.local_pos[3] == 1


@pytest.mark.parametrize(
    "sets, msg",
    [([[0, 1], [1, 2]], "more than one"), ([[0], [2]], "not covered"), ([[0, 1, 2], []], "empty")],
)
def test_partition_rejects_invalid_sets(sets, msg):
    with pytest.raises(ValueError, match=msg):
        Partition.from_sets(sets, n=3)


def test_aggregate_singleton():
    p = Partition.from_sets([[0]])
    assert aggregate(Disaggregation.uniform(p), 0, [5.0]) == 5.0


def test_aggregate_uniform_pair():
    p = Partition.from_sets([[0, 1]])
    assert aggregate(Disaggregation.uniform(p), 0, {0: 3.0, 1: 7.0}) == 5.0


def test_aggregate_weighted():
    p = Partition.from_sets([[0, 1, 2, 3]])
    d = Disaggregation.from_mapping(p, {(0, 0): 0.5, (0, 1): 0.25, (0, 2): 0.25})
    # 0.5*2 + 0.25*4 + 0.25*8 + 0*100
    assert aggregate(d, 0, [2.0, 4.0, 8.0, 100.0]) == 4.0
    # zero-weight states may be missing from a mapping
    assert aggregate(d, 0, {0: 2.0, 1: 4.0, 2: 8.0}) == 4.0


def test_aggregate_missing_positive_weight_state():
    p = Partition.from_sets([[0, 1]])
    with pytest.raises(KeyError):
        aggregate(Disaggregation.uniform(p), 0, {0: 1.0})


def test_disaggregation_invariants_enforced():
    p = Partition.from_sets([[0, 1], [2]])
    with pytest.raises(ValueError, match="sum"):
        Disaggregation(p, ([0.5, 0.4], [1.0]))
    with pytest.raises(ValueError, match="not in partition"):
        Disaggregation.from_mapping(p, {(0, 2): 1.0, (1, 2): 1.0})
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        Disaggregation(p, ([1.5, -0.5], [1.0]))
    assert Disaggregation(p, ([0.5, 0.5], [1.0])).weight(0, 2) == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_aggregate_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 20))
    p = random_partition(n, int(rng.integers(1, n + 1)), rng)
    d = random_disaggregation(p, rng)
    for l, s in enumerate(p.sets):
        V1, V2 = rng.normal(size=s.size), rng.normal(size=s.size)
        lhs = aggregate(d, l, a * V1 + b * V2)
        rhs = a * aggregate(d, l, V1) + b * aggregate(d, l, V2)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_boundary_singleton():
    mdp = line_graph()
    p = Partition.from_sets([[0, 1], [2, 3]])
    d = uniform_boundary_disaggregation(mdp, p)
    assert d.as_mapping() == {(0, 1): 1.0, (1, 2): 1.0}


def test_boundary_all_states_cross():
    # every state has an edge into the other partition
    mdp = graph_mdp(4, [(0, 2), (1, 3), (2, 0), (3, 1)])
    p = Partition.from_sets([[0, 1], [2, 3]])
    d = uniform_boundary_disaggregation(mdp, p)
    for l in range(2):
        np.testing.assert_array_equal(d.weights[l], [0.5, 0.5])


def test_boundary_fallback_warns():
    mdp = graph_mdp(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
    p = Partition.from_sets([[0, 1], [2, 3]])
    with pytest.warns(AggregationWarning, match="no boundary"):
        d = uniform_boundary_disaggregation(mdp, p)
    np.testing.assert_array_equal(d.weights[0], [0.5, 0.5])


@pytest.mark.parametrize("seed", range(6))
def test_boundary_matches_adjacency_scan(seed):
    rng = np.random.default_rng(seed)
    n = 6
    edges = sorted({(int(a), int(b)) for a, b in rng.integers(0, n, size=(9, 2)) if a != b})
    mdp = graph_mdp(n, edges)
    p = random_partition(n, 2, rng)
    d = uniform_boundary_disaggregation(mdp, p)
    for l in range(2):
        members = [i for i in range(n) if p.member_of[i] == l]
        boundary = [i for i in members if any(a == i and p.member_of[b] != l for a, b in edges)]
        chosen = boundary or members
        for i in members:
            expect = 1.0 / len(chosen) if i in chosen else 0.0
            assert d.weight(l, i) == pytest.approx(expect)


def test_kmeans_single_cluster():
    pts = np.random.default_rng(0).normal(size=(12, 2))
    p = kmeans_partition(pts, 1, seed=3)
    assert p.q == 1 and p.sets[0].size == 12


def test_kmeans_one_point_each():
    pts = np.random.default_rng(1).normal(size=(7, 2))
    p = kmeans_partition(pts, 7, seed=0)
    assert sorted(s.size for s in p.sets) == [1] * 7


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_separates_far_clouds(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, size=(10, 2))
    b = rng.uniform(0, 1, size=(10, 2)) + 100.0
    pts = np.vstack([a, b])[rng.permutation(20)]
    p = kmeans_partition(pts, 2, seed=seed)
    far = pts[:, 0] > 50
    for s in p.sets:
        assert np.all(far[s]) or not np.any(far[s])
    assert sorted(s.size for s in p.sets) == [10, 10]


def test_kmeans_repairs_empty_clusters():
    # duplicated points make an empty cluster likely after the first assignment
    pts = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0]] * 5)
    p = kmeans_partition(pts, 4, seed=0)
    assert p.q == 4 and all(s.size >= 1 for s in p.sets)


def test_kmeans_rejects_too_many_clusters():
    with pytest.raises(ValueError):
        kmeans_partition(np.zeros((3, 2)), 4)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000), n=st.integers(1, 40), data=st.data())
def test_kmeans_is_a_deterministic_partition(seed, n, data):
    q = data.draw(st.integers(1, n))
    pts = np.random.default_rng(seed).uniform(0, 10, size=(n, 2))
    p1 = kmeans_partition(pts, q, seed=seed)
    p2 = kmeans_partition(pts, q, seed=seed)
    assert p1 == p2
    covered = np.concatenate(p1.sets)
    assert sorted(covered.tolist()) == list(range(n))


def test_partition_file_round_trip():
    p = random_partition(15, 4, 2)
    text = format_partition(p)
    assert parse_partition(text) == p
    assert format_partition(parse_partition(text)) == text


def test_disaggregation_file_round_trip():
    p = random_partition(15, 4, 3)
    d = random_disaggregation(p, 4)
    text = format_disaggregation(d)
    again = parse_disaggregation(text, p)
    assert format_disaggregation(again) == text
    for l in range(p.q):
        assert again.weights[l].tobytes() == d.weights[l].tobytes()

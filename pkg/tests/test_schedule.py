import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggvi.schedule import (
    ScheduleError,
    all_pairs,
    first_disconnected_window,
    format_schedule,
    make_schedule_complete,
    make_schedule_custom,
    make_schedule_round_robin,
    parse_schedule,
)


def test_complete_three_agents_has_six_pairs():
    s = make_schedule_complete(3)
    assert len(s.edges(0)) == 6 and len(s.edges(17)) == 6
    assert s.neighbors(5, 1) == (0, 2)


def test_single_agent_has_no_edges():
    s = make_schedule_complete(1)
    assert s.edges(0) == frozenset() and s.neighbors(0, 0) == ()


def test_round_robin_two_agents_alternates():
    s = make_schedule_round_robin(2, 1)
    assert [sorted(s.edges(k)) for k in range(4)] == [[(0, 1)], [(1, 0)], [(0, 1)], [(1, 0)]]


def test_round_robin_zero_window_is_complete():
    s = make_schedule_round_robin(4, 0)
    assert s.edges(3) == frozenset(all_pairs(4))


def test_custom_missing_edge_names_window():
    # (1, 0) never appears
    with pytest.raises(ScheduleError, match="iteration 0") as info:
        make_schedule_custom([{(0, 1)}, {(0, 1)}], B=1, q=2)
    assert info.value.window == 0


def test_custom_window_that_wraps():
    # phases 0,1 cover both pairs but 1,2 do not
    sets = [{(0, 1)}, {(1, 0)}, {(1, 0)}]
    assert first_disconnected_window([frozenset(s) for s in sets], 2, 1) == 1
    with pytest.raises(ScheduleError) as info:
        make_schedule_custom(sets, B=1, q=2)
    assert info.value.window == 1


def test_rejects_self_loops_and_out_of_range_agents():
    with pytest.raises(ScheduleError):
        make_schedule_custom([{(0, 0), (0, 1), (1, 0)}], B=0, q=2)
    with pytest.raises(ScheduleError):
        make_schedule_custom([{(0, 2), (0, 1), (1, 0)}], B=0, q=2)


def test_file_round_trip():
    s = make_schedule_round_robin(3, 2)
    again = parse_schedule(format_schedule(s), 3, 2)
    assert again.edge_sets == s.edge_sets and again.kind == "custom"


def test_parse_rejects_bad_phase():
    with pytest.raises(ScheduleError, match="line 2"):
        parse_schedule("period 1\n1 0 1\n", 2, 0)


@settings(max_examples=50, deadline=None)
@given(q=st.integers(1, 7), B=st.integers(0, 12), start=st.integers(0, 100))
def test_round_robin_every_window_covers_all_pairs(q, B, start):
    s = make_schedule_round_robin(q, B)
    seen = set()
    for k in range(start, start + B + 1):
        seen |= s.edges(k)
    assert seen == set(all_pairs(q))
    # each pair exactly once per period
    counts = {}
    for k in range(s.period):
        for e in s.edges(k):
            counts[e] = counts.get(e, 0) + 1
    assert all(c == 1 for c in counts.values())

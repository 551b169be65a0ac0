from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import small_pair, tard
from gspkit.gsp import (
    CostFunction,
    DomainError,
    InfeasibleError,
    Job,
    Schedule,
    check_schedule,
    cost_at,
    deadline_feasible,
    edf_schedule,
    horizon,
    make_instance,
    optimal_completions,
    raw_total_cost,
    split_at_release_gaps,
    time_for_cost,
    total_cost,
    validate_gsp,
)
from gspkit.numbers import INF

ZERO = CostFunction("weighted-completion", weight=0)


def plain(*jobs):
    return make_instance([Job(k, r, p, ZERO) for k, (r, p) in enumerate(jobs)])


# cost oracles


def test_tardiness_values():
    fn = tard(2, 3)
    assert cost_at(fn, 5) == 4
    assert cost_at(fn, 3) == 0


def test_deadline_becomes_infinite():
    fn = CostFunction("hard-deadline", deadline=4)
    assert cost_at(fn, 4) == 0
    assert cost_at(fn, 5) is INF


def test_cost_before_domain_start_is_an_error():
    fn = make_instance([Job(0, 2, 1, tard(1, 3))]).jobs[0].cost
    with pytest.raises(DomainError):
        cost_at(fn, 1)


def test_time_for_cost_examples():
    assert time_for_cost(tard(2, 3), 4) == 5
    assert time_for_cost(tard(2, 3), 0) == 0
    step = CostFunction("piecewise-step", breakpoints=((0, 0), (4, 7)))
    assert time_for_cost(step, 5) == 4


def _some_cost_functions():
    return [
        CostFunction("weighted-completion", weight=2),
        CostFunction("weighted-flow", weight=3, start=1),
        tard(2, 3),
        CostFunction("weight-of-tardy", weight=5, due=2),
        CostFunction("hard-deadline", deadline=4),
        CostFunction("piecewise-step", breakpoints=((1, 1), (3, Fraction(5, 2)), (6, INF))),
    ]


@pytest.mark.parametrize("fn", _some_cost_functions(), ids=lambda f: f.kind)
def test_oracles_monotone_and_consistent(fn):
    prev = None
    for t in range(fn.start, 12):
        c = cost_at(fn, t)
        if prev is not None:
            assert prev <= c
        prev = c
        back = time_for_cost(fn, c)
        assert back is not None and back <= t


# feasibility and EDF


def test_feasibility_examples():
    assert not deadline_feasible(plain((0, 2), (0, 1)), (2, 2))
    assert deadline_feasible(plain((0, 2), (1, 1)), (4, 2))
    assert deadline_feasible(plain((0, 1)), (1,))


def test_edf_examples():
    s = edf_schedule(plain((0, 2), (1, 1)), (4, 2))
    assert s.segments == ((0, 0, 1), (1, 1, 2), (0, 2, 3))
    assert s.completions == (3, 2)
    with pytest.raises(InfeasibleError):
        edf_schedule(plain((0, 2), (0, 1)), (2, 2))
    one = edf_schedule(plain((0, 1)), (1,))
    assert one.segments == ((0, 0, 1),) and one.completions == (1,)


def test_edf_tie_break_prefers_smaller_id():
    s = edf_schedule(plain((0, 1), (0, 1)), (2, 2))
    assert s.segments[0][0] == 0


@st.composite
def small_instances(draw, n_max=4):
    n = draw(st.integers(1, n_max))
    jobs = [(draw(st.integers(0, 3)), draw(st.integers(1, 3))) for _ in range(n)]
    inst = plain(*jobs)
    T = horizon(inst)
    deadlines = tuple(draw(st.integers(r, T)) for r, _ in jobs)
    return inst, deadlines


@settings(max_examples=300, deadline=None)
@given(small_instances())
def test_edf_succeeds_exactly_when_condition_holds(case):
    inst, deadlines = case
    ok = deadline_feasible(inst, deadlines)
    try:
        s = edf_schedule(inst, deadlines)
    except InfeasibleError:
        assert not ok
        return
    assert ok
    assert check_schedule(inst, s) == []
    assert all(c <= d for c, d in zip(s.completions, deadlines))


# objective


def test_total_cost_of_the_pair():
    g = small_pair()
    assert total_cost(g, (3, 2)) == 3
    assert total_cost(g, (2, 3)) == 4


def test_on_time_tardiness_costs_nothing():
    g = small_pair()
    assert total_cost(g, (2, 1)) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(1, 3), st.integers(0, 3), st.integers(0, 6)),
                min_size=1, max_size=4), st.integers(0, 20))
def test_offset_telescopes(rows, extra):
    jobs = [Job(k, r, p, tard(w, d)) for k, (r, p, w, d) in enumerate(rows)]
    inst = make_instance(jobs)
    C = [j.r + j.p + extra for j in inst.jobs]
    assert total_cost(inst, C) + inst.cost_offset == raw_total_cost(inst, C)


def test_optimal_completions_of_the_pair():
    cost, C = optimal_completions(small_pair())
    assert cost == 3 and C == (3, 2)


# horizon, splitting, validation


def test_horizon_examples():
    assert horizon(small_pair()) == 8
    assert horizon(plain((0, 1))) == 2


def test_release_gap_split():
    inst = plain((0, 1), (10, 1))
    pieces = split_at_release_gaps(inst)
    assert [idx for _, idx in pieces] == [(0,), (1,)]
    assert len(split_at_release_gaps(small_pair())) == 1


def test_validate_examples():
    assert validate_gsp(small_pair()).ok
    bad = make_instance([Job(0, 0, 0, ZERO)])
    assert any("processing time must be positive" in v for v in validate_gsp(bad).violations)
    early = make_instance([Job(0, 3, 1, tard(2, 1))])
    diag = validate_gsp(early)
    assert diag.ok and diag.warnings
    assert early.cost_offset == 4


def test_check_schedule_reports_overlap_out_of_order():
    inst = plain((0, 2), (0, 2))
    s = Schedule(((1, 1, 3), (0, 0, 2)), (2, 3))
    assert any("overlap" in p for p in check_schedule(inst, s))

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import two_rows
from gspkit.gen import gen_rcp
from gspkit.rcp import (
    BudgetExceeded,
    RcpInstance,
    Ray,
    Rect,
    Subproblem,
    base_case_dp,
    brute_force,
    check_well_structured,
    coverage,
    exact_solve,
    is_feasible,
    prefix_closure,
    prefix_violations,
    round_costs,
    selection_cost,
    strip_compress,
    validate_rcp,
)

F = Fraction


def test_validate_two_rows(rows2):
    d = validate_rcp(rows2)
    assert d.ok
    assert (d.K, d.M, d.p_max) == (2, 2, 3)


def test_validate_flags_gap_and_zero_cost():
    gap = RcpInstance((Rect(0, 0, 1, 0, F(1), 1), Rect(1, 2, 3, 0, F(1), 1)), ())
    assert any("row not consecutive" in v for v in validate_rcp(gap).violations)
    free = RcpInstance((Rect(0, 0, 1, 0, F(0), 1),), ())
    assert any("costs strictly positive" in v for v in validate_rcp(free).violations)


def test_coverage_examples(rows2):
    ray = rows2.rays[0]
    assert coverage(rows2, [0, 1, 2], ray) == 5
    assert coverage(rows2, [], ray) == 0
    assert coverage(rows2, [0], ray) == 0


def test_feasibility_examples(rows2):
    assert is_feasible(rows2, [0, 1, 2])
    assert not is_feasible(rows2, [1, 2])
    assert prefix_violations(rows2, [1, 2]) == ["row 1: selection is not a prefix"]
    zero = RcpInstance(rows2.rects, (Ray(1, 2, 0),))
    assert is_feasible(zero, [])


def test_brute_force_examples(rows2):
    res = brute_force(rows2)
    assert res.selection == frozenset({0, 1, 2}) and res.cost == 4
    zero = RcpInstance(rows2.rects, (Ray(1, 2, 0),))
    assert brute_force(zero).selection == frozenset() and brute_force(zero).cost == 0
    big = RcpInstance(rows2.rects, (Ray(1, 2, 6),))
    assert not brute_force(big).feasible


def test_brute_force_budget(rows2):
    with pytest.raises(BudgetExceeded):
        brute_force(rows2, budget=5)


def test_exact_solver_matches_brute_force():
    for seed in range(150):
        inst = gen_rcp(seed, rows=4, width=6, feasible=seed % 3 != 0)
        a, b = brute_force(inst), exact_solve(inst)
        assert a.cost == b.cost, seed
        assert a.selection == b.selection, seed


def test_strip_compress_single_gap():
    inst = RcpInstance((Rect(0, 100, 102, 0, F(1), 1),), (Ray(0, 101, 1),))
    out, _ = strip_compress(inst)
    assert (out.rects[0].a, out.rects[0].b, out.rays[0].t) == (0, 2, 1)


def test_strip_compress_dense_is_identity(rows2):
    out, rank = strip_compress(rows2)
    assert out == rows2
    assert all(k == v for k, v in rank.items())


def test_strip_compress_two_clusters_keep_optimum():
    rects = (Rect(0, 0, 2, 0, F(2), 2), Rect(1, 2, 3, 0, F(1), 2), Rect(2, 40, 44, 1, F(3), 1), Rect(3, 44, 50, 1, F(1), 1))
    rays = (Ray(1, 1, 2), Ray(1, 45, 1), Ray(0, 2, 2))
    inst = RcpInstance(rects, rays)
    out, _ = strip_compress(inst)
    assert out.x_extent < inst.x_extent
    assert brute_force(out).cost == brute_force(inst).cost


def test_round_costs_threshold():
    rects = (Rect(0, 0, 1, 0, F(1), 1), Rect(1, 0, 1, 1, F(3), 1), Rect(2, 0, 1, 2, F(50), 1))
    inst = RcpInstance(rects, (Ray(2, 0, 3),))
    res = round_costs(inst, F(1, 2), 2)
    # threshold eps * 50 / 3 = 25/3: the two cheap rows are forced
    assert res.forced == frozenset({0, 1})
    assert [r.id for r in res.instance.rects] == [2]
    assert res.instance.rays[0].d == 1


def test_round_costs_equal_costs_give_one_value():
    inst = gen_rcp(3, rows=4, max_cost=1)
    res = round_costs(inst, F(1, 2), inst.rects[0].id)
    assert len({r.cost for r in res.instance.rects}) <= 1


def test_round_costs_discards_costlier_and_their_right():
    rects = (Rect(0, 0, 1, 0, F(4), 1), Rect(1, 1, 2, 0, F(9), 1), Rect(2, 2, 3, 0, F(1), 1))
    res = round_costs(RcpInstance(rects, ()), F(1, 2), 0)
    assert res.discarded == frozenset({1, 2})


def test_base_case_single_rect():
    sub = Subproblem(RcpInstance((Rect(0, 2, 3, 0, F(1), 2),), (Ray(0, 2, 2),)), 2, 3)
    res = base_case_dp(sub)
    assert res.selection == frozenset({0}) and res.cost == 1


def test_base_case_threads_outside_demand():
    rects = (Rect(0, 2, 3, 1, F(1), 2), Rect(1, 0, 1, 0, F(2), 3), Rect(2, 1, 3, 0, F(1), 3))
    inst = RcpInstance(rects, (Ray(0, 0, 2), Ray(1, 2, 4)))
    res = base_case_dp(Subproblem(inst, 2, 3))
    assert res.cost == brute_force(inst).cost == 4


def test_base_case_infeasible():
    sub = Subproblem(RcpInstance((Rect(0, 2, 3, 0, F(1), 2),), (Ray(0, 2, 3),)), 2, 3)
    assert not base_case_dp(sub).feasible


def test_base_case_needs_unit_width():
    with pytest.raises(ValueError):
        base_case_dp(Subproblem(RcpInstance((), ()), 0, 2))


def test_well_structured_examples():
    ok = RcpInstance((Rect(0, 4, 6, 0, F(1), 1),), ())
    assert check_well_structured(ok, F(1, 2)) == []
    bad = RcpInstance((Rect(0, 3, 8, 0, F(1), 1),), ())
    assert len(check_well_structured(bad, F(1, 2))) == 1
    unit = RcpInstance(tuple(Rect(k, k, k + 1, 0, F(1), 1) for k in range(5)), ())
    assert check_well_structured(unit, F(1, 32)) == []


def test_closure_examples(rows2):
    assert prefix_closure(rows2, {1}) == frozenset({0, 1})
    assert prefix_closure(rows2, {0, 2}) == frozenset({0, 2})


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_closure_idempotent_and_monotone(seed, data):
    inst = gen_rcp(seed, rows=4, width=8)
    ids = [r.id for r in inst.rects]
    small = set(data.draw(st.lists(st.sampled_from(ids), max_size=len(ids))))
    big = small | set(data.draw(st.lists(st.sampled_from(ids), max_size=len(ids))))
    once = prefix_closure(inst, small)
    assert prefix_closure(inst, once) == once
    assert small <= once and not prefix_violations(inst, once)
    assert once <= prefix_closure(inst, big)


def test_selection_cost(rows2):
    assert selection_cost(rows2, [0, 1, 2]) == 4


def test_base_case_matches_brute_force_sample():
    rng = random.Random(5)
    for _ in range(60):
        inst = gen_rcp(rng.randrange(10**6), rows=3, width=4)
        x = rng.randrange(0, 4)
        sub = Subproblem(inst, x, x + 1)
        assert base_case_dp(sub).cost == brute_force(inst).cost

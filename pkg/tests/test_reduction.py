import itertools
from fractions import Fraction

import pytest

from conftest import small_pair, tard
from gspkit.gen import GenSpec, gen_instance
from gspkit.gsp import CostFunction, Job, deadline_feasible, edf_schedule, horizon, make_instance, optimal_completions, total_cost
from gspkit.numbers import is_inf
from gspkit.rcp import check_well_structured, is_feasible, selection_cost
from gspkit.reduction import (
    MilestoneSequence,
    block_length,
    build_milestones,
    build_milestones_tardiness,
    build_rcp,
    build_tau,
    completions_to_selection,
    k_bound,
    milestone_violations,
    selection_to_completions,
    solve_gsp,
    unpadded_cost,
)

HALF = Fraction(1, 2)


def norm(job):
    return make_instance([job]).jobs[0]


def forward_factor(eps):
    return (1 + eps) * (1 + 6 * eps) * (1 + eps) ** 2


# milestones


def test_milestones_tardiness_ramp():
    job = norm(Job(0, 0, 1, tard(1, 0)))
    assert build_milestones(job, 1, 16).m == (0, 2, 6, 14, 16)


def test_milestones_hard_deadline():
    job = norm(Job(0, 0, 1, CostFunction("hard-deadline", deadline=5)))
    for eps in (1, HALF, Fraction(1, 4)):
        assert build_milestones(job, eps, 16).m == (0, 5, 16)


def test_milestones_zero_cost():
    job = norm(Job(0, 3, 1, CostFunction("weighted-completion", weight=0)))
    assert build_milestones(job, HALF, 16).m == (3, 16)


def test_grid_milestones_due_at_release():
    job = norm(Job(0, 0, 1, tard(1, 0)))
    ms = build_milestones_tardiness(job, HALF, 16)
    assert ms.m == (0, 0, 1, 2, 3, 4, 6, 8, 12, 16)
    assert milestone_violations(job, ms, HALF, 16, tardiness=True) == []


def test_grid_milestones_translate_with_due_date():
    job = norm(Job(0, 0, 1, tard(3, 5)))
    ms = build_milestones_tardiness(job, HALF, 32)
    assert ms.m == (0, 5, 6, 7, 8, 9, 11, 13, 16, 20, 24, 32)
    assert milestone_violations(job, ms, HALF, 32, tardiness=True) == []


def test_grid_milestones_due_at_horizon():
    job = norm(Job(0, 1, 1, tard(2, 16)))
    ms = build_milestones_tardiness(job, HALF, 16)
    assert ms.m == (1, 16) and ms.f == 1


def test_grid_milestones_need_dyadic_eps():
    with pytest.raises(ValueError):
        build_milestones_tardiness(norm(Job(0, 0, 1, tard(1, 0))), Fraction(1, 3), 16)


@pytest.mark.parametrize("eps", [1, HALF, Fraction(1, 4)])
def test_generated_jobs_satisfy_milestone_properties(eps):
    for seed in range(40):
        inst = gen_instance(GenSpec(n=3, seed=seed))
        T = horizon(inst)
        for job in inst.jobs:
            ms = build_milestones(job, eps, T)
            assert milestone_violations(job, ms, eps, T) == [], (seed, job)


# block offsets


def _linear_milestones(f):
    job = norm(Job(0, 0, 1, CostFunction("weighted-completion", weight=1)))
    return job, MilestoneSequence(0, tuple(range(f + 1)))


def test_tau_without_large_jumps():
    job, ms = _linear_milestones(25)
    assert build_tau([job], [ms], 3, HALF)[0].tau == (1, 11, 19)


def test_tau_inserts_large_jump():
    bps = tuple((t, t) for t in range(1, 6)) + tuple((t, 94 + t) for t in range(6, 27))
    job = norm(Job(0, 0, 1, CostFunction("piecewise-step", breakpoints=bps)))
    ms = MilestoneSequence(0, tuple(range(26)))
    assert build_tau([job], [ms], 3, HALF)[0].tau == (1, 5, 11, 19)


def test_tau_block_length_one():
    job, ms = _linear_milestones(5)
    assert block_length(1) == 1
    assert build_tau([job], [ms], 1, 1)[0].tau == (1, 2, 3, 4, 5)


def test_tau_offset_range_checked():
    job, ms = _linear_milestones(5)
    with pytest.raises(ValueError):
        build_tau([job], [ms], 9, HALF)


# building the covering instance


def _build(inst, eps, S=1, tardiness=False):
    T = horizon(inst)
    make = build_milestones_tardiness if tardiness else build_milestones
    ms = [make(j, eps, T) for j in inst.jobs]
    taus = build_tau(inst.jobs, ms, S, eps)
    return build_rcp(inst, ms, taus, eps)


def test_zero_demand_ray_dropped():
    rcp, vm = _build(small_pair(), 1)
    assert (0, 3) not in vm.ray_origin


def test_demand_from_load():
    w = CostFunction("weighted-completion", weight=1)
    inst = make_instance([Job(0, 0, 2, w), Job(1, 0, 2, w)])
    rcp, vm = _build(inst, 1)
    k = vm.ray_origin.index((0, 3))
    assert rcp.rays[k].d == 1


def test_free_first_interval_is_not_a_rectangle():
    inst = make_instance([Job(0, 0, 1, tard(1, 3)), Job(1, 0, 2, tard(1, 0))])
    rcp, vm = _build(inst, 1)
    assert vm.status[(0, 0)] == ("forced",)
    assert all(vm.origin[r.id][0] != 0 or r.a >= 3 for r in rcp.rects)
    assert any(red >= 1 for s, t, red in vm.reductions if t < 3)


def test_rows_are_prefix_structured_and_k_bounded():
    for seed in range(30):
        inst = gen_instance(GenSpec(n=3, seed=seed))
        for eps in (1, HALF):
            rcp, vm = _build(inst, eps)
            for row in rcp.rows.values():
                assert len(row) <= 2 * block_length(eps)
                lo = min(r.cost for r in row)
                assert sum(r.cost for r in row) / lo <= k_bound(eps, len(row))


def test_tardiness_rectangles_on_grid():
    for seed in range(30):
        inst = gen_instance(GenSpec(n=3, seed=seed, mix={"tardiness": 1}))
        for eps in (HALF, Fraction(1, 4)):
            rcp, _ = _build(inst, eps, tardiness=True)
            assert check_well_structured(rcp, eps / 32) == []


# mapping solutions both ways


def _feasible_vectors(inst):
    T = horizon(inst)
    ranges = [range(j.r + j.p, T + 1) for j in inst.jobs]
    for C in itertools.product(*ranges):
        if deadline_feasible(inst, C):
            yield C


def test_round_trip_never_increases_cost():
    for seed in range(12):
        inst = gen_instance(GenSpec(n=2, p_max=2, r_max=2, seed=seed))
        for S in (1, 2):
            rcp, vm = _build(inst, HALF, S)
            for C in _feasible_vectors(inst):
                if is_inf(total_cost(inst, C)):
                    continue
                sel = completions_to_selection(vm, C)
                assert is_feasible(rcp, sel), (seed, S, C)
                back = selection_to_completions(vm, sel, rcp)
                assert deadline_feasible(inst, back)
                assert total_cost(inst, back) <= unpadded_cost(vm, sel) + vm.fixed_cost <= selection_cost(rcp, sel) + vm.fixed_cost


def test_empty_selection_maps_to_first_milestones():
    inst = make_instance([Job(0, 0, 1, tard(1, 4))])
    rcp, vm = _build(inst, 1)
    assert all(r.d == 0 for r in rcp.rays)
    assert selection_to_completions(vm, frozenset(), rcp) == (vm.milestones[0][1],)


def test_all_late_selects_everything():
    inst = small_pair()
    rcp, vm = _build(inst, HALF)
    T = horizon(inst)
    assert completions_to_selection(vm, (T, T)) == frozenset(r.id for r in rcp.rects)


def test_infeasible_selection_refused():
    inst = make_instance([Job(0, 0, 2, tard(1, 0)), Job(1, 0, 2, tard(1, 0))])
    rcp, vm = _build(inst, 1)
    assert rcp.rays
    with pytest.raises(ValueError):
        selection_to_completions(vm, frozenset(), rcp)


def test_forward_bound_on_the_pair():
    inst = small_pair()
    best = min(
        selection_cost(rcp, completions_to_selection(vm, (3, 2))) + vm.fixed_cost
        for rcp, vm in (_build(inst, HALF, S) for S in range(1, 9))
    )
    assert best <= forward_factor(HALF) * 3


def test_solve_pair_exact():
    sol = solve_gsp(small_pair(), HALF)
    assert 3 <= sol.cost <= forward_factor(HALF) * 3
    assert sol.schedule is not None


def test_solve_single_job():
    inst = make_instance([Job(0, 2, 3, tard(2, 1))])
    sol = solve_gsp(inst, HALF)
    assert sol.schedule.completions == (5,)
    assert sol.cost == total_cost(inst, (5,))


def test_solve_feasible_deadlines_costs_nothing():
    inst = make_instance([Job(k, r, p, CostFunction("hard-deadline", deadline=d))
                          for k, (r, p, d) in enumerate([(0, 2, 4), (1, 1, 2), (0, 1, 5)])])
    sol = solve_gsp(inst, HALF)
    assert sol.cost == 0
    assert all(c <= d for c, d in zip(sol.schedule.completions, (4, 2, 5)))


def test_solve_matches_brute_force_bound_on_random_instances():
    eps = HALF
    for seed in range(15):
        inst = gen_instance(GenSpec(n=3, seed=seed))
        opt, _ = optimal_completions(inst)
        sol = solve_gsp(inst, eps)
        assert opt <= sol.cost <= forward_factor(eps) * opt
        edf_schedule(inst, sol.schedule.completions)

"""From scheduling to rectangle covering and back.

Each job's time axis is cut at milestones, times where its cost has grown by
about a (1+eps) factor.  Milestone intervals become rectangles, grouped into
rows ("blocks") whose boundaries depend on an offset S.  Rays encode the
interval-load condition that decides whether completion times can be met.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Optional, Sequence

from .gsp import (
    GspInstance,
    InfeasibleError,
    Job,
    Schedule,
    cost_at,
    edf_schedule,
    horizon,
    last_time_at_most,
    split_at_release_gaps,
    total_cost,
)
from .numbers import INF, as_fraction, is_inf, log2_floor
from .rcp import RcpInstance, Ray, Rect, is_feasible, prefix_violations, uncovered_rays


@dataclass(frozen=True)
class MilestoneSequence:
    job: int
    m: tuple

    @property
    def f(self) -> int:
        return len(self.m) - 1


def build_milestones(job: Job, eps, T: int) -> MilestoneSequence:
    """Each next milestone is the last time whose cost stays within (1+eps)
    of the cost one step after the previous milestone."""
    eps = as_fraction(eps)
    fn = job.cost
    m = [job.r]
    while m[-1] < T:
        prev = m[-1]
        cap = (1 + eps) * cost_at(fn, prev + 1)
        m.append(last_time_at_most(fn, cap, prev + 1, T))
    return MilestoneSequence(job.id, tuple(m))


def _check_dyadic(eps: Fraction) -> None:
    inv = 1 / eps
    if inv.denominator != 1 or inv.numerator & (inv.numerator - 1):
        raise ValueError("eps must be 2^-k for the tardiness milestones")


def build_milestones_tardiness(job: Job, eps, T: int) -> MilestoneSequence:
    """Milestones for w*max(t-d, 0) whose gaps sit on a dyadic grid.

    After the due date, the next milestone is the second grid point past the
    current one, on the grid (eps/2)*2^h with 2^h <= m - d < 2^(h+1).  Right
    at the due date that exponent is undefined and the next milestone is d+1.
    """
    eps = as_fraction(eps)
    _check_dyadic(eps)
    fn = job.cost
    if fn.kind != "weighted-tardiness":
        raise ValueError("tardiness milestones need a weighted-tardiness cost")
    d = fn.due
    if d < job.r:
        raise ValueError("due date before release; normalize the instance first")
    m = [job.r, min(d, T)]
    while m[-1] < T:
        cur = m[-1]
        if cur == d:
            nxt = d + 1
        else:
            g = eps / 2 * Fraction(2) ** log2_floor(cur - d)
            second = g * (cur // g + 2) if (cur / g).denominator == 1 else g * (ceil(cur / g) + 1)
            nxt = max(cur + 1, ceil(second))
        m.append(min(nxt, T))
    return MilestoneSequence(job.id, tuple(m))


def milestone_violations(job: Job, ms: MilestoneSequence, eps, T: int, tardiness: bool = False) -> list[str]:
    """Check the milestone properties; returns human-readable violations.

    Two exemptions are structural rather than loosening: with a due date at
    the release the first two milestones coincide, so the growth condition
    for the very first interval compares a value with itself; and a zero
    weight makes every cost zero so no growth is possible.
    """
    eps = as_fraction(eps)
    fn = job.cost
    m = ms.m
    f = ms.f
    c = lambda t: cost_at(fn, t)  # noqa: E731
    out = []
    if m[0] != job.r:
        out.append("first milestone is not the release time")
    if m[-1] != T:
        out.append("last milestone is not the horizon")
    for i in range(f):
        if m[i + 1] <= m[i] and not (tardiness and i == 0 and m[0] == m[1]):
            out.append(f"milestones not increasing at {i}")
    for i in range(f):
        if not c(m[i + 1]) <= (1 + eps) * c(m[i] + 1):
            out.append(f"growth cap fails at {i}")
    zero_weight = tardiness and fn.weight == 0
    for i in range(f - 1):
        if zero_weight or (tardiness and i == 0 and m[0] == m[1]):
            continue
        if not c(m[i + 1] + 1) > (1 + eps / 4) * c(m[i] + 1):
            out.append(f"growth floor fails at {i}")
    if tardiness:
        if f >= 1 and m[1] != min(fn.due, T):
            out.append("second milestone is not the due date")
        delta = eps / 32
        for i in range(1, f):
            gap = m[i + 1] - m[i]
            unit = delta * Fraction(2) ** (gap.bit_length() - 1)
            for x in (m[i], m[i + 1]):
                if (Fraction(x) / unit).denominator != 1:
                    out.append(f"grid alignment fails at {i}: {x} not in {unit}Z")
                    break
    return out


@dataclass(frozen=True)
class TauSequence:
    job: int
    S: int
    tau: tuple


def block_length(eps) -> int:
    inv = 1 / as_fraction(eps)
    if inv.denominator != 1:
        raise ValueError("1/eps must be an integer")
    return inv.numerator ** 3


def is_large_jump(job: Job, ms: MilestoneSequence, i: int, eps) -> bool:
    """Cost more than multiplies by 1/eps from milestone i to i+1."""
    eps = as_fraction(eps)
    a = cost_at(job.cost, ms.m[i])
    b = cost_at(job.cost, ms.m[i + 1])
    if is_inf(b):
        return not is_inf(a)
    return b * eps > a


def build_tau(jobs: Sequence[Job], milestones: Sequence[MilestoneSequence], S: int, eps) -> list[TauSequence]:
    L = block_length(eps)
    if not 1 <= S <= L:
        raise ValueError(f"offset S={S} outside 1..{L}")
    out = []
    for job, ms in zip(jobs, milestones):
        f = ms.f
        tau = {1}
        k = 2
        while S + (k - 1) * L <= f:
            tau.add(S + (k - 1) * L)
            k += 1
        tau.update(i for i in range(1, f) if is_large_jump(job, ms, i, eps))
        out.append(TauSequence(job.id, S, tuple(sorted(tau))))
    return out


@dataclass
class VarMap:
    """How milestone intervals (job, i) became rectangles.

    status[(j, i)] is one of ("rect", id), ("merged", id),
    ("removed-zero-cost",), ("forced",), ("dropped-infinite",).
    Forced intervals start at or before the release and are part of every
    schedule; their cost is collected in ``fixed_cost``.
    """

    milestones: dict  # job id -> tuple of milestone times
    status: dict = field(default_factory=dict)
    origin: dict = field(default_factory=dict)  # rect id -> (job, (i, ...))
    unpadded: dict = field(default_factory=dict)  # rect id -> cost before padding
    fixed_cost: object = Fraction(0)
    ray_origin: list = field(default_factory=list)  # per ray: (s time, t)
    reductions: list = field(default_factory=list)  # (s time, t, amount)
    row_of_job: dict = field(default_factory=dict)  # job id -> list of row indices


def _job_order(instance: GspInstance) -> list[int]:
    return sorted(range(instance.n), key=lambda q: (instance.jobs[q].r, q))


def build_rcp(instance: GspInstance, milestones: Sequence[MilestoneSequence], taus: Sequence[TauSequence], eps) -> tuple[RcpInstance, VarMap]:
    """Rectangles, rays and the variable map for one offset S.

    The first interval [r, m_1) is always part of a schedule, so it opens
    the first block and is charged as a fixed cost (cost(m_1), zero for
    tardiness).  Index 1 starts a new block only when it is a large jump.
    """
    eps = as_fraction(eps)
    jobs = instance.jobs
    vm = VarMap({ms.job: ms.m for ms in milestones})
    ms_of = {ms.job: ms for ms in milestones}
    tau_of = {t.job: t for t in taus}
    order = _job_order(instance)

    # rows in top-down order; each entry: (job index, list of (cost, i-list))
    rows: list[tuple[int, list, Fraction]] = []
    first_row_of = {}
    removed: list[tuple[int, int]] = []  # (job, i) covering rays as if chosen
    for q in order:
        job = jobs[q]
        ms = ms_of[job.id]
        m = ms.m
        f = ms.f
        c = lambda t: cost_at(job.cost, t)  # noqa: E731
        heads = {0} | {h for h in tau_of[job.id].tau if h > 1 and h < f}
        if f > 1 and is_large_jump(job, ms, 1, eps):
            heads.add(1)
        heads = sorted(heads)
        first_row_of[q] = len(rows)
        vm.row_of_job[job.id] = []
        for b, h in enumerate(heads):
            end = heads[b + 1] if b + 1 < len(heads) else f
            block = []
            for i in range(h, end):
                hi = c(m[i + 1])
                if is_inf(hi):
                    val = INF
                elif i == h:
                    val = hi
                else:
                    val = hi - c(m[i])
                block.append((i, val))
            anchor = Fraction(0)
            # forced intervals: start at or before the release
            while block and m[block[0][0]] <= job.r:
                i, val = block.pop(0)
                vm.status[(job.id, i)] = ("forced",)
                vm.fixed_cost = vm.fixed_cost + val
                removed.append((q, i))
                if not is_inf(val):
                    anchor += val
            # unreachable at finite cost: drop with everything to the right
            for k, (i, val) in enumerate(block):
                if is_inf(val):
                    for i2, _ in block[k:]:
                        vm.status[(job.id, i2)] = ("dropped-infinite",)
                    block = block[:k]
                    break
            # free leading intervals are always worth taking
            while block and block[0][1] == 0:
                i, _ = block.pop(0)
                vm.status[(job.id, i)] = ("removed-zero-cost",)
                removed.append((q, i))
            merged: list[tuple[Fraction, list[int]]] = []
            for i, val in block:
                if val == 0:
                    merged[-1][1].append(i)
                else:
                    merged.append((val, [i]))
            if merged:
                rows.append((q, merged, anchor))
    n_rows = len(rows)
    rects = []
    rid = 0
    for P, (q, merged, anchor) in enumerate(rows):
        job = jobs[q]
        m = ms_of[job.id].m
        y = n_rows - P
        vm.row_of_job[job.id].append(y)
        size = len(merged)
        base = anchor if anchor > 0 else merged[0][0]
        pad = eps / size * base
        for val, idx in merged:
            a, b = m[idx[0]], m[idx[-1] + 1]
            rects.append(Rect(rid, a, b, y, val + pad, job.p))
            vm.origin[rid] = (job.id, tuple(idx))
            vm.unpadded[rid] = val
            vm.status[(job.id, idx[0])] = ("rect", rid)
            for i in idx[1:]:
                vm.status[(job.id, i)] = ("merged", rid)
            rid += 1
    # apex row for "all jobs released at or after s"
    pos_of = {q: k for k, q in enumerate(order)}
    T = max(ms.m[-1] for ms in milestones) if milestones else 0
    releases = sorted({j.r for j in jobs})
    events = set(releases)
    for ms in milestones:
        events.update(ms.m)
    ts = sorted({e for e in events} | {e + 1 for e in events})
    rays: dict = {}
    for s in releases:
        first = next(q for q in order if jobs[q].r >= s)
        k = pos_of[first]
        later = order[k:]
        # top row of those jobs: first row position belonging to them
        start = next((P for P, (q, _, _) in enumerate(rows) if pos_of[q] >= k), n_rows)
        apex = n_rows - start
        for t in ts:
            if not s < t <= T:
                continue
            dem = sum(jobs[q].p for q in later if jobs[q].r < t) - (t - s)
            red = 0
            for q, i in removed:
                if pos_of[q] < k or not jobs[q].r < t:
                    continue
                m = ms_of[jobs[q].id].m
                if m[i] <= t < m[i + 1]:
                    red += jobs[q].p
            if red:
                vm.reductions.append((s, t, red))
            dem -= red
            if dem > 0:
                key = (apex, t)
                if rays.get(key, (0,))[0] < dem:
                    rays[key] = (dem, s)
    ray_list = []
    for (apex, t), (dem, s) in sorted(rays.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ray_list.append(Ray(apex, t, dem))
        vm.ray_origin.append((s, t))
    return RcpInstance(tuple(rects), tuple(ray_list)), vm


def selection_to_completions(vm: VarMap, selection, instance: Optional[RcpInstance] = None) -> tuple[int, ...]:
    """C_j = m_{l+1} for the largest interval index l taken for job j."""
    sel = set(selection)
    if instance is not None:
        problems = prefix_violations(instance, sel)
        problems += [f"ray {ray} covered {got} < {ray.d}" for ray, got in uncovered_rays(instance, sel)]
        if problems:
            raise ValueError("selection does not solve the instance: " + "; ".join(problems))
    last = {j: 0 for j in vm.milestones}
    for (j, i), st in vm.status.items():
        taken = st[0] in ("forced", "removed-zero-cost") or (st[0] in ("rect", "merged") and st[1] in sel)
        if taken:
            last[j] = max(last[j], i)
    out = []
    for j in sorted(vm.milestones):
        out.append(vm.milestones[j][last[j] + 1])
    return tuple(out)


def completions_to_selection(vm: VarMap, completions: Sequence[int]) -> frozenset:
    """Take every rectangle whose interval starts before the completion."""
    out = set()
    for rid, (j, idx) in vm.origin.items():
        if vm.milestones[j][idx[0]] < completions[j]:
            out.add(rid)
    return frozenset(out)


def unpadded_cost(vm: VarMap, selection) -> Fraction:
    return sum((vm.unpadded[i] for i in selection), Fraction(0))


def k_bound(eps, width: int) -> Fraction:
    """Row cost ratio bound implied by the construction for a row of this width."""
    eps = as_fraction(eps)
    w = Fraction(width)
    return w * ((1 / eps) ** width + eps / w) / (eps / w)


@dataclass
class OffsetReport:
    S: int
    rows: int
    rects: int
    rays: int
    rcp_cost: Optional[Fraction]  # padded, as solved
    selection_cost: Optional[object]  # unpadded + fixed
    schedule_cost: Optional[object]
    detail: dict = field(default_factory=dict)


@dataclass
class GspSolution:
    schedule: Optional[Schedule]
    cost: object  # total normalized cost (INF when infeasible)
    best_S: Optional[int]
    offsets: list
    mode: str

    def as_dict(self):
        from .numbers import format_cost

        return {
            "mode": self.mode,
            "cost": format_cost(self.cost),
            "best_S": self.best_S,
            "offsets": [
                {
                    "S": o.S,
                    "rows": o.rows,
                    "rects": o.rects,
                    "rays": o.rays,
                    "rcp_cost": None if o.rcp_cost is None else format_cost(o.rcp_cost),
                    "selection_cost": None if o.selection_cost is None else format_cost(o.selection_cost),
                    "schedule_cost": None if o.schedule_cost is None else format_cost(o.schedule_cost),
                    **o.detail,
                }
                for o in self.offsets
            ],
        }


RCP_MODES = ("exact", "approx-oracle", "approx-exhaustive", "tardiness")


def _solve_rcp(rcp: RcpInstance, eps, mode: str, caps: Optional[dict]):
    """Returns (selection or None, detail dict)."""
    from .rcp import exact_solve

    if mode == "exact":
        res = exact_solve(rcp)
        return res.selection, {}
    if mode in ("approx-oracle", "approx-exhaustive"):
        from .approx import solve_rcp

        out = solve_rcp(rcp, eps, mode=mode, caps=caps)
        return out.selection, {
            "reference_cost": None if out.reference_cost is None else str(out.reference_cost),
            "certificates_ok": all(c.ok for c in out.certificates),
            "truncated": out.truncated,
        }
    if mode == "tardiness":
        from .tardiness import solve_tardiness_instance

        out = solve_tardiness_instance(rcp, eps, mode="oracle", caps=caps)
        return out.selection, {
            "reference_cost": None if out.reference_cost is None else str(out.reference_cost),
            "certificates_ok": out.certificates_ok,
            "groups": [g.as_dict() for node in out.nodes for g in node.groups],
        }
    raise ValueError(f"unknown rcp mode {mode!r}")


def solve_gsp(instance: GspInstance, eps, mode: str = "exact", caps: Optional[dict] = None, offsets=None) -> GspSolution:
    """Try every block offset S, solve the covering instance, lift, keep the best."""
    eps = as_fraction(eps)
    pieces = split_at_release_gaps(instance)
    if len(pieces) > 1:
        return _solve_pieces(instance, pieces, eps, mode, caps, offsets)
    jobs = instance.jobs
    if not jobs:
        return GspSolution(Schedule((), ()), Fraction(0), None, [], mode)
    T = horizon(instance)
    if mode == "tardiness":
        milestones = [build_milestones_tardiness(j, eps, T) for j in jobs]
    else:
        milestones = [build_milestones(j, eps, T) for j in jobs]
    L = block_length(eps)
    best = None
    reports = []
    for S in offsets or range(1, L + 1):
        taus = build_tau(jobs, milestones, S, eps)
        rcp, vm = build_rcp(instance, milestones, taus, eps)
        rep = OffsetReport(S, len(rcp.rows), len(rcp.rects), len(rcp.rays), None, None, None)
        reports.append(rep)
        if is_inf(vm.fixed_cost):
            continue
        sel, detail = _solve_rcp(rcp, eps, mode, caps)
        rep.detail.update(detail)
        if sel is None:
            continue
        rep.rcp_cost = sum((rcp.by_id[i].cost for i in sel), Fraction(0))
        rep.selection_cost = unpadded_cost(vm, sel) + vm.fixed_cost
        C = selection_to_completions(vm, sel, rcp)
        try:
            sched = edf_schedule(instance, C)
        except InfeasibleError:  # pragma: no cover - would contradict the reduction
            rep.detail["lift_error"] = "completion times not schedulable"
            continue
        cost = total_cost(instance, sched.completions)
        rep.schedule_cost = cost
        if best is None or cost < best[0]:
            best = (cost, sched, S)
    if best is None:
        return GspSolution(None, INF, None, reports, mode)
    return GspSolution(best[1], best[0], best[2], reports, mode)


def _solve_pieces(instance, pieces, eps, mode, caps, offsets) -> GspSolution:
    segs = []
    comps = [0] * instance.n
    total = Fraction(0)
    reports = []
    for piece, idx in pieces:
        sol = solve_gsp(piece, eps, mode, caps, offsets)
        reports.extend(sol.offsets)
        if sol.schedule is None:
            return GspSolution(None, INF, None, reports, mode)
        total = total + sol.cost
        for j, a, b in sol.schedule.segments:
            segs.append((idx[j], a, b))
        for k, c in enumerate(sol.schedule.completions):
            comps[idx[k]] = c
    segs.sort(key=lambda s: s[1])
    return GspSolution(Schedule(tuple(segs), tuple(comps)), total, None, reports, mode)

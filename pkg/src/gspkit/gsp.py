"""Single-machine preemptive scheduling model: cost oracles, EDF, horizon."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import ceil
from typing import Optional, Sequence

from .numbers import INF, Cost, as_fraction, is_inf

KINDS = (
    "weighted-completion",
    "weighted-flow",
    "weighted-tardiness",
    "weight-of-tardy",
    "hard-deadline",
    "piecewise-step",
)

# short names accepted on input
KIND_ALIASES = {
    "completion": "weighted-completion",
    "flow": "weighted-flow",
    "tardiness": "weighted-tardiness",
    "tardy": "weight-of-tardy",
    "deadline": "hard-deadline",
    "step": "piecewise-step",
}

# time_for_cost result when the cost never reaches the query
NEVER = None


class DomainError(ValueError):
    pass


class InfeasibleError(Exception):
    """No schedule meets the requested deadlines."""


@dataclass(frozen=True)
class CostFunction:
    """Nondecreasing completion-cost function.

    ``shift`` is subtracted from the raw formula so that the cost at the
    domain start (the job's release) is zero after normalization.
    """

    kind: str
    weight: int = 0
    due: int = 0
    deadline: int = 0
    breakpoints: tuple = ()
    start: int = 0
    shift: Fraction = Fraction(0)
    clamped_due: Optional[int] = None  # original due date if it was raised to r

    def __post_init__(self):
        kind = KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "shift", as_fraction(self.shift))
        bps = tuple((int(t), c if is_inf(c) else as_fraction(c)) for t, c in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)


def _raw(fn: CostFunction, t: int) -> Cost:
    k = fn.kind
    if k == "weighted-completion":
        return Fraction(fn.weight * t)
    if k == "weighted-flow":
        return Fraction(fn.weight * (t - fn.start))
    if k == "weighted-tardiness":
        return Fraction(fn.weight * max(t - fn.due, 0))
    if k == "weight-of-tardy":
        return Fraction(fn.weight if t > fn.due else 0)
    if k == "hard-deadline":
        return Fraction(0) if t <= fn.deadline else INF
    val: Cost = Fraction(0)
    for bt, bc in fn.breakpoints:
        if bt > t:
            break
        val = bc
    return val


def cost_at(fn: CostFunction, t: int) -> Cost:
    if t < fn.start:
        raise DomainError(f"time {t} precedes domain start {fn.start}")
    v = _raw(fn, t)
    if is_inf(v):
        return INF
    return v - fn.shift


def time_for_cost(fn: CostFunction, q) -> Optional[int]:
    """Smallest integer t >= start with cost_at(fn, t) >= q, or NEVER."""
    q = q if is_inf(q) else as_fraction(q)
    if not is_inf(q) and q <= 0:
        return fn.start
    k = fn.kind
    if is_inf(q):
        cand = None
        if k == "hard-deadline":
            cand = fn.deadline + 1
        elif k == "piecewise-step":
            cand = next((bt for bt, bc in fn.breakpoints if is_inf(bc)), None)
        return None if cand is None else max(cand, fn.start)
    target = q + fn.shift
    cand: Optional[int]
    if k in ("weighted-completion", "weighted-flow"):
        if fn.weight == 0:
            return NEVER
        base = 0 if k == "weighted-completion" else fn.start
        cand = base + ceil(target / fn.weight)
    elif k == "weighted-tardiness":
        if fn.weight == 0:
            return NEVER
        cand = fn.due + ceil(target / fn.weight)
    elif k == "weight-of-tardy":
        if fn.weight < target:
            return NEVER
        cand = fn.due + 1
    elif k == "hard-deadline":
        cand = fn.deadline + 1
    else:
        cand = next((bt for bt, bc in fn.breakpoints if bc >= target), None)
        if cand is None:
            return NEVER
    return max(cand, fn.start)


def last_time_at_most(fn: CostFunction, q: Cost, lo: int, hi: int) -> int:
    """Largest t in [lo, hi] with cost_at(fn, t) <= q (lo must qualify)."""
    if cost_at(fn, hi) <= q:
        return hi
    # invariant: cost(lo) <= q < cost(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cost_at(fn, mid) <= q:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Job:
    id: int
    r: int
    p: int
    cost: CostFunction


@dataclass(frozen=True)
class GspInstance:
    jobs: tuple
    cost_offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "cost_offset", as_fraction(self.cost_offset))

    @property
    def n(self) -> int:
        return len(self.jobs)


@dataclass(frozen=True)
class Schedule:
    segments: tuple  # (job, start, end) sorted by start
    completions: tuple


def normalize_job(job: Job) -> tuple[Job, Cost]:
    """Shift the job's cost so it is zero at the release; return the offset."""
    fn = job.cost
    fn = replace(fn, start=job.r, shift=Fraction(0))
    if fn.kind == "weighted-tardiness" and fn.due < job.r:
        fn = replace(fn, due=job.r, clamped_due=fn.due)
        offset = Fraction(job.cost.weight * (job.r - job.cost.due))
        return replace(job, cost=fn), offset
    offset = _raw(fn, job.r)
    if is_inf(offset):
        # cost infinite from the release on; leave unshifted, validation flags it
        return replace(job, cost=fn), Fraction(0)
    fn = replace(fn, shift=offset)
    return replace(job, cost=fn), offset


def make_instance(jobs: Sequence[Job]) -> GspInstance:
    """Build a normalized instance from raw jobs."""
    out = []
    total = Fraction(0)
    for job in jobs:
        nj, off = normalize_job(job)
        out.append(nj)
        total += off
    return GspInstance(tuple(out), total)


def raw_total_cost(instance: GspInstance, completions: Sequence[int]) -> Cost:
    """Objective of the un-normalized functions (before shifting)."""
    total: Cost = Fraction(0)
    for job, c in zip(instance.jobs, completions):
        fn = job.cost
        if fn.clamped_due is not None:
            orig = replace(fn, due=fn.clamped_due, shift=Fraction(0))
        else:
            orig = replace(fn, shift=Fraction(0))
        total = total + _raw(orig, c)
    return total


def total_cost(instance: GspInstance, completions: Sequence[int]) -> Cost:
    total: Cost = Fraction(0)
    for job, c in zip(instance.jobs, completions):
        total = total + cost_at(job.cost, c)
    return total


def deadline_feasible(instance: GspInstance, deadlines: Sequence[int]) -> bool:
    """Can every job finish by its deadline (preemptive, one machine)?

    Checks the interval-load condition over release times s and deadlines t.
    A job whose deadline equals its release can never run, so it fails
    outright even though no interval constrains it.
    """
    jobs = instance.jobs
    if any(d <= j.r for j, d in zip(jobs, deadlines)):
        return False
    releases = sorted({j.r for j in jobs})
    ends = sorted(set(deadlines))
    for s in releases:
        for t in ends:
            if t <= s:
                continue
            load = sum(j.p for j, d in zip(jobs, deadlines) if s <= j.r and d <= t)
            if load > t - s:
                return False
    return True


def edf_schedule(instance: GspInstance, deadlines: Sequence[int]) -> Schedule:
    """Earliest-deadline-first with ties broken by job id.

    Raises InfeasibleError if some job misses its deadline.
    """
    jobs = instance.jobs
    n = len(jobs)
    if n == 0:
        return Schedule((), ())
    order = sorted(range(n), key=lambda i: (jobs[i].r, i))
    remaining = [j.p for j in jobs]
    completions = [0] * n
    segments: list[list[int]] = []
    heap: list[tuple[int, int]] = []
    k = 0
    now = jobs[order[0]].r
    done = 0
    while done < n:
        while k < n and jobs[order[k]].r <= now:
            i = order[k]
            heapq.heappush(heap, (deadlines[i], i))
            k += 1
        if not heap:
            now = jobs[order[k]].r
            continue
        d, i = heap[0]
        # run job i until it finishes or the next release
        nxt = jobs[order[k]].r if k < n else None
        run = remaining[i] if nxt is None else min(remaining[i], nxt - now)
        if segments and segments[-1][0] == i and segments[-1][2] == now:
            segments[-1][2] = now + run
        else:
            segments.append([i, now, now + run])
        now += run
        remaining[i] -= run
        if remaining[i] == 0:
            heapq.heappop(heap)
            completions[i] = now
            done += 1
            if now > deadlines[i]:
                raise InfeasibleError(f"job {jobs[i].id} completes at {now} after deadline {deadlines[i]}")
    return Schedule(tuple(tuple(s) for s in segments), tuple(completions))


def check_schedule(instance: GspInstance, schedule: Schedule) -> list[str]:
    """Violations of the Schedule invariants (empty when valid)."""
    problems = []
    jobs = instance.jobs
    done = [0] * len(jobs)
    last_end = [None] * len(jobs)
    prev = None
    for seg in sorted(schedule.segments, key=lambda x: (x[1], x[2])):
        j, a, b = seg
        if not 0 <= j < len(jobs):
            problems.append(f"segment {seg} names unknown job {j}")
            continue
        if a >= b:
            problems.append(f"segment {seg} is empty or reversed")
        if a < jobs[j].r:
            problems.append(f"job {j} runs at {a} before its release {jobs[j].r}")
        if prev is not None and a < prev[2]:
            problems.append(f"segments {prev} and {seg} overlap")
        prev = seg
        done[j] += b - a
        last_end[j] = b if last_end[j] is None else max(last_end[j], b)
    for j, job in enumerate(jobs):
        if done[j] != job.p:
            problems.append(f"job {j} processed {done[j]} units, needs {job.p}")
        if j < len(schedule.completions) and last_end[j] is not None and schedule.completions[j] != last_end[j]:
            problems.append(f"job {j} completion {schedule.completions[j]} differs from last segment end {last_end[j]}")
    if len(schedule.completions) != len(jobs):
        problems.append("completion vector length differs from job count")
    return problems


def horizon(instance: GspInstance) -> int:
    """Power of two T with T/2 <= max r + sum p < T."""
    span = max((j.r for j in instance.jobs), default=0) + sum(j.p for j in instance.jobs)
    t = 1
    while t <= span:
        t *= 2
    return max(t, 2)


def split_at_release_gaps(instance: GspInstance) -> list[tuple[GspInstance, tuple[int, ...]]]:
    """Split where consecutive release times are more than sum(p) apart.

    Jobs on either side of such a gap never interact, so each piece can be
    solved alone.  Returns (piece, original job indices); piece jobs are
    re-labelled 0..k-1.
    """
    jobs = instance.jobs
    if not jobs:
        return [(instance, ())]
    total_p = sum(j.p for j in jobs)
    order = sorted(range(len(jobs)), key=lambda i: (jobs[i].r, i))
    pieces: list[list[int]] = [[order[0]]]
    for a, b in zip(order, order[1:]):
        if jobs[b].r - jobs[a].r > total_p:
            pieces.append([])
        pieces[-1].append(b)
    if len(pieces) == 1:
        return [(instance, tuple(range(len(jobs))))]
    out = []
    for idx in pieces:
        idx = sorted(idx)
        sub = tuple(replace(jobs[i], id=k) for k, i in enumerate(idx))
        out.append((GspInstance(sub, Fraction(0)), tuple(idx)))
    return out


@dataclass
class Diagnostics:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_gsp(instance: GspInstance) -> Diagnostics:
    diag = Diagnostics()
    ids = [j.id for j in instance.jobs]
    if sorted(ids) != list(range(len(ids))):
        diag.violations.append("job ids must be unique and dense 0..n-1")
    for j in instance.jobs:
        if j.p < 1:
            diag.violations.append(f"job {j.id}: processing time must be positive")
        if j.r < 0:
            diag.violations.append(f"job {j.id}: release time must be nonnegative")
        fn = j.cost
        if fn.weight < 0:
            diag.violations.append(f"job {j.id}: weight must be nonnegative")
        if fn.kind == "piecewise-step":
            vals = [c for _, c in fn.breakpoints]
            times = [t for t, _ in fn.breakpoints]
            if times != sorted(times):
                diag.violations.append(f"job {j.id}: breakpoints must be sorted by time")
            if any(b < a for a, b in zip(vals, vals[1:])) or any(not is_inf(v) and v < 0 for v in vals):
                diag.violations.append(f"job {j.id}: breakpoint costs must be nonnegative and nondecreasing")
        if fn.clamped_due is not None:
            diag.warnings.append(
                f"job {j.id}: due date {fn.clamped_due} before release {j.r}; normalized with recorded offset"
            )
        if fn.start != j.r:
            diag.warnings.append(f"job {j.id}: cost function not normalized to the release time")
        else:
            c0 = cost_at(fn, j.r)
            if is_inf(c0):
                diag.violations.append(f"job {j.id}: cost is infinite already at the release time")
            elif c0 != 0:
                diag.warnings.append(f"job {j.id}: cost at release is {c0}, expected 0 after normalization")
    return diag


def optimal_completions(instance: GspInstance) -> tuple[Cost, tuple[int, ...]]:
    """Exhaustive search for a cheapest deadline-feasible completion vector.

    Depth-first over jobs in release order; a partial assignment is pruned
    as soon as the jobs fixed so far violate the interval-load condition or
    their cost plus the cheapest possible rest reaches the incumbent.
    Meant for small instances only.
    """
    jobs = instance.jobs
    n = len(jobs)
    if n == 0:
        return Fraction(0), ()
    last = max(j.r for j in jobs) + sum(j.p for j in jobs)
    order = sorted(range(n), key=lambda i: (jobs[i].r, i))
    floor_cost = [cost_at(jobs[i].cost, jobs[i].r + jobs[i].p) for i in order]
    suffix = [Fraction(0)] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + floor_cost[k]
    best: list = [INF, None]
    chosen: list[int] = [0] * n

    def ok_with(k: int, c: int) -> bool:
        # only intervals [s, t] holding job order[k] can newly overflow
        i = order[k]
        r_i = jobs[i].r
        assigned = [(order[q], chosen[order[q]]) for q in range(k)] + [(i, c)]
        for s_job, _ in assigned:
            s = jobs[s_job].r
            if s > r_i:
                continue
            for _, t in assigned:
                if t < c:
                    continue
                load = sum(jobs[a].p for a, d in assigned if s <= jobs[a].r and d <= t)
                if load > t - s:
                    return False
        return True

    def dfs(k: int, acc: Cost) -> None:
        if not acc + suffix[k] < best[0]:
            return
        if k == n:
            best[0] = acc
            best[1] = tuple(chosen)
            return
        i = order[k]
        job = jobs[i]
        for c in range(job.r + job.p, last + 1):
            val = cost_at(job.cost, c)
            if not acc + val + suffix[k + 1] < best[0]:
                break
            if ok_with(k, c):
                chosen[i] = c
                dfs(k + 1, acc + val)

    dfs(0, Fraction(0))
    if best[1] is None:
        return INF, ()
    # the EDF run on these deadlines can only finish jobs earlier
    sched = edf_schedule(instance, best[1])
    return total_cost(instance, sched.completions), sched.completions

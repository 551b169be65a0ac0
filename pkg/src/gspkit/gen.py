"""Deterministic random instances for tests, benchmarks and the CLI."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .gsp import KIND_ALIASES, KINDS, CostFunction, GspInstance, InfeasibleError, Job, edf_schedule, make_instance
from .numbers import INF
from .rcp import RcpInstance, Ray, Rect


@dataclass
class GenSpec:
    n: int = 4
    p_max: int = 3
    r_max: int = 3
    mix: dict = field(default_factory=lambda: {k: 1 for k in KINDS})
    weight_range: tuple = (0, 3)
    due_range: tuple = (0, 6)
    seed: int = 0

    def kinds(self) -> tuple:
        pairs = [(KIND_ALIASES.get(k, k), w) for k, w in self.mix.items() if w > 0]
        if not pairs:
            raise ValueError("objective mix selects no cost kind")
        for k, _ in pairs:
            if k not in KINDS:
                raise ValueError(f"unknown cost kind {k!r}")
        return tuple(pairs)


def _cost(rng: random.Random, kind: str, spec: GenSpec, r: int, p: int, total_p: int) -> CostFunction:
    w = rng.randint(*spec.weight_range)
    if kind in ("weighted-completion", "weighted-flow"):
        return CostFunction(kind, weight=w)
    if kind in ("weighted-tardiness", "weight-of-tardy"):
        return CostFunction(kind, weight=w, due=rng.randint(*spec.due_range))
    if kind == "hard-deadline":
        return CostFunction(kind, deadline=r + p + rng.randint(0, total_p))
    points = sorted(rng.sample(range(r + 1, r + p + total_p + 3), rng.randint(1, 3)))
    vals, cur = [], 0
    for _ in points:
        cur += rng.randint(1, max(1, spec.weight_range[1]))
        vals.append(cur)
    bps = tuple(zip(points, vals))
    if rng.random() < 0.25:
        bps = bps + ((points[-1] + total_p + 1, INF),)
    return CostFunction(kind, breakpoints=bps)


def gen_instance(spec: GenSpec) -> GspInstance:
    """Same (spec, seed) gives the same instance; hard deadlines stay feasible."""
    rng = random.Random(spec.seed)
    kinds = spec.kinds()
    names = [k for k, _ in kinds]
    weights = [w for _, w in kinds]
    rs = [rng.randint(0, spec.r_max) for _ in range(spec.n)]
    ps = [rng.randint(1, spec.p_max) for _ in range(spec.n)]
    total_p = sum(ps)
    jobs = []
    for j in range(spec.n):
        kind = rng.choices(names, weights)[0]
        jobs.append(Job(j, rs[j], ps[j], _cost(rng, kind, spec, rs[j], ps[j], total_p)))
    jobs = _relax_deadlines(jobs)
    return make_instance(jobs)


def _latest_needed(jobs) -> int:
    return max((j.r for j in jobs), default=0) + sum(j.p for j in jobs)


def _hard_limit(job) -> int | None:
    fn = job.cost
    if fn.kind == "hard-deadline":
        return fn.deadline
    if fn.kind == "piecewise-step":
        return next((t - 1 for t, c in fn.breakpoints if c is INF), None)
    return None


def _relax_deadlines(jobs):
    """Push hard limits out to a safe horizon if they cannot all be met."""
    if all(_hard_limit(j) is None for j in jobs):
        return jobs
    end = _latest_needed(jobs)
    probe = make_instance(jobs)
    limits = [_hard_limit(j) for j in probe.jobs]
    try:
        edf_schedule(probe, [end if d is None else d for d in limits])
        return jobs
    except InfeasibleError:
        pass
    out = []
    for j in jobs:
        fn = j.cost
        if fn.kind == "hard-deadline":
            fn = CostFunction(fn.kind, deadline=end)
        elif fn.kind == "piecewise-step" and _hard_limit(j) is not None:
            bps = tuple((t, c) for t, c in fn.breakpoints if c is not INF) + ((end + 1, INF),)
            fn = CostFunction(fn.kind, breakpoints=bps)
        out.append(Job(j.id, j.r, j.p, fn))
    return out


# ---------------------------------------------------------------------------
# covering instances


def gen_rcp(seed: int, rows: int = 4, width: int = 8, max_rects: int = 3, max_cost: int = 5, max_p: int = 3,
            rays: int = 3, max_demand: int = 4, feasible: bool = True) -> RcpInstance:
    """Random rows of adjacent rectangles plus rays.

    With ``feasible`` each demand is capped by what selecting everything
    would cover, so the instance always has a solution.
    """
    rng = random.Random(seed)
    rects, nid = [], 0
    for j in range(rows):
        a = rng.randrange(0, width)
        b = rng.randrange(a + 1, width + 1)
        cuts = sorted(set([a, b] + [rng.randrange(a, b + 1) for _ in range(rng.randrange(0, max_rects))]))[: max_rects + 1]
        p = rng.randint(1, max_p)
        for x0, x1 in zip(cuts, cuts[1:]):
            rects.append(Rect(nid, x0, x1, j, Fraction(rng.randint(1, max_cost)), p))
            nid += 1
    return RcpInstance(tuple(rects), tuple(_rays(rng, rects, rows, width, rays, max_demand, feasible)))


def _rays(rng, rects, rows, width, count, max_demand, feasible) -> list:
    out = []
    for _ in range(rng.randint(1, count)):
        s, t, d = rng.randrange(0, rows), rng.randrange(0, width), rng.randint(1, max_demand)
        if feasible:
            cap = sum(r.p for r in rects if r.a <= t < r.b and r.row <= s)
            if cap == 0:
                continue
            d = min(d, cap)
        out.append(Ray(s, t, d))
    return out


def _aligned(x, w, delta) -> bool:
    h = w.bit_length() - 1
    grid = Fraction(delta) * 2**h
    return Fraction(x) % grid == 0 and Fraction(x + w) % grid == 0


def gen_well_structured(seed: int, rows: int = 4, width: int = 8, delta=Fraction(1, 2), max_rects: int = 3,
                        max_cost: int = 4, max_p: int = 2, rays: int = 4, max_demand: int = 3,
                        feasible: bool = True) -> RcpInstance:
    """Rows of grid-aligned rectangles: width in [2^h, 2^(h+1)) sits on the delta*2^h grid."""
    rng = random.Random(seed)
    rects, nid = [], 0
    for j in range(rows):
        x = rng.randrange(0, width)
        p = rng.randint(1, max_p)
        for _ in range(rng.randint(1, max_rects)):
            opts = [w for w in range(1, width - x + 1) if _aligned(x, w, delta)]
            if not opts:
                break
            w = rng.choice(opts)
            rects.append(Rect(nid, x, x + w, j, Fraction(rng.randint(1, max_cost)), p))
            nid += 1
            x += w
    return RcpInstance(tuple(rects), tuple(_rays(rng, rects, rows, width, rays, max_demand, feasible)))

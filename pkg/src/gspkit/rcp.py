"""Rectangle covering: rows of unit-height rectangles, downward rays with demands.

A solution picks a prefix (from the left) of every row so that each ray
L(s, t) = {t} x (-inf, s] meets selected rectangles of total value at least
its demand.  Rectangle [a, b) x [j, j+1) meets L(s, t) iff a <= t < b and
j <= s.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from math import ceil
from typing import Iterable, Optional

from .numbers import as_fraction, power_exponent


class BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Rect:
    id: int
    a: int
    b: int
    row: int
    cost: Fraction
    p: int

    def hits(self, s, t) -> bool:
        return self.a <= t < self.b and self.row <= s


@dataclass(frozen=True)
class Ray:
    s: int
    t: int
    d: int


@dataclass(frozen=True)
class RcpInstance:
    rects: tuple
    rays: tuple

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))
        object.__setattr__(self, "rays", tuple(self.rays))

    @cached_property
    def by_id(self) -> dict:
        return {r.id: r for r in self.rects}

    @cached_property
    def rows(self) -> dict:
        """row index -> rectangles sorted left to right (rows ascending)."""
        out: dict = {}
        for r in self.rects:
            out.setdefault(r.row, []).append(r)
        return {j: tuple(sorted(out[j], key=lambda r: r.a)) for j in sorted(out)}

    @cached_property
    def row_order(self) -> tuple:
        return tuple(self.rows)

    @cached_property
    def position(self) -> dict:
        """rect id -> (row index, position within the row)."""
        return {r.id: (j, k) for j, row in self.rows.items() for k, r in enumerate(row)}

    @cached_property
    def K(self) -> Fraction:
        best = Fraction(1)
        for row in self.rows.values():
            lo = min(r.cost for r in row)
            if lo > 0:
                best = max(best, sum((r.cost for r in row), Fraction(0)) / lo)
        return best

    @cached_property
    def M(self) -> int:
        return len({r.cost for r in self.rects})

    @cached_property
    def p_max(self) -> int:
        return max((r.p for r in self.rects), default=0)

    @cached_property
    def x_extent(self) -> int:
        xs = [r.b for r in self.rects] + [ray.t + 1 for ray in self.rays]
        return max(xs, default=0)

    def next_id(self) -> int:
        return max((r.id for r in self.rects), default=-1) + 1


@dataclass
class RcpDiagnostics:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    K: Fraction = Fraction(1)
    M: int = 0
    p_max: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_rcp(inst: RcpInstance) -> RcpDiagnostics:
    diag = RcpDiagnostics()
    ids = [r.id for r in inst.rects]
    if len(set(ids)) != len(ids):
        diag.violations.append("rectangle ids must be unique")
    for r in inst.rects:
        if not r.a < r.b:
            diag.violations.append(f"rectangle {r.id}: needs left < right")
        if r.cost <= 0:
            diag.violations.append(f"rectangle {r.id}: costs strictly positive")
        if r.p <= 0:
            diag.violations.append(f"rectangle {r.id}: values strictly positive")
        if r.row < 0:
            diag.violations.append(f"rectangle {r.id}: row index must be nonnegative")
    for j, row in inst.rows.items():
        if len({r.p for r in row}) > 1:
            diag.violations.append(f"row {j}: all rectangles must share one value")
        for u, v in zip(row, row[1:]):
            if u.b > v.a:
                diag.violations.append(f"row {j}: rectangles {u.id} and {v.id} overlap")
            elif u.b < v.a:
                diag.violations.append(f"row {j}: row not consecutive between {u.id} and {v.id}")
    for ray in inst.rays:
        if ray.s < 0 or ray.t < 0 or ray.d < 0:
            diag.violations.append(f"ray {ray}: coordinates and demand must be nonnegative")
    if diag.ok:
        diag.K, diag.M, diag.p_max = inst.K, inst.M, inst.p_max
    return diag


def coverage(inst: RcpInstance, selection: Iterable[int], ray: Ray) -> int:
    by_id = inst.by_id
    return sum(by_id[i].p for i in selection if by_id[i].hits(ray.s, ray.t))


def prefix_violations(inst: RcpInstance, selection: Iterable[int]) -> list[str]:
    sel = set(selection)
    out = []
    unknown = sel - set(inst.by_id)
    if unknown:
        out.append(f"unknown rectangle ids {sorted(unknown)}")
    for j, row in inst.rows.items():
        flags = [r.id in sel for r in row]
        k = sum(flags)
        if flags != [True] * k + [False] * (len(row) - k):
            out.append(f"row {j}: selection is not a prefix")
    return out


def uncovered_rays(inst: RcpInstance, selection: Iterable[int]) -> list[tuple[Ray, int]]:
    sel = list(selection)
    out = []
    for ray in inst.rays:
        if ray.d <= 0:
            continue
        got = coverage(inst, sel, ray)
        if got < ray.d:
            out.append((ray, got))
    return out


def is_feasible(inst: RcpInstance, selection: Iterable[int]) -> bool:
    sel = list(selection)
    return not prefix_violations(inst, sel) and not uncovered_rays(inst, sel)


def selection_cost(inst: RcpInstance, selection: Iterable[int]) -> Fraction:
    by_id = inst.by_id
    return sum((by_id[i].cost for i in selection), Fraction(0))


def prefix_closure(inst: RcpInstance, ids: Iterable[int]) -> frozenset:
    chosen = set(ids)
    out = set()
    for row in inst.rows.values():
        reach = max((r.b for r in row if r.id in chosen), default=None)
        if reach is None:
            continue
        out.update(r.id for r in row if r.a < reach)
    return frozenset(out)


def prefix_vector(inst: RcpInstance, selection: Iterable[int]) -> tuple:
    sel = set(selection)
    return tuple(sum(1 for r in row if r.id in sel) for row in inst.rows.values())


def selection_from_vector(inst: RcpInstance, vec) -> frozenset:
    out = set()
    for k, row in zip(vec, inst.rows.values()):
        out.update(r.id for r in row[:k])
    return frozenset(out)


@dataclass(frozen=True)
class SolveResult:
    selection: Optional[frozenset]  # None when infeasible
    cost: Optional[Fraction]

    @property
    def feasible(self) -> bool:
        return self.selection is not None


INFEASIBLE = SolveResult(None, None)


def _ray_table(inst: RcpInstance, rays) -> list[list[tuple[int, int, int]]]:
    """Per ray: (row position, rect position, value) of every rect it meets."""
    rows = list(inst.rows.values())
    table = []
    for ray in rays:
        hits = []
        for q, row in enumerate(rows):
            if not row or row[0].row > ray.s:
                continue
            for k, r in enumerate(row):
                if r.a <= ray.t < r.b:
                    hits.append((q, k, r.p))
                    break
        table.append(hits)
    return table


def brute_force(inst: RcpInstance, budget: int = 10**6) -> SolveResult:
    """Enumerate every prefix vector; cheapest feasible, lexicographic ties."""
    rows = list(inst.rows.values())
    size = 1
    for row in rows:
        size *= len(row) + 1
    if size > budget:
        raise BudgetExceeded(f"{size} prefix vectors exceed budget {budget}")
    rays = [ray for ray in inst.rays if ray.d > 0]
    table = _ray_table(inst, rays)
    costs = [[Fraction(0)] + list(itertools.accumulate(r.cost for r in row)) for row in rows]
    best = None
    best_vec = None
    for vec in itertools.product(*(range(len(row) + 1) for row in rows)):
        if any(sum(p for q, k, p in hits if vec[q] > k) < ray.d for ray, hits in zip(rays, table)):
            continue
        c = sum(costs[q][vec[q]] for q in range(len(rows)))
        if best is None or c < best:
            best, best_vec = c, vec
    if best is None:
        return INFEASIBLE
    return SolveResult(selection_from_vector(inst, best_vec), best)


def exact_solve(inst: RcpInstance) -> SolveResult:
    """Exact optimum by memoized search over residual demands.

    Rows are processed bottom to top.  Once the next row lies above a ray's
    apex, nothing can still cover it, so that ray must already be satisfied.
    Ties go to the lexicographically smallest prefix vector, as in
    brute_force.
    """
    rows = list(inst.rows.values())
    ys = [row[0].row for row in rows]
    rays = [ray for ray in inst.rays if ray.d > 0]
    nr = len(rays)
    nrow = len(rows)
    # hit[q][i] = (rect position, value) if row q can hit ray i
    hit = [[None] * nr for _ in range(nrow)]
    for i, (ray, hits) in enumerate(zip(rays, _ray_table(inst, rays))):
        for q, k, p in hits:
            hit[q][i] = (k, p)
    # room[q][i] = most coverage rows q.. can still give ray i
    room = [[0] * nr for _ in range(nrow + 1)]
    for q in range(nrow - 1, -1, -1):
        for i in range(nr):
            room[q][i] = room[q + 1][i] + (hit[q][i][1] if hit[q][i] else 0)
    costs = [[Fraction(0)] + list(itertools.accumulate(r.cost for r in row)) for row in rows]
    memo: dict = {}
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10 * nrow + 1000))

    def solve(q: int, res: tuple):
        key = (q, res)
        if key in memo:
            return memo[key]
        if any(res[i] > room[q][i] for i in range(nr)):
            memo[key] = None
            return None
        if q == nrow:
            memo[key] = (Fraction(0), ())
            return memo[key]
        best = None
        touching = [i for i in range(nr) if hit[q][i] and res[i] > 0]
        for k in range(len(rows[q]) + 1):
            if touching:
                nres = list(res)
                for i in touching:
                    pos, p = hit[q][i]
                    if k > pos:
                        nres[i] = max(0, nres[i] - p)
                nres = tuple(nres)
            else:
                nres = res
            sub = solve(q + 1, nres)
            if sub is None:
                continue
            cand = (costs[q][k] + sub[0], (k,) + sub[1])
            if best is None or cand < best:
                best = cand
        memo[key] = best
        return best

    try:
        out = solve(0, tuple(ray.d for ray in rays))
    finally:
        sys.setrecursionlimit(old_limit)
    if out is None:
        return INFEASIBLE
    return SolveResult(selection_from_vector(inst, out[1]), out[0])


def strip_compress(inst: RcpInstance) -> tuple[RcpInstance, dict]:
    """Delete empty vertical strips by ranking all relevant x-coordinates.

    The relevant coordinates are rectangle endpoints and ray columns t, t+1.
    The ranking is monotone and keeps every ray column one unit wide, so the
    meets-relation and hence every solution is unchanged.
    """
    xs = set()
    for r in inst.rects:
        xs.update((r.a, r.b))
    for ray in inst.rays:
        xs.update((ray.t, ray.t + 1))
    rank = {x: k for k, x in enumerate(sorted(xs))}
    rects = tuple(replace(r, a=rank[r.a], b=rank[r.b]) for r in inst.rects)
    rays = tuple(replace(ray, t=rank[ray.t]) for ray in inst.rays)
    return RcpInstance(rects, rays), rank


def reduce_demands(rays, inst: RcpInstance, chosen: Iterable[int]) -> tuple:
    chosen = list(chosen)
    return tuple(replace(ray, d=max(0, ray.d - coverage(inst, chosen, ray))) for ray in rays)


@dataclass(frozen=True)
class RoundResult:
    instance: RcpInstance
    forced: frozenset
    discarded: frozenset
    original_cost: dict  # rect id -> cost before rounding


def round_costs(inst: RcpInstance, eps, rmax: int) -> RoundResult:
    """Cost rounding around a guessed most expensive chosen rectangle."""
    eps = as_fraction(eps)
    cmax = inst.by_id[rmax].cost
    n_rects = len(inst.rects)
    K = inst.K
    discarded = set()
    kept_rows = {}
    for j, row in inst.rows.items():
        keep = []
        for r in row:
            if r.cost > cmax:
                discarded.update(x.id for x in row if x.a >= r.a)
                break
            keep.append(r)
        if keep:
            kept_rows[j] = keep
    cheap = eps * cmax / n_rects
    forced = set()
    rest = []
    for j, row in kept_rows.items():
        if all(r.cost <= cheap for r in row):
            forced.update(r.id for r in row)
        else:
            rest.extend(row)
    scale = Fraction(n_rects) * K / (eps * eps * cmax)
    base = 1 + eps
    rounded = []
    for r in rest:
        tilde = base ** (power_exponent(r.cost, base) + 1)
        rounded.append(replace(r, cost=Fraction(ceil(scale * tilde))))
    rays = reduce_demands(inst.rays, inst, forced)
    return RoundResult(
        RcpInstance(tuple(rounded), rays),
        frozenset(forced),
        frozenset(discarded),
        {r.id: r.cost for r in inst.rects},
    )


@dataclass(frozen=True)
class Subproblem:
    """Restriction of an instance to the vertical strip [left, right)."""

    instance: RcpInstance
    left: Fraction
    right: Fraction

    @property
    def width(self):
        return self.right - self.left

    @property
    def mid(self):
        return self.left + Fraction(self.right - self.left, 2)

    def interior_rays(self) -> tuple:
        return tuple(r for r in self.instance.rays if self.left <= r.t < self.right)

    def outside_rays(self) -> tuple:
        return tuple(r for r in self.instance.rays if not self.left <= r.t < self.right)


def base_case_dp(sub: Subproblem) -> SolveResult:
    """Exact optimum for a strip of width one.

    Rows are visited from the top down.  Every ray inside the strip sits in
    the same column, so a single number (the largest unmet demand among the
    rays already reached) stands in for all of them; rays outside the strip
    each keep their own residual demand.
    """
    inst = sub.instance
    if sub.width != 1:
        raise ValueError("base case needs a strip of width 1")
    x = sub.left
    rows = list(inst.rows.values())[::-1]  # top row first
    ys = [row[0].row for row in rows]
    inner = sorted((r for r in sub.interior_rays() if r.d > 0), key=lambda r: -r.s)
    outer = [r for r in sub.outside_rays() if r.d > 0]
    n = len(rows)
    # interior demand that becomes active when reaching row q (s >= ys[q])
    arrive = [0] * (n + 1)
    for ray in inner:
        q = next((k for k in range(n) if ys[k] <= ray.s), n)
        arrive[q] = max(arrive[q], ray.d)
    covers_x = [[k for k, r in enumerate(row) if r.a <= x < r.b] for row in rows]
    hit = []
    for q, row in enumerate(rows):
        h = []
        for i, ray in enumerate(outer):
            if ys[q] <= ray.s:
                pos = next((k for k, r in enumerate(row) if r.a <= ray.t < r.b), None)
                if pos is not None:
                    h.append((i, pos, row[0].p))
        hit.append(h)
    costs = [[Fraction(0)] + list(itertools.accumulate(r.cost for r in row)) for row in rows]
    memo: dict = {}

    def solve(q: int, need: int, res: tuple):
        need = max(need, arrive[q])
        key = (q, need, res)
        if key in memo:
            return memo[key]
        if q == n:
            memo[key] = (Fraction(0), ()) if need == 0 and not any(res) else None
            return memo[key]
        best = None
        row = rows[q]
        for k in range(len(row) + 1):
            nneed = need
            if covers_x[q] and k > covers_x[q][0]:
                nneed = max(0, need - row[0].p)
            nres = list(res)
            for i, pos, p in hit[q]:
                if k > pos:
                    nres[i] = max(0, nres[i] - p)
            sub_ = solve(q + 1, nneed, tuple(nres))
            if sub_ is None:
                continue
            # vectors kept bottom row first to match brute_force tie-breaking
            cand = (costs[q][k] + sub_[0], sub_[1] + (k,))
            if best is None or cand < best:
                best = cand
        memo[key] = best
        return best

    out = solve(0, 0, tuple(r.d for r in outer))
    if out is None:
        return INFEASIBLE
    return SolveResult(selection_from_vector(inst, out[1]), out[0])


def check_well_structured(inst: RcpInstance, delta) -> list[str]:
    """Rectangles of width in [2^h, 2^(h+1)) must sit on the delta*2^h grid."""
    delta = as_fraction(delta)
    bad = []
    for r in inst.rects:
        w = r.b - r.a
        h = w.bit_length() - 1
        unit = delta * Fraction(2) ** h
        for x in (r.a, r.b):
            if (Fraction(x) / unit).denominator != 1:
                bad.append(f"rectangle {r.id} [{r.a},{r.b}): {x} not a multiple of {unit}")
                break
    return bad

"""Recursive divide-and-conquer approximation for rectangle covering.

Each node owns a dyadic strip A = [left, right).  Rows that cross the middle
line are partly decided at the node (``apx_mid``); every other rectangle is
handed to the left or right half.  Rows ending up in the "wrong" half for
some rays are accounted for by a coarse step function whose steps become
artificial rays of the other half.

Guesses are produced either from a reference solution (oracle mode) or by
enumerating instance-derived candidates under caps (exhaustive mode).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .numbers import log2_floor, next_pow2, power_exponent
from .rcp import (
    RcpInstance,
    Ray,
    Rect,
    Subproblem,
    base_case_dp,
    coverage,
    exact_solve,
    is_feasible,
    prefix_closure,
    selection_cost,
    strip_compress,
)

CENTERED = "centered"
RIGHT = "right-sticking-in"
LEFT = "left-sticking-in"
SPANNING = "spanning"

ALL_ROWS = "all"  # filled-row marker: every group row is filled


class CapsExhausted(Exception):
    """Exhaustive search found no feasible candidate within its caps."""


@dataclass(frozen=True)
class Params:
    eps: Fraction
    K: Fraction
    logT: int

    @property
    def threshold(self) -> Fraction:
        """Groups with at least this many touched rows are 'large'."""
        return 2 * self.K * self.logT / self.eps

    @property
    def X(self) -> Fraction:
        return 8 * self.K * self.logT / self.eps

    def surplus_rows(self, n: int) -> int:
        return int(self.eps * n / (2 * self.K * self.logT))


def make_params(inst: RcpInstance, eps, T: int) -> Params:
    return Params(Fraction(eps), inst.K, max(1, log2_floor(T)))


# ---------------------------------------------------------------------------
# classification and the auxiliary cost


def classify_row(row, left, right) -> str:
    reaches_left = any(r.a <= left for r in row)
    reaches_right = any(r.b >= right for r in row)
    if reaches_left and reaches_right:
        return SPANNING
    if reaches_left:
        return LEFT
    if reaches_right:
        return RIGHT
    return CENTERED


def classify_rows(sub: Subproblem) -> dict:
    return {j: classify_row(row, sub.left, sub.right) for j, row in sub.instance.rows.items()}


def c_apx(sub: Subproblem, selection, classes: Optional[dict] = None) -> Fraction:
    """Centered rectangles and interior left-sticking ones count twice."""
    classes = classes if classes is not None else classify_rows(sub)
    inst = sub.instance
    total = Fraction(0)
    for i in selection:
        r = inst.by_id[i]
        cls = classes[r.row]
        if cls == CENTERED or (cls == LEFT and r.a > sub.left):
            total += 2 * r.cost
        else:
            total += r.cost
    return total


# ---------------------------------------------------------------------------
# groups and the augmented reference


SIDE_OF = {LEFT: "left", RIGHT: "right", SPANNING: "span"}


def group_key(row, cls: str, eps: Fraction) -> tuple:
    return (SIDE_OF[cls], row[0].cost, power_exponent(row[0].p, 1 + eps))


def group_rows(sub: Subproblem, params: Params, classes: Optional[dict] = None) -> dict:
    """Rows with a rectangle across the middle line, keyed by
    (side, cost of the leftmost rectangle, value exponent); rows ascend."""
    classes = classes if classes is not None else classify_rows(sub)
    mid = sub.mid
    groups: dict = {}
    for j, row in sub.instance.rows.items():
        cls = classes[j]
        if cls == CENTERED:
            continue
        if not any(r.a < mid <= r.b for r in row):
            continue
        groups.setdefault(group_key(row, cls, params.eps), []).append(j)
    return groups


def line_rect(row, side: str, sub: Subproblem):
    """The rectangle of the row containing x = left(A) (left side) or x = mid(A)."""
    x = sub.left if side == "left" else sub.mid
    return next((r for r in row if r.a <= x < r.b), None)


def is_filled(row, side: str, sub: Subproblem, sel) -> bool:
    r = line_rect(row, side, sub)
    return r is not None and r.id in sel


def touches_area(row, sub: Subproblem, sel) -> bool:
    return any(r.id in sel and r.a < sub.right and r.b > sub.left for r in row)


@dataclass
class GroupStat:
    key: tuple
    rows: list  # ascending row indices
    n: int
    large: bool
    added: list = field(default_factory=list)
    filled_upto: object = None  # index into rows, ALL_ROWS, or None (nothing filled)

    def underneath(self) -> list:
        if self.filled_upto is None:
            return []
        if self.filled_upto == ALL_ROWS:
            return list(self.rows)
        return self.rows[: self.filled_upto + 1]

    def above(self) -> list:
        return self.rows[len(self.underneath()):]


def _filled_upto(rows, side, sub, sel):
    last = None
    for k, j in enumerate(rows):
        if not is_filled(sub.instance.rows[j], side, sub, sel):
            return last
        last = k
    return ALL_ROWS


def augment_reference(sub: Subproblem, S, params: Params, groups: Optional[dict] = None):
    """Add whole bottom rows to large groups; returns (S+, group stats)."""
    inst = sub.instance
    groups = groups if groups is not None else group_rows(sub, params)
    splus = set(S)
    stats = []
    for key, rows in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        side = key[0]
        n = sum(1 for j in rows if touches_area(inst.rows[j], sub, S))
        large = n >= params.threshold
        st = GroupStat(key, list(rows), n, large)
        if large:
            k = params.surplus_rows(n)
            open_rows = [j for j in rows if not is_filled(inst.rows[j], side, sub, S)]
            for j in open_rows[:k]:
                splus.update(r.id for r in inst.rows[j])
                st.added.append(j)
        stats.append(st)
    splus = frozenset(splus)
    for st in stats:
        st.filled_upto = _filled_upto(st.rows, st.key[0], sub, splus)
    return splus, stats


def apx_mid_from(sub: Subproblem, splus, stats) -> frozenset:
    inst = sub.instance
    out = set()
    for st in stats:
        if not st.large:
            for j in st.rows:
                out.update(r.id for r in inst.rows[j] if r.id in splus)
            continue
        for j in st.underneath():
            row = inst.rows[j]
            lr = line_rect(row, st.key[0], sub)
            out.update(r.id for r in row if r.a <= lr.a)
    return frozenset(out)


# ---------------------------------------------------------------------------
# routing rows to the halves


@dataclass
class Routing:
    left: list  # rectangles (possibly re-costed) for the left child
    right: list
    kind: dict  # row -> "none" | "left" | "right" | "split"
    ledger: list  # (rect id, old cost, new cost, reason)


def route_rows(sub: Subproblem, apx_mid, classes: Optional[dict] = None) -> Routing:
    classes = classes if classes is not None else classify_rows(sub)
    left, right, mid = sub.left, sub.right, sub.mid
    out = Routing([], [], {}, [])
    for j, row in sub.instance.rows.items():
        rest = [r for r in row if r.id not in apx_mid]
        if not rest:
            out.kind[j] = "none"
            continue
        cls = classes[j]
        if cls in (RIGHT, SPANNING):
            side = "right" if rest[0].a >= mid else "left"
        elif cls == CENTERED or all(left < r.a and r.b < right for r in rest):
            side = "split"
        else:
            meets_right = any(r.b > mid and r.a < right for r in rest)
            side = "right" if meets_right else "left"
        if side == "left":
            out.left.extend(rest)
        elif side == "right":
            out.right.extend(rest)
        else:
            side = _split_row(rest, mid, out)
        out.kind[j] = side
    return out


def _split_row(rest, mid, out: Routing) -> str:
    w_left = [r for r in rest if r.b <= mid]
    w_right = [r for r in rest if r.a >= mid]
    straddle = [r for r in rest if r.a < mid < r.b]
    if not straddle and not w_right:
        out.left.extend(rest)
        return "left"
    if not straddle and not w_left:
        out.right.extend(rest)
        return "right"
    carried = sum((r.cost for r in w_left), Fraction(0))
    out.left.extend(w_left)
    if straddle:
        rm = straddle[0]
        out.left.append(replace(rm, b=mid))
        new = replace(rm, a=mid, cost=carried + rm.cost)
        out.right.append(new)
        if carried:
            out.ledger.append((rm.id, rm.cost, new.cost, "right half of the straddling rectangle"))
        out.right.extend(w_right)
    else:
        first = w_right[0]
        new = replace(first, cost=first.cost + carried)
        out.ledger.append((first.id, first.cost, new.cost, "leftmost right rectangle carries the left part"))
        out.right.append(new)
        out.right.extend(w_right[1:])
    return "split"


def foreign_rows(routing: Routing, sub: Subproblem):
    """Rows of each child that reach into the other half.

    Returns (rows of the right child meeting A_left, rows of the left child
    meeting A_right); each a dict row -> rectangles sorted by x.
    """
    mid = sub.mid

    def rows_of(rects):
        d: dict = {}
        for r in rects:
            d.setdefault(r.row, []).append(r)
        return {j: sorted(v, key=lambda r: r.a) for j, v in d.items()}

    in_right = {j: v for j, v in rows_of(routing.right).items() if any(r.a < mid and r.b > sub.left for r in v)}
    in_left = {j: v for j, v in rows_of(routing.left).items() if any(r.b > mid and r.a < sub.right for r in v)}
    return in_right, in_left


# ---------------------------------------------------------------------------
# step functions


@dataclass(frozen=True)
class Step:
    xl: object
    xr: object
    yb: int
    yt: Optional[int]  # None: unbounded above
    value: int

    def contains(self, t, s) -> bool:
        return self.xl <= t < self.xr and self.yb <= s and (self.yt is None or s < self.yt)


@dataclass
class StepFunction:
    lo: object
    hi: object
    steps: list
    bound: int
    groups: dict  # key -> n-bar (active rows)
    slack: dict  # key -> allowed excess per group

    def value_at(self, t, s) -> int:
        if s < 0:
            return 0
        for q in self.steps:
            if q.contains(t, s):
                return q.value
        raise ValueError(f"point ({t},{s}) outside the step function")

    def rays(self) -> list:
        return [Ray(q.yb, q.xr - 1, q.value) for q in self.steps if q.value > 0]


def zero_step(lo, hi) -> StepFunction:
    return StepFunction(lo, hi, [Step(lo, hi, 0, None, 0)], 1, {}, {})


def _coverage_fn(rows: dict, sbar, lo, hi):
    """g(t, s): value of sbar rectangles meeting L(s, t) among the given rows."""
    reach = {}
    for j, rects in rows.items():
        chosen = [r for r in rects if r.id in sbar]
        if chosen:
            reach[j] = (max(r.b for r in chosen), min(r.a for r in rects), rects[0].p)

    def g(t, s) -> int:
        return sum(p for j, (b, a, p) in reach.items() if j <= s and a <= t < b)

    return g


def build_step_function(lo, hi, rows: dict, keys: dict, sbar, params: Params) -> StepFunction:
    """Under-approximate g on [lo, hi) by few axis-parallel steps.

    rows: row -> rectangles (every row spans [lo, hi)); keys: row -> group
    key whose last entry is the value exponent.  Horizontal cuts are placed
    at active rows (rows where sbar reaches into the strip) so that at most
    floor(n/X) active rows of a group lie strictly between two cuts; within
    each band the steps are as wide as the allowed drop permits.
    """
    eps = params.eps
    X = params.X
    g = _coverage_fn(rows, sbar, lo, hi)
    active: dict = {}
    for j, rects in rows.items():
        if any(r.id in sbar and r.a < hi and r.b > lo for r in rects):
            active.setdefault(keys[j], []).append(j)
    for v in active.values():
        v.sort()
    nbar = {k: len(v) for k, v in active.items()}
    cuts = set()
    for k, v in active.items():
        if len(v) <= X:
            cuts.update(v)
            continue
        gap = int(len(v) / X)
        pos = 0
        cuts.add(v[0])
        while pos < len(v) - 1:
            pos = min(pos + gap + 1, len(v) - 1)
            cuts.add(v[pos])
    cuts = sorted(cuts)
    n_groups = max(1, len(nbar))
    width = hi - lo
    per_band = int(3 * X * n_groups) + 1
    bands_max = n_groups * (int(X) + 1) + 2
    bound = per_band * bands_max
    steps = []
    if not cuts:
        return StepFunction(lo, hi, [Step(lo, hi, 0, None, 0)], bound, nbar, {})
    if cuts[0] > 0:
        steps.append(Step(lo, hi, 0, cuts[0], 0))
    for b, yb in enumerate(cuts):
        yt = cuts[b + 1] if b + 1 < len(cuts) else None
        budget = Fraction(0)
        for k, v in active.items():
            if v[0] <= yb:
                budget += (1 + eps) ** (k[-1] + 1) * int(len(v) / X)
        if width <= X:
            xs = list(range(int(lo), int(hi) + 1)) if Fraction(lo).denominator == 1 else [lo, hi]
            for x0, x1 in zip(xs, xs[1:]):
                steps.append(Step(x0, x1, yb, yt, g(x0, yb)))
            continue
        t0 = lo
        while t0 < hi:
            top = g(t0, yb)
            t1 = t0 + 1
            while t1 < hi and top - g(t1, yb) <= budget:
                t1 += 1
            steps.append(Step(t0, t1, yb, yt, g(t1 - 1, yb)))
            t0 = t1
    slack = {k: (1 + eps) ** k[-1] * params.surplus_rows(n) for k, n in nbar.items()}
    return StepFunction(lo, hi, steps, bound, nbar, slack)


def sandwich_violations(sf: StepFunction, rows: dict, keys: dict, sbar, max_s: int) -> list:
    """Check f <= g <= f + sum of group slack at every integer point."""
    g = _coverage_fn(rows, sbar, sf.lo, sf.hi)
    bad = []
    for t in range(int(sf.lo), int(sf.hi)):
        for s in range(0, max_s + 2):
            f = sf.value_at(t, s)
            got = g(t, s)
            hit_keys = {keys[j] for j, rects in rows.items() if j <= s and any(r.a <= t < r.b for r in rects)}
            allow = sum((sf.slack.get(k, 0) for k in hit_keys), Fraction(0))
            if not f <= got <= f + allow:
                bad.append((t, s, f, got, allow))
    return bad


# ---------------------------------------------------------------------------
# splitting and combining


@dataclass
class SplitResult:
    apx_mid: frozenset
    left: Subproblem
    right: Subproblem
    routing: Routing
    step_left: StepFunction  # on A_left, its rays go to the right child
    step_right: StepFunction  # on A_right, its rays go to the left child


def split_subproblem(sub: Subproblem, apx_mid, routing: Routing, step_left: StepFunction,
                     step_right: StepFunction, out_left: dict) -> SplitResult:
    """Children with reduced interior demands, artificial rays and split out-rays.

    out_left: index of each outside ray (in sub.instance.rays) -> demand
    handed to the left child; the right child gets the clamped remainder.
    """
    inst = sub.instance
    mid = sub.mid
    mid_sel = list(apx_mid)
    lrays, rrays = [], []
    for k, ray in enumerate(inst.rays):
        if ray.d <= 0:
            continue
        base = coverage(inst, mid_sel, ray)
        if sub.left <= ray.t < mid:
            d = ray.d - step_left.value_at(ray.t, ray.s) - base
            if d > 0:
                lrays.append(Ray(ray.s, ray.t, d))
        elif mid <= ray.t < sub.right:
            d = ray.d - step_right.value_at(ray.t, ray.s) - base
            if d > 0:
                rrays.append(Ray(ray.s, ray.t, d))
        else:
            dl = min(out_left.get(k, 0), ray.d)
            if dl > 0:
                lrays.append(Ray(ray.s, ray.t, dl))
            dr = ray.d - dl - base
            if dr > 0:
                rrays.append(Ray(ray.s, ray.t, dr))
    rrays.extend(step_left.rays())
    lrays.extend(step_right.rays())
    left = Subproblem(RcpInstance(tuple(routing.left), tuple(lrays)), sub.left, mid)
    right = Subproblem(RcpInstance(tuple(routing.right), tuple(rrays)), mid, sub.right)
    return SplitResult(frozenset(apx_mid), left, right, routing, step_left, step_right)


def combine_children(sub: Subproblem, apx_mid, left_sel, right_sel) -> frozenset:
    """Children reuse parent ids (a split rectangle's halves keep its id)."""
    return prefix_closure(sub.instance, set(apx_mid) | set(left_sel) | set(right_sel))


# ---------------------------------------------------------------------------
# recursion


@dataclass
class NodeCertificate:
    left: object
    right: object
    width: object
    output_cost: Fraction
    reference_capx: Optional[Fraction]
    factor: Optional[Fraction]
    ok: bool
    checks: dict = field(default_factory=dict)


@dataclass
class RecursionContext:
    params: Params
    T: int
    certificates: list = field(default_factory=list)
    cap_guesses: int = 2000
    cap_depth: int = 64
    truncated: bool = False
    check_sandwich: bool = True
    memo: dict = field(default_factory=dict)


def _trivial(sub: Subproblem):
    """Shortcuts: nothing to cover, or nothing to cover with."""
    if all(r.d <= 0 for r in sub.instance.rays):
        return frozenset()
    if not sub.instance.rects:
        return None
    return False


def _step_keys(rows: dict, sub: Subproblem, params: Params, classes: dict) -> dict:
    keys = {}
    for j in rows:
        prow = sub.instance.rows[j]
        cls = classes[j]
        keys[j] = group_key(prow, cls if cls != CENTERED else LEFT, params.eps)
    return keys


def _node_factor(ctx: RecursionContext, width) -> Fraction:
    lw = log2_floor(width) if width >= 1 else 0
    return 1 + ctx.params.eps * lw / ctx.params.logT


def solve_oracle(sub: Subproblem, ref, ctx: RecursionContext) -> Optional[frozenset]:
    """Guided recursion: every guess is read off the feasible reference."""
    inst = sub.instance
    ref = frozenset(ref)
    quick = _trivial(sub)
    classes = classify_rows(sub)
    ref_capx = c_apx(sub, ref, classes)
    checks: dict = {}
    if quick is not False:
        out = quick
    elif sub.width <= 1:
        res = base_case_dp(sub)
        out = res.selection
    else:
        groups = group_rows(sub, ctx.params, classes)
        splus, stats = augment_reference(sub, ref, ctx.params, groups)
        c_ref = selection_cost(inst, ref)
        checks["splus_budget"] = selection_cost(inst, splus) <= (1 + ctx.params.eps / ctx.params.logT) * c_ref
        checks["surplus"] = not surplus_violations(sub, ref, splus, stats, ctx.params)
        apx_mid = apx_mid_from(sub, splus, stats)
        routing = route_rows(sub, apx_mid, classes)
        fr_right, fr_left = foreign_rows(routing, sub)
        keys_l = _step_keys(fr_right, sub, ctx.params, classes)
        keys_r = _step_keys(fr_left, sub, ctx.params, classes)
        step_left = build_step_function(sub.left, sub.mid, fr_right, keys_l, splus, ctx.params)
        step_right = build_step_function(sub.mid, sub.right, fr_left, keys_r, splus, ctx.params)
        if ctx.check_sandwich:
            top = max(inst.rows, default=0)
            checks["sandwich"] = not sandwich_violations(step_left, fr_right, keys_l, splus, top) and not sandwich_violations(
                step_right, fr_left, keys_r, splus, top
            )
        out_left = {}
        left_ids = {r.id for r in routing.left}
        mine = [i for i in splus if i in left_ids]
        for k, ray in enumerate(inst.rays):
            if not sub.left <= ray.t < sub.right:
                out_left[k] = coverage(inst, mine, ray)
        split = split_subproblem(sub, apx_mid, routing, step_left, step_right, out_left)
        ref_l = frozenset(r.id for r in split.left.instance.rects if r.id in splus)
        ref_r = frozenset(r.id for r in split.right.instance.rects if r.id in splus)
        checks["child_reference_feasible"] = is_feasible(split.left.instance, ref_l) and is_feasible(split.right.instance, ref_r)
        lhs = c_apx(sub, splus, classes)
        rhs = c_apx(split.left, ref_l) + c_apx(split.right, ref_r) + selection_cost(inst, apx_mid)
        checks["reference_decomposition"] = lhs >= rhs
        checks["steps_within_bound"] = len(step_left.steps) + len(step_right.steps) <= step_left.bound + step_right.bound
        sl = solve_oracle(split.left, ref_l, ctx)
        sr = solve_oracle(split.right, ref_r, ctx)
        if sl is None or sr is None:
            out = None
        else:
            out = combine_children(sub, apx_mid, sl, sr)
            checks["combine_cost"] = selection_cost(inst, out) <= selection_cost(inst, apx_mid) + selection_cost(
                split.left.instance, sl
            ) + selection_cost(split.right.instance, sr)
    if out is not None:
        checks["feasible"] = is_feasible(inst, out)
        cost = selection_cost(inst, out)
        factor = _node_factor(ctx, sub.width)
        ok = cost <= factor * ref_capx and all(checks.values())
        ctx.certificates.append(NodeCertificate(sub.left, sub.right, sub.width, cost, ref_capx, factor, ok, checks))
    return out


def surplus_violations(sub: Subproblem, S, splus, stats, params: Params) -> list:
    """Rays meeting a group row above the filled part must gain the surplus."""
    inst = sub.instance
    bad = []
    S = set(S)
    for st in stats:
        if not st.large or not st.above():
            continue
        side = st.key[0]
        lo, hi = (sub.left, sub.mid) if side == "left" else (sub.mid, sub.right)
        need = (1 + params.eps) ** st.key[2] * params.surplus_rows(st.n)
        added = set()
        for j in st.added:
            added.update(r.id for r in inst.rows[j])
        for j in st.above():
            row = inst.rows[j]
            for t in range(int(lo), int(hi)):
                if not any(r.a <= t < r.b for r in row):
                    continue
                ray_s = j
                got = sum(r.p for r in inst.rects if r.id in added and r.id not in S and r.hits(ray_s, t))
                if got < need:
                    bad.append((st.key, j, t, got, need))
    return bad


# ---------------------------------------------------------------------------
# exhaustive mode


def _prefix_choices(row):
    return [frozenset(r.id for r in row[:k]) for k in range(len(row) + 1)]


def _subset_sums(values, cap):
    sums = {0}
    for v in values:
        sums |= {min(cap, s + v) for s in sums}
    return sorted(sums)


def _mid_candidates(sub: Subproblem, params: Params, classes: dict):
    """All apx_mid sets allowed by the per-group guesses."""
    inst = sub.instance
    groups = group_rows(sub, params, classes)
    per_group = []
    for key, rows in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        side = key[0]
        options = []
        # small: any prefix in each group row
        for combo in itertools.product(*(_prefix_choices(inst.rows[j]) for j in rows)):
            options.append(frozenset().union(*combo) if combo else frozenset())
        if len(rows) >= params.threshold:
            for upto in range(len(rows) + 1):
                chosen = set()
                for j in rows[:upto]:
                    row = inst.rows[j]
                    lr = line_rect(row, side, sub)
                    chosen.update(r.id for r in row if r.a <= lr.a)
                options.append(frozenset(chosen))
        per_group.append(sorted(set(options), key=lambda s: (len(s), sorted(s))))
    for combo in itertools.product(*per_group):
        yield frozenset().union(*combo) if combo else frozenset()


def _step_candidates(lo, hi, rows: dict, keys: dict, params: Params):
    if not rows:
        yield zero_step(lo, hi)
        return
    seen = set()
    for combo in itertools.product(*(_prefix_choices(rects) for rects in rows.values())):
        sbar = frozenset().union(*combo)
        sf = build_step_function(lo, hi, rows, keys, sbar, params)
        sig = tuple((q.xl, q.xr, q.yb, q.yt, q.value) for q in sf.steps)
        if sig in seen:
            continue
        seen.add(sig)
        yield sf


def _sub_key(sub: Subproblem):
    rects = tuple(sorted((r.id, r.a, r.b, r.row, r.cost, r.p) for r in sub.instance.rects))
    rays = tuple(sorted((r.s, r.t, r.d) for r in sub.instance.rays if r.d > 0))
    return (sub.left, sub.right, rects, rays)


def solve_exhaustive(sub: Subproblem, ctx: RecursionContext, depth: int = 0) -> Optional[frozenset]:
    """Cheapest feasible combination over enumerated guesses (memoized)."""
    key = _sub_key(sub)
    if key in ctx.memo:
        return ctx.memo[key]
    inst = sub.instance
    quick = _trivial(sub)
    if quick is not False:
        ctx.memo[key] = quick
        return quick
    if sub.width <= 1:
        out = base_case_dp(sub).selection
        ctx.memo[key] = out
        return out
    params = ctx.params
    classes = classify_rows(sub)
    best = None
    tried = 0
    limit = ctx.cap_guesses if depth < ctx.cap_depth else 1
    for apx_mid in _mid_candidates(sub, params, classes):
        routing = route_rows(sub, apx_mid, classes)
        fr_right, fr_left = foreign_rows(routing, sub)
        keys_l = _step_keys(fr_right, sub, params, classes)
        keys_r = _step_keys(fr_left, sub, params, classes)
        left_ids = {r.id for r in routing.left}
        outs = [k for k, ray in enumerate(inst.rays) if ray.d > 0 and not sub.left <= ray.t < sub.right]
        out_opts = []
        for k in outs:
            ray = inst.rays[k]
            vals = [r.p for r in routing.left if r.hits(ray.s, ray.t)]
            # one value per row at most
            out_opts.append(_subset_sums(vals, ray.d))
        for sl_f in _step_candidates(sub.left, sub.mid, fr_right, keys_l, params):
            for sr_f in _step_candidates(sub.mid, sub.right, fr_left, keys_r, params):
                for split_vals in itertools.product(*out_opts):
                    if tried >= limit:
                        ctx.truncated = True
                        break
                    tried += 1
                    split = split_subproblem(sub, apx_mid, routing, sl_f, sr_f, dict(zip(outs, split_vals)))
                    a = solve_exhaustive(split.left, ctx, depth + 1)
                    if a is None:
                        continue
                    b = solve_exhaustive(split.right, ctx, depth + 1)
                    if b is None:
                        continue
                    cand = combine_children(sub, apx_mid, a, b)
                    if not is_feasible(inst, cand):
                        continue
                    c = selection_cost(inst, cand)
                    if best is None or (c, sorted(cand)) < (best[0], sorted(best[1])):
                        best = (c, cand)
    out = None if best is None else best[1]
    ctx.memo[key] = out
    return out


# ---------------------------------------------------------------------------
# driver


@dataclass
class ApproxResult:
    selection: Optional[frozenset]
    cost: Optional[Fraction]
    reference: Optional[frozenset]
    reference_cost: Optional[Fraction]
    certificates: list
    truncated: bool
    T: int


def solve_rcp(inst: RcpInstance, eps, mode: str = "approx-oracle", reference=None, caps: Optional[dict] = None,
              check_sandwich: bool = True) -> ApproxResult:
    """Compress, pad to a dyadic root strip and run the recursion.

    In oracle mode the reference defaults to an exact optimum.
    """
    eps = Fraction(eps)
    caps = caps or {}
    comp, _ = strip_compress(inst)
    T = next_pow2(max(comp.x_extent, 1))
    params = make_params(comp, eps, T)
    ctx = RecursionContext(params, T, check_sandwich=check_sandwich)
    ctx.cap_guesses = caps.get("cap_guesses", ctx.cap_guesses)
    ctx.cap_depth = caps.get("cap_depth", ctx.cap_depth)
    root = Subproblem(comp, 0, T)
    ref_cost = None
    if mode == "approx-oracle":
        if reference is None:
            reference = exact_solve(comp).selection
        if reference is None:
            return ApproxResult(None, None, None, None, [], False, T)
        reference = frozenset(reference)
        ref_cost = selection_cost(comp, reference)
        sel = solve_oracle(root, reference, ctx)
    elif mode == "approx-exhaustive":
        sel = solve_exhaustive(root, ctx)
        if sel is None and ctx.truncated:
            raise CapsExhausted("no feasible candidate within the guess caps")
    else:
        raise ValueError(f"unknown approximation mode {mode!r}")
    cost = None if sel is None else selection_cost(comp, sel)
    return ApproxResult(sel, cost, reference, ref_cost, ctx.certificates, ctx.truncated, T)

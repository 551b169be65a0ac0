"""Approximation for well-structured covering instances (the tardiness case).

Rows crossing the middle line of a node are decided at the node: rows that
are vertical translates of each other (same rectangle boundaries, bucketed
costs and values) form a group, and per group we only need to know how many
rows take their first i rectangles.  Those rows are then chosen greedily from
the bottom, over-provisioned by a (1+2*eps) factor.  Nothing crosses into the
children, so no artificial rays are needed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .numbers import next_pow2, power_exponent
from .rcp import (
    RcpInstance,
    Ray,
    Subproblem,
    coverage,
    exact_solve,
    is_feasible,
    reduce_demands,
    selection_cost,
)


class InfeasibleGuess(ValueError):
    pass


@dataclass(frozen=True)
class GroupKey:
    costs: tuple  # per-position cost exponents
    p: object  # value exponent (a tuple if the row mixes value buckets)
    ts: tuple  # t_0 < t_1 < ... < t_k

    @property
    def k(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class TardinessGroup:
    key: GroupKey
    rows: tuple  # ascending row indices


def tardiness_key(row, eps) -> GroupKey:
    base = 1 + Fraction(eps)
    costs = tuple(power_exponent(r.cost, base) for r in row)
    pexp = [power_exponent(r.p, base) for r in row]
    p = pexp[0] if len(set(pexp)) == 1 else tuple(pexp)
    ts = (row[0].a,) + tuple(r.b for r in row)
    return GroupKey(costs, p, ts)


def _p_floor(key: GroupKey, eps) -> Fraction:
    e = key.p if isinstance(key.p, int) else min(key.p)
    return (1 + Fraction(eps)) ** e


def cross_rows(sub: Subproblem) -> list:
    mid = sub.mid
    return [
        j
        for j, row in sub.instance.rows.items()
        if any(r.a < mid for r in row) and any(r.b > mid for r in row)
    ]


def group_cross_rows(sub: Subproblem, eps) -> list:
    groups: dict = {}
    for j in cross_rows(sub):
        groups.setdefault(tardiness_key(sub.instance.rows[j], eps), []).append(j)
    return [TardinessGroup(k, tuple(sorted(v))) for k, v in sorted(groups.items(), key=lambda kv: repr(kv[0]))]


# ---------------------------------------------------------------------------
# greedy selection inside one group


@dataclass
class GroupLedger:
    key: GroupKey
    counts: dict  # i -> n_{g,i}
    guessed: dict  # i -> rows (small counts)
    greedy: dict  # i -> rows chosen bottom-up (large counts)
    cost: Fraction = Fraction(0)
    reference_cost: Optional[Fraction] = None
    cost_ok: Optional[bool] = None
    dominance_ok: Optional[bool] = None

    def as_dict(self) -> dict:
        return {
            "key": {"costs": list(self.key.costs), "p": self.key.p, "ts": [str(t) for t in self.key.ts]},
            "counts": {str(i): n for i, n in self.counts.items()},
            "guessed_rows": {str(i): list(v) for i, v in self.guessed.items()},
            "greedy_rows": {str(i): list(v) for i, v in self.greedy.items()},
            "cost": str(self.cost),
            "reference_cost": None if self.reference_cost is None else str(self.reference_cost),
            "cost_ok": self.cost_ok,
            "dominance_ok": self.dominance_ok,
        }


def greedy_group_select(group: TardinessGroup, rows: dict, counts: dict, guessed: dict, eps):
    """Returns (selected rect ids, ledger).

    counts: i -> number of rows taking exactly their first i rectangles.
    guessed: i -> rows, required for every i with 0 < counts[i] <= 1/eps.
    """
    eps = Fraction(eps)
    if sum(counts.values()) > len(group.rows):
        raise InfeasibleGuess("counts exceed the group size")
    chosen = set()
    used = set()
    ledger = GroupLedger(group.key, dict(counts), {}, {})
    for i, n in counts.items():
        if n and n <= 1 / eps:
            rs = tuple(guessed.get(i, ()))
            if len(rs) != n or used & set(rs):
                raise InfeasibleGuess(f"guessed rows for i={i} do not match the count")
            used.update(rs)
            ledger.guessed[i] = rs
            for j in rs:
                chosen.update(r.id for r in rows[j][:i])
    for i in sorted(counts, reverse=True):
        n = counts[i]
        if n <= 1 / eps:
            continue
        want = int((1 + 2 * eps) * n)
        free = [j for j in group.rows if j not in used][:want]
        used.update(free)
        ledger.greedy[i] = tuple(free)
        for j in free:
            chosen.update(r.id for r in rows[j][:i])
    return frozenset(chosen), ledger


def counts_from_reference(group: TardinessGroup, rows: dict, S, eps):
    eps = Fraction(eps)
    counts: dict = {}
    members: dict = {}
    for j in group.rows:
        i = sum(1 for r in rows[j] if r.id in S)
        if i:
            counts[i] = counts.get(i, 0) + 1
            members.setdefault(i, []).append(j)
    guessed = {i: tuple(v) for i, v in members.items() if len(v) <= 1 / eps}
    return counts, guessed


def dominance_violations(group: TardinessGroup, inst: RcpInstance, apx, S, rays=()) -> list:
    """APX_g must cover every ray (and every grid point of the group) at least as well as S_g."""
    ids = {r.id for j in group.rows for r in inst.rows[j]}
    mine = [i for i in apx if i in ids]
    ref = [i for i in S if i in ids]
    t0, tk = group.key.ts[0], group.key.ts[-1]
    probes = [Ray(s, t, 0) for s in group.rows for t in range(int(t0), int(tk))]
    bad = []
    for ray in list(rays) + probes:
        a, b = coverage(inst, mine, ray), coverage(inst, ref, ray)
        if a < b:
            bad.append((ray.s, ray.t, a, b))
    return bad


# ---------------------------------------------------------------------------
# recursion


def split_tardiness(sub: Subproblem, chosen) -> tuple:
    """Rows wholly inside one half go to that child; rays lose the chosen coverage."""
    inst = sub.instance
    mid = sub.mid
    chosen = list(chosen)
    lrects, rrects = [], []
    for row in inst.rows.values():
        if all(r.b <= mid for r in row):
            lrects.extend(row)
        elif all(r.a >= mid for r in row):
            rrects.extend(row)
    lrays, rrays = [], []
    for ray in inst.rays:
        d = ray.d - coverage(inst, chosen, ray)
        if d <= 0:
            continue
        (lrays if ray.t < mid else rrays).append(Ray(ray.s, ray.t, d))
    left = Subproblem(RcpInstance(tuple(lrects), tuple(lrays)), sub.left, mid)
    right = Subproblem(RcpInstance(tuple(rrects), tuple(rrays)), mid, sub.right)
    return left, right


@dataclass
class TardinessNode:
    left: object
    right: object
    output_cost: Fraction
    reference_cost: Fraction
    ok: bool
    groups: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)


@dataclass
class TardinessContext:
    eps: Fraction
    nodes: list = field(default_factory=list)
    cap_guesses: int = 2000
    cap_depth: int = 64
    truncated: bool = False
    memo: dict = field(default_factory=dict)


HALF = Fraction(1, 2)


def solve_tardiness_oracle(sub: Subproblem, S, ctx: TardinessContext) -> Optional[frozenset]:
    inst = sub.instance
    eps = ctx.eps
    S = frozenset(S)
    if sub.width <= HALF or all(r.d <= 0 for r in inst.rays):
        out = frozenset() if all(r.d <= 0 for r in inst.rays) else None
        if out is not None:
            ctx.nodes.append(TardinessNode(sub.left, sub.right, Fraction(0), selection_cost(inst, S), True))
        return out
    rows = inst.rows
    chosen = set()
    ledgers = []
    checks = {}
    for group in group_cross_rows(sub, eps):
        counts, guessed = counts_from_reference(group, rows, S, eps)
        apx_g, led = greedy_group_select(group, rows, counts, guessed, eps)
        s_g = [r.id for j in group.rows for r in rows[j] if r.id in S]
        led.cost = selection_cost(inst, apx_g)
        led.reference_cost = selection_cost(inst, s_g)
        led.cost_ok = led.cost <= (1 + 5 * eps) * led.reference_cost
        led.dominance_ok = not dominance_violations(group, inst, apx_g, S, inst.rays)
        ledgers.append(led)
        chosen |= apx_g
    left, right = split_tardiness(sub, chosen)
    ref_l = frozenset(r.id for r in left.instance.rects if r.id in S)
    ref_r = frozenset(r.id for r in right.instance.rects if r.id in S)
    checks["child_reference_feasible"] = is_feasible(left.instance, ref_l) and is_feasible(right.instance, ref_r)
    a = solve_tardiness_oracle(left, ref_l, ctx)
    b = solve_tardiness_oracle(right, ref_r, ctx)
    if a is None or b is None:
        return None
    out = frozenset(chosen) | a | b
    checks["feasible"] = is_feasible(inst, out)
    cost = selection_cost(inst, out)
    ref_cost = selection_cost(inst, S)
    ok = cost <= (1 + 5 * eps) * ref_cost and all(checks.values()) and all(l.cost_ok and l.dominance_ok for l in ledgers)
    ctx.nodes.append(TardinessNode(sub.left, sub.right, cost, ref_cost, ok, ledgers, checks))
    return out


def _count_vectors(k: int, size: int):
    """All (n_1..n_k) with sum <= size."""
    for vec in itertools.product(range(size + 1), repeat=k):
        if sum(vec) <= size:
            yield vec


def _group_guesses(group: TardinessGroup, rows: dict, eps):
    size = len(group.rows)
    for vec in _count_vectors(group.key.k, size):
        counts = {i + 1: n for i, n in enumerate(vec) if n}
        small = [i for i, n in counts.items() if n <= 1 / eps]

        def assign(pos, avail, acc):
            if pos == len(small):
                yield dict(acc)
                return
            i = small[pos]
            for rs in itertools.combinations(sorted(avail), counts[i]):
                acc[i] = rs
                yield from assign(pos + 1, avail - set(rs), acc)
            acc.pop(i, None)

        for guessed in assign(0, set(group.rows), {}):
            try:
                yield greedy_group_select(group, rows, counts, guessed, eps)[0]
            except InfeasibleGuess:
                continue


def solve_tardiness_exhaustive(sub: Subproblem, ctx: TardinessContext, depth: int = 0) -> Optional[frozenset]:
    inst = sub.instance
    key = (sub.left, sub.right, tuple(sorted(r.id for r in inst.rects)), tuple(sorted((r.s, r.t, r.d) for r in inst.rays)))
    if key in ctx.memo:
        return ctx.memo[key]
    if all(r.d <= 0 for r in inst.rays):
        ctx.memo[key] = frozenset()
        return frozenset()
    if sub.width <= HALF:
        ctx.memo[key] = None
        return None
    eps = ctx.eps
    groups = group_cross_rows(sub, eps)
    per_group = [list(dict.fromkeys(_group_guesses(g, inst.rows, eps))) for g in groups]
    limit = ctx.cap_guesses if depth < ctx.cap_depth else 1
    best = None
    for n, combo in enumerate(itertools.product(*per_group)):
        if n >= limit:
            ctx.truncated = True
            break
        chosen = frozenset().union(*combo) if combo else frozenset()
        left, right = split_tardiness(sub, chosen)
        a = solve_tardiness_exhaustive(left, ctx, depth + 1)
        if a is None:
            continue
        b = solve_tardiness_exhaustive(right, ctx, depth + 1)
        if b is None:
            continue
        cand = chosen | a | b
        c = selection_cost(inst, cand)
        if best is None or (c, sorted(cand)) < (best[0], sorted(best[1])):
            best = (c, cand)
    out = None if best is None else best[1]
    ctx.memo[key] = out
    return out


# ---------------------------------------------------------------------------
# preprocessing and driver


@dataclass
class PreprocessCandidate:
    cmax: Fraction
    instance: RcpInstance
    forced: frozenset
    discarded: frozenset
    C: Fraction
    C_bound: Fraction

    @property
    def C_ok(self) -> bool:
        return self.C <= self.C_bound


def tardiness_preprocess(inst: RcpInstance, eps) -> list:
    """One candidate per distinct cost value taken as the most expensive chosen rectangle."""
    eps = Fraction(eps)
    n = len(inst.rows)
    K = inst.K
    out = []
    for cmax in sorted({r.cost for r in inst.rects}):
        cheap_at = eps * cmax / (n * K)
        forced, discarded, keep = set(), set(), []
        for row in inst.rows.values():
            if min(r.cost for r in row) <= cheap_at:
                forced.update(r.id for r in row)
                continue
            for k, r in enumerate(row):
                if r.cost > cmax:
                    discarded.update(x.id for x in row[k:])
                    break
                keep.append(r)
        rays = reduce_demands(inst.rays, inst, forced)
        sub = RcpInstance(tuple(keep), rays)
        costs = [r.cost for r in keep]
        C = max(costs) / min(costs) if costs and min(costs) > 0 else Fraction(1)
        out.append(PreprocessCandidate(cmax, sub, frozenset(forced), frozenset(discarded), C, K * n / eps))
    return out


@dataclass
class TardinessResult:
    selection: Optional[frozenset]
    cost: Optional[Fraction]
    reference_cost: Optional[Fraction]
    candidates: list
    nodes: list
    truncated: bool = False

    @property
    def certificates_ok(self) -> bool:
        return all(n.ok for n in self.nodes) and all(c.C_ok for c in self.candidates)


def solve_tardiness_instance(inst: RcpInstance, eps, mode: str = "oracle", caps: Optional[dict] = None,
                             reference_cost=True) -> TardinessResult:
    """Preprocess, recurse on [0, T) per candidate, keep the cheapest feasible answer."""
    from .approx import CapsExhausted

    eps = Fraction(eps)
    caps = caps or {}
    ctx = TardinessContext(eps)
    ctx.cap_guesses = caps.get("cap_guesses", ctx.cap_guesses)
    ctx.cap_depth = caps.get("cap_depth", ctx.cap_depth)
    T = next_pow2(max(inst.x_extent, 1))
    candidates = tardiness_preprocess(inst, eps) if inst.rects else []
    best = None
    if not inst.rects:
        best = (Fraction(0), frozenset()) if all(r.d <= 0 for r in inst.rays) else None
    for cand in candidates:
        root = Subproblem(cand.instance, Fraction(0), Fraction(T))
        if mode == "oracle":
            ref = exact_solve(cand.instance).selection
            if ref is None:
                continue
            sel = solve_tardiness_oracle(root, ref, ctx)
        elif mode == "exhaustive":
            ctx.memo.clear()
            sel = solve_tardiness_exhaustive(root, ctx)
        else:
            raise ValueError(f"unknown tardiness mode {mode!r}")
        if sel is None:
            continue
        full = frozenset(sel | cand.forced)
        c = selection_cost(inst, full)
        if best is None or (c, sorted(full)) < (best[0], sorted(best[1])):
            best = (c, full)
    if best is None and ctx.truncated:
        raise CapsExhausted("no feasible candidate within the guess caps")
    ref_cost = None
    if reference_cost:
        ref_cost = exact_solve(inst).cost
    return TardinessResult(
        None if best is None else best[1],
        None if best is None else best[0],
        ref_cost,
        candidates,
        ctx.nodes,
        ctx.truncated,
    )


def solve_weighted_tardiness(instance, eps, mode: str = "tardiness", caps: Optional[dict] = None):
    """End-to-end: tardiness milestones, covering instance, this solver, lifted schedule."""
    from .reduction import solve_gsp

    kinds = {j.cost.kind for j in instance.jobs}
    if kinds - {"weighted-tardiness"}:
        raise ValueError("every job must have a weighted-tardiness cost")
    return solve_gsp(instance, eps, mode=mode, caps=caps)

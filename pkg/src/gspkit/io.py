"""JSON round-trips for scheduling instances, schedules, covering instances and selections."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .gsp import CostFunction, GspInstance, Job, Schedule, make_instance
from .numbers import INF, format_cost, parse_cost
from .rcp import RcpInstance, Ray, Rect


class FormatError(ValueError):
    """Malformed input; the message names the offending location."""


def load_json(path) -> object:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _need(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"{where}: missing field {key!r}")
    return d[key]


# ---------------------------------------------------------------------------
# scheduling


def cost_to_json(fn: CostFunction) -> dict:
    k = fn.kind
    if k in ("weighted-completion", "weighted-flow"):
        return {"kind": k, "w": fn.weight}
    if k in ("weighted-tardiness", "weight-of-tardy"):
        due = fn.clamped_due if fn.clamped_due is not None else fn.due
        return {"kind": k, "w": fn.weight, "d": due}
    if k == "hard-deadline":
        return {"kind": k, "d": fn.deadline}
    return {"kind": k, "steps": [[t, format_cost(c)] for t, c in fn.breakpoints]}


def cost_from_json(d: dict, where: str) -> CostFunction:
    kind = _need(d, "kind", where)
    try:
        probe = CostFunction(kind)
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None
    k = probe.kind
    try:
        if k in ("weighted-completion", "weighted-flow"):
            return CostFunction(k, weight=int(d.get("w", 0)))
        if k in ("weighted-tardiness", "weight-of-tardy"):
            return CostFunction(k, weight=int(d.get("w", 0)), due=int(_need(d, "d", where)))
        if k == "hard-deadline":
            return CostFunction(k, deadline=int(d.get("deadline", _need(d, "d", where))))
        steps = tuple((int(t), parse_cost(c)) for t, c in _need(d, "steps", where))
        return CostFunction(k, breakpoints=steps)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from None


def gsp_to_json(inst: GspInstance) -> dict:
    return {
        "jobs": [
            {"id": j.id, "r": j.r, "p": j.p, "cost": cost_to_json(j.cost)} for j in inst.jobs
        ]
    }


def gsp_from_json(data) -> GspInstance:
    jobs = []
    for k, jd in enumerate(_need(data, "jobs", "instance")):
        where = f"jobs[{k}]"
        try:
            job = Job(int(jd.get("id", k)), int(_need(jd, "r", where)), int(_need(jd, "p", where)),
                      cost_from_json(_need(jd, "cost", where), where + ".cost"))
        except (TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{where}: {exc}") from None
        jobs.append(job)
    return make_instance(jobs)


def schedule_to_json(s: Schedule, cost=None) -> dict:
    out = {"segments": [list(x) for x in s.segments], "completions": list(s.completions)}
    if cost is not None:
        out["cost"] = format_cost(cost)
    return out


def schedule_from_json(data) -> Schedule:
    segs = _need(data, "segments", "schedule")
    comps = _need(data, "completions", "schedule")
    try:
        return Schedule(tuple(tuple(int(v) for v in seg) for seg in segs), tuple(int(c) for c in comps))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"schedule: {exc}") from None


# ---------------------------------------------------------------------------
# covering


def rcp_to_json(inst: RcpInstance) -> dict:
    return {
        "rows": [
            {
                "j": j,
                "rects": [
                    {"id": r.id, "a": r.a, "b": r.b, "c": format_cost(r.cost), "p": r.p} for r in row
                ],
            }
            for j, row in inst.rows.items()
        ],
        "rays": [{"s": r.s, "t": r.t, "d": r.d} for r in sorted(inst.rays, key=lambda r: (r.t, r.s, r.d))],
    }


def rcp_from_json(data) -> RcpInstance:
    """Rectangle ids default to their position in row-major order."""
    rects = []
    k = 0
    for q, rd in enumerate(_need(data, "rows", "instance")):
        j = int(_need(rd, "j", f"rows[{q}]"))
        for i, x in enumerate(_need(rd, "rects", f"rows[{q}]")):
            where = f"rows[{q}].rects[{i}]"
            try:
                cost = parse_cost(_need(x, "c", where))
                if cost is INF:
                    raise FormatError(f"{where}: rectangle costs must be finite")
                rects.append(Rect(int(x.get("id", k)), int(_need(x, "a", where)), int(_need(x, "b", where)), j,
                                  Fraction(cost), int(_need(x, "p", where))))
            except (TypeError, ValueError) as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"{where}: {exc}") from None
            k += 1
    rays = []
    for q, x in enumerate(data.get("rays", [])):
        where = f"rays[{q}]"
        try:
            rays.append(Ray(int(_need(x, "s", where)), int(_need(x, "t", where)), int(_need(x, "d", where))))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{where}: {exc}") from None
    return RcpInstance(tuple(rects), tuple(rays))


def selection_to_json(sel) -> list:
    return sorted(int(i) for i in sel)


def selection_from_json(data) -> frozenset:
    if isinstance(data, dict):
        data = _need(data, "selection", "selection")
    if not isinstance(data, list):
        raise FormatError("selection: expected a list of rectangle ids")
    try:
        return frozenset(int(i) for i in data)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"selection: {exc}") from None


def varmap_to_json(vm) -> dict:
    return {
        "milestones": {str(j): list(m) for j, m in vm.milestones.items()},
        "status": [
            {"job": j, "i": i, "status": st[0], **({"rect": st[1]} if len(st) > 1 else {})}
            for (j, i), st in sorted(vm.status.items())
        ],
        "origin": {str(rid): {"job": o[0], "intervals": list(o[1])} for rid, o in sorted(vm.origin.items())},
        "unpadded": {str(rid): format_cost(c) for rid, c in sorted(vm.unpadded.items())},
        "fixed_cost": format_cost(vm.fixed_cost),
        "row_of_job": {str(j): list(v) for j, v in vm.row_of_job.items()},
    }

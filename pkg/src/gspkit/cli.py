"""Command line entry point: gen, solve, reduce, rcp solve, verify, bench, render.

Exit codes: 0 ok, 1 verification failure or unreadable input, 2 infeasible,
3 budget or guess caps exhausted.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import io as gio
from .numbers import INF, as_fraction, format_cost

EXIT_OK, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_CAPS = 0, 1, 2, 3


def _emit(obj, out) -> None:
    text = gio.dump_json(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _range(text: str) -> tuple:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def _mix(text: str) -> dict:
    out = {}
    for part in text.split(","):
        name, _, w = part.partition("=")
        out[name.strip()] = int(w or 1)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    from .gen import GenSpec, gen_instance, gen_rcp, gen_well_structured

    if args.kind == "gsp":
        kw = {}
        if args.mix:
            kw["mix"] = _mix(args.mix)
        spec = GenSpec(n=args.n, p_max=args.p_max, r_max=args.r_max, weight_range=_range(args.weights),
                       due_range=_range(args.due), seed=args.seed, **kw)
        _emit(gio.gsp_to_json(gen_instance(spec)), args.output)
    elif args.kind == "rcp":
        _emit(gio.rcp_to_json(gen_rcp(args.seed, rows=args.n, width=args.width)), args.output)
    else:
        inst = gen_well_structured(args.seed, rows=args.n, width=args.width, delta=as_fraction(args.delta))
        _emit(gio.rcp_to_json(inst), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .approx import CapsExhausted
    from .reduction import solve_gsp

    inst = gio.gsp_from_json(gio.load_json(args.instance))
    eps = as_fraction(args.epsilon)
    mode = "tardiness" if args.objective == "tardiness" else args.mode
    if mode == "tardiness" and any(j.cost.kind != "weighted-tardiness" for j in inst.jobs):
        print("error: --objective tardiness needs weighted-tardiness jobs only", file=sys.stderr)
        return EXIT_VERIFY
    caps = {"cap_guesses": args.cap_guesses, "cap_depth": args.cap_depth}
    offsets = [args.offset] if args.offset else None
    try:
        sol = solve_gsp(inst, eps, mode=mode, caps=caps, offsets=offsets)
    except CapsExhausted as exc:
        print(f"caps exhausted: {exc}", file=sys.stderr)
        return EXIT_CAPS
    report = sol.as_dict()
    report["epsilon"] = format_cost(eps)
    report["cost_offset"] = format_cost(inst.cost_offset)
    if sol.schedule is not None:
        report["schedule"] = gio.schedule_to_json(sol.schedule, sol.cost)
    _emit(report, args.output)
    return EXIT_INFEASIBLE if sol.schedule is None else EXIT_OK


def cmd_reduce(args) -> int:
    from .gsp import horizon
    from .reduction import build_milestones, build_milestones_tardiness, build_rcp, build_tau

    inst = gio.gsp_from_json(gio.load_json(args.instance))
    eps = as_fraction(args.epsilon)
    T = horizon(inst)
    if args.tardiness:
        ms = [build_milestones_tardiness(j, eps, T) for j in inst.jobs]
    else:
        ms = [build_milestones(j, eps, T) for j in inst.jobs]
    taus = build_tau(inst.jobs, ms, args.offset, eps)
    rcp, vm = build_rcp(inst, ms, taus, eps)
    _emit(gio.rcp_to_json(rcp), args.output)
    if args.varmap:
        gio.dump_json(gio.varmap_to_json(vm), args.varmap)
    return EXIT_OK


def _certificate_dict(c) -> dict:
    return {
        "left": str(c.left),
        "right": str(c.right),
        "output_cost": format_cost(c.output_cost),
        "reference_capx": None if c.reference_capx is None else format_cost(c.reference_capx),
        "factor": None if c.factor is None else format_cost(c.factor),
        "ok": c.ok,
        "checks": c.checks,
    }


def cmd_rcp_solve(args) -> int:
    from .approx import CapsExhausted, solve_rcp
    from .rcp import BudgetExceeded, brute_force, check_well_structured, exact_solve, selection_cost
    from .tardiness import solve_tardiness_instance

    inst = gio.rcp_from_json(gio.load_json(args.instance))
    eps = as_fraction(args.epsilon)
    caps = {"cap_guesses": args.cap_guesses, "cap_depth": args.cap_depth}
    report = {"mode": args.mode, "epsilon": format_cost(eps), "seed": args.seed}
    try:
        if args.mode == "brute":
            res = brute_force(inst, args.budget)
            sel = res.selection
        elif args.mode == "dp":
            sel = exact_solve(inst).selection
        elif args.mode in ("approx-oracle", "approx-exhaustive"):
            ref = gio.selection_from_json(gio.load_json(args.reference)) if args.reference else None
            res = solve_rcp(inst, eps, mode=args.mode, reference=ref, caps=caps)
            sel = res.selection
            report["reference_cost"] = None if res.reference_cost is None else format_cost(res.reference_cost)
            report["truncated"] = res.truncated
            report["levels"] = [_certificate_dict(c) for c in res.certificates]
        else:
            bad = check_well_structured(inst, as_fraction(args.delta))
            if bad:
                report["well_structured_violations"] = bad
            res = solve_tardiness_instance(inst, eps, mode="oracle", caps=caps)
            sel = res.selection
            report["reference_cost"] = None if res.reference_cost is None else format_cost(res.reference_cost)
            report["certificates_ok"] = res.certificates_ok
            report["groups"] = [g.as_dict() for node in res.nodes for g in node.groups]
            report["preprocess"] = [
                {"cmax": format_cost(c.cmax), "forced": sorted(c.forced), "C": format_cost(c.C),
                 "C_bound": format_cost(c.C_bound), "ok": c.C_ok}
                for c in res.candidates
            ]
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_CAPS
    except CapsExhausted as exc:
        print(f"caps exhausted: {exc}", file=sys.stderr)
        return EXIT_CAPS
    if sel is None:
        report["selection"] = None
        report["cost"] = format_cost(INF)
        _emit(report, args.output)
        return EXIT_INFEASIBLE
    report["selection"] = gio.selection_to_json(sel)
    report["cost"] = format_cost(selection_cost(inst, sel))
    _emit(report, args.output)
    if args.selection_out:
        gio.dump_json(gio.selection_to_json(sel), args.selection_out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .gsp import check_schedule, total_cost, validate_gsp
    from .rcp import prefix_violations, uncovered_rays, validate_rcp

    data = gio.load_json(args.instance)
    sol = gio.load_json(args.solution)
    problems = []
    if isinstance(data, dict) and "rows" in data:
        inst = gio.rcp_from_json(data)
        diag = validate_rcp(inst)
        problems += list(diag.violations)
        sel = gio.selection_from_json(sol)
        problems += prefix_violations(inst, sel)
        for ray, got in uncovered_rays(inst, sel):
            problems.append(f"ray (s={ray.s}, t={ray.t}) covered {got} of demand {ray.d}")
    else:
        inst = gio.gsp_from_json(data)
        problems += list(validate_gsp(inst).violations)
        if isinstance(sol, dict) and "schedule" in sol:
            sol = sol["schedule"]
        sched = gio.schedule_from_json(sol)
        problems += check_schedule(inst, sched)
        if not problems:
            cost = total_cost(inst, sched.completions)
            print(f"cost {format_cost(cost)}")
    for p in problems:
        print(p)
    if problems:
        return EXIT_VERIFY
    print("ok")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import MODES, BenchConfig, report_csv, report_json, run_bench

    modes = tuple(args.modes.split(",")) if args.modes else MODES
    cfg = BenchConfig(count=args.count, seed=args.seed, rows=args.rows, width=args.width,
                      eps=as_fraction(args.epsilon), budget=args.budget, modes=modes,
                      cap_guesses=args.cap_guesses, cap_depth=args.cap_depth, threads=args.threads)
    rows = run_bench(cfg)
    if args.json:
        gio.dump_json(report_json(rows, cfg), args.json)
    text = report_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    failed = any(m.certificates is False for r in rows for m in r.modes.values())
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_render(args) -> int:
    from .render import render_svg

    inst = gio.rcp_from_json(gio.load_json(args.instance))
    sel = gio.selection_from_json(gio.load_json(args.selection)) if args.selection else None
    svg = render_svg(inst, sel)
    if args.output:
        Path(args.output).write_text(svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _caps(p) -> None:
    p.add_argument("--cap-guesses", type=int, default=2000)
    p.add_argument("--cap-depth", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gspkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--kind", choices=("gsp", "rcp", "rcp-ws"), default="gsp")
    p.add_argument("--n", type=int, default=4, help="jobs (gsp) or rows (rcp)")
    p.add_argument("--p-max", type=int, default=3)
    p.add_argument("--r-max", type=int, default=3)
    p.add_argument("--mix", help="cost kinds with weights, e.g. tardiness=2,flow=1")
    p.add_argument("--weights", default="0:3", help="weight range lo:hi")
    p.add_argument("--due", default="0:6", help="due date range lo:hi")
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--delta", default="1/2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve a scheduling instance through the covering reduction")
    p.add_argument("instance")
    p.add_argument("--epsilon", default="1/2")
    p.add_argument("--objective", choices=("general", "tardiness"), default="general")
    p.add_argument("--mode", choices=("exact", "approx-oracle", "approx-exhaustive"), default="exact")
    p.add_argument("--offset", type=int, help="use a single block offset")
    _caps(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="emit the covering instance for one block offset")
    p.add_argument("instance")
    p.add_argument("--epsilon", default="1/2")
    p.add_argument("--offset", type=int, default=1)
    p.add_argument("--tardiness", action="store_true", help="use the tardiness milestones")
    p.add_argument("--varmap", help="write the variable map sidecar here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("rcp", help="covering instance tools")
    rsub = p.add_subparsers(dest="rcp_command", required=True)
    q = rsub.add_parser("solve")
    q.add_argument("instance")
    q.add_argument("--mode", choices=("brute", "dp", "approx-oracle", "approx-exhaustive", "tardiness"), default="dp")
    q.add_argument("--epsilon", default="1/4")
    q.add_argument("--delta", default="1/2")
    q.add_argument("--budget", type=int, default=10**6)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--reference", help="reference selection for approx-oracle")
    _caps(q)
    q.add_argument("--selection-out")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_rcp_solve)

    p = sub.add_parser("verify", help="check a solution against its instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run solvers on generated instances")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--epsilon", default="1/4")
    p.add_argument("--budget", type=int, default=10**5)
    p.add_argument("--modes", help="comma separated subset of dp,approx-oracle,approx-exhaustive,tardiness")
    p.add_argument("--threads", type=int, help="defaults to GSPKIT_THREADS or 1")
    p.add_argument("--cap-guesses", type=int, default=200)
    p.add_argument("--cap-depth", type=int, default=8)
    p.add_argument("--json")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="draw a covering instance as SVG")
    p.add_argument("instance")
    p.add_argument("--selection")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except gio.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())

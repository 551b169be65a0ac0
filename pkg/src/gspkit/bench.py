"""Benchmark runs over generated covering instances: costs, ratios, certificates."""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import prod
from typing import Optional

from .gen import gen_rcp
from .numbers import format_cost
from .rcp import BudgetExceeded, brute_force, exact_solve, is_feasible

MODES = ("dp", "approx-oracle", "approx-exhaustive", "tardiness")

CSV_COLUMNS = ["instance", "rows", "rects", "rays", "optimum"] + [
    f"{m}_{col}" for m in MODES for col in ("cost", "ratio", "certificates")
]


@dataclass
class BenchConfig:
    count: int = 10
    seed: int = 0
    rows: int = 3
    width: int = 4
    max_rects: int = 2
    eps: Fraction = Fraction(1, 4)
    budget: int = 10**5
    modes: tuple = MODES
    cap_guesses: int = 200
    cap_depth: int = 8
    threads: Optional[int] = None


@dataclass
class ModeResult:
    cost: Optional[str] = None
    ratio: Optional[str] = None
    certificates: Optional[bool] = None
    error: Optional[str] = None
    seconds: float = 0.0


@dataclass
class BenchRow:
    instance: int
    rows: int
    rects: int
    rays: int
    optimum: Optional[str]
    modes: dict = field(default_factory=dict)
    seconds: float = 0.0


def _threads(cfg: BenchConfig) -> int:
    if cfg.threads is not None:
        return max(1, cfg.threads)
    env = os.environ.get("GSPKIT_THREADS")
    return max(1, int(env)) if env else 1


def _ratio(cost, opt) -> Optional[str]:
    if opt is None or cost is None:
        return None
    if opt == 0:
        return "1" if cost == 0 else "inf"
    return str(format_cost(Fraction(cost) / opt))


def _run_mode(mode: str, inst, cfg: BenchConfig):
    from .approx import solve_rcp
    from .tardiness import solve_tardiness_instance

    caps = {"cap_guesses": cfg.cap_guesses, "cap_depth": cfg.cap_depth}
    if mode == "dp":
        res = exact_solve(inst)
        return res.selection, res.selection is None or is_feasible(inst, res.selection)
    if mode in ("approx-oracle", "approx-exhaustive"):
        res = solve_rcp(inst, cfg.eps, mode=mode, caps=caps)
        ok = all(c.ok for c in res.certificates)
        if res.selection is not None:
            ok = ok and is_feasible(inst, res.selection)
        return res.selection, ok
    if mode == "tardiness":
        res = solve_tardiness_instance(inst, cfg.eps, mode="oracle", caps=caps, reference_cost=False)
        ok = res.certificates_ok and (res.selection is None or is_feasible(inst, res.selection))
        return res.selection, ok
    raise ValueError(f"unknown bench mode {mode!r}")


def run_one(k: int, cfg: BenchConfig) -> BenchRow:
    start = time.perf_counter()
    inst = gen_rcp(cfg.seed * 100003 + k, rows=cfg.rows, width=cfg.width, max_rects=cfg.max_rects)
    row = BenchRow(k, len(inst.rows), len(inst.rects), len(inst.rays), None)
    opt = None
    if prod(len(r) + 1 for r in inst.rows.values()) <= cfg.budget:
        try:
            opt = brute_force(inst, cfg.budget).cost
        except BudgetExceeded:
            opt = None
    row.optimum = None if opt is None else str(format_cost(opt))
    for mode in cfg.modes:
        t0 = time.perf_counter()
        mr = ModeResult()
        try:
            sel, ok = _run_mode(mode, inst, cfg)
            if sel is not None:
                c = sum((inst.by_id[i].cost for i in sel), Fraction(0))
                mr.cost = str(format_cost(c))
                mr.ratio = _ratio(c, opt)
            mr.certificates = ok
        except Exception as exc:  # recorded, the run continues
            mr.error = f"{type(exc).__name__}: {exc}"
            mr.certificates = False
        mr.seconds = time.perf_counter() - t0
        row.modes[mode] = mr
    row.seconds = time.perf_counter() - start
    return row


def run_bench(cfg: BenchConfig) -> list:
    """Rows sorted by instance id whatever the degree of parallelism."""
    n = _threads(cfg)
    if n == 1:
        rows = [run_one(k, cfg) for k in range(cfg.count)]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(run_one, range(cfg.count), [cfg] * cfg.count))
    return sorted(rows, key=lambda r: r.instance)


def report_json(rows: list, cfg: BenchConfig) -> dict:
    c = asdict(cfg)
    c["eps"] = str(format_cost(cfg.eps))
    c["modes"] = list(cfg.modes)
    return {"config": c, "rows": [asdict(r) for r in rows]}


def report_csv(rows: list) -> str:
    """Fixed columns, no timings: identical runs give identical bytes."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        line = [r.instance, r.rows, r.rects, r.rays, r.optimum or ""]
        for m in MODES:
            mr = r.modes.get(m)
            if mr is None:
                line += ["", "", ""]
            else:
                cert = "" if mr.certificates is None else ("pass" if mr.certificates else "fail")
                line += [mr.cost or "", mr.ratio or "", cert]
        w.writerow(line)
    return buf.getvalue()

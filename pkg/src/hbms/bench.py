"""Paired benchmark runs over generated instances and their summary."""
from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from hbms.bms import SolveResult, solve_bms
from hbms.consistency import enforce_arc_consistency
from hbms.generator import GeneratorConfig, generate
from hbms.instance_io import ResultRecord
from hbms.maxsum import build_factor_graph, solve_tree
from hbms.model import FORBIDDEN, InfeasibleError, Instance, evaluate
from hbms.oracle import BudgetExceeded, solve_exact
from hbms.solver import solve_hbms

ALGORITHMS = ("maxsum-tree", "bms", "hbms", "exact")

# instances this small are also checked for global feasibility with the oracle
FEASIBILITY_ORACLE_BUDGET = 200_000
MAX_ATTEMPTS = 1000


class UnsupportedAlgorithm(ValueError):
    pass


@dataclass(frozen=True)
class BenchPlan:
    sweep: tuple[int, ...] = tuple(range(5, 16))
    instances_per_point: int = 20
    template: GeneratorConfig = field(default_factory=lambda: GeneratorConfig(domain_size=10))
    algorithms: tuple[str, ...] = ("bms", "hbms")
    base_seed: int = 0

    def __post_init__(self):
        if self.instances_per_point < 1:
            raise ValueError("instances_per_point must be at least 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if any(n < 2 for n in self.sweep):
            raise ValueError("every sweep point needs n >= 2")


def instance_seed(base_seed: int, n: int, index: int, attempt: int = 0) -> int:
    """Seed of the ``attempt``-th draw for instance ``index`` at size ``n``."""
    return base_seed + n * 1_000_000 + index * 1_000 + attempt


def globally_infeasible(instance: Instance) -> bool:
    pruned, report = enforce_arc_consistency(instance)
    if report.infeasible:
        return True
    try:
        return solve_exact(pruned, FEASIBILITY_ORACLE_BUDGET).assignment is None
    except BudgetExceeded:
        return False


@dataclass(frozen=True)
class PlannedInstance:
    instance_id: str
    n: int
    seed: int
    attempts: int


def draw_instance(plan: BenchPlan, n: int, index: int) -> tuple[PlannedInstance, Instance]:
    """Generate, skipping globally infeasible draws by bumping the seed."""
    for attempt in range(MAX_ATTEMPTS):
        seed = instance_seed(plan.base_seed, n, index, attempt)
        inst = generate(replace(plan.template, n_vars=n, seed=seed))
        if not globally_infeasible(inst):
            return PlannedInstance(f"n{n:02d}-i{index:03d}", n, seed, attempt), inst
    raise RuntimeError(f"no feasible instance for n={n}, index={index}")


def run_algorithm(instance: Instance, algorithm: str) -> SolveResult:
    if algorithm == "bms":
        return solve_bms(instance)
    if algorithm == "hbms":
        return solve_hbms(instance)[0]
    if algorithm == "exact":
        start = time.perf_counter()
        res = solve_exact(instance)
        wall = (time.perf_counter() - start) * 1000.0
        return SolveResult("exact", res.assignment, res.value, res.assignment is not None, None, wall, res)
    if algorithm == "maxsum-tree":
        start = time.perf_counter()
        if not build_factor_graph(instance).acyclic:
            raise UnsupportedAlgorithm("maxsum-tree needs an acyclic instance")
        try:
            assignment = solve_tree(instance)
            value = evaluate(instance, assignment)
        except InfeasibleError:
            assignment, value = None, FORBIDDEN
        wall = (time.perf_counter() - start) * 1000.0
        return SolveResult("maxsum-tree", assignment, value, value != FORBIDDEN, None, wall)
    raise UnsupportedAlgorithm(algorithm)


def to_record(instance_id: str, seed: int | None, instance: Instance, result: SolveResult) -> ResultRecord:
    bound = result.bound
    return ResultRecord(
        instance_id=instance_id,
        seed=seed,
        n_vars=instance.n_vars,
        n_factors=instance.n_factors,
        algorithm=result.algorithm,
        value=result.value,
        feasible=result.feasible,
        vm=None if bound is None else bound.vm,
        B=None if bound is None else bound.B,
        upper_bound=None if bound is None else bound.upper_bound,
        wall_ms=result.wall_ms,
    )


def _run_point(args) -> list[ResultRecord]:
    plan, n, index = args
    planned, inst = draw_instance(plan, n, index)
    records = []
    for alg in plan.algorithms:
        try:
            result = run_algorithm(inst, alg)
        except (BudgetExceeded, UnsupportedAlgorithm):
            continue
        records.append(to_record(planned.instance_id, planned.seed, inst, result))
    return records


def run_bench(plan: BenchPlan, workers: int = 1) -> list[ResultRecord]:
    """Rows ordered by (sweep point, instance index, plan algorithm order)."""
    tasks = [(plan, n, i) for n in plan.sweep for i in range(plan.instances_per_point)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_point, tasks))
    else:
        batches = [_run_point(t) for t in tasks]
    return [r for batch in batches for r in batch]


@dataclass
class SummaryRow:
    n_vars: int
    instances: int
    infeasible: dict[str, int]
    improvements: list[float] = field(default_factory=list)
    time_ratio: float | None = None
    rescued: int = 0
    lost: int = 0

    @property
    def stats(self) -> dict[str, float] | None:
        if not self.improvements:
            return None
        xs = self.improvements
        return {
            "mean": statistics.fmean(xs),
            "median": statistics.median(xs),
            "min": min(xs),
            "max": max(xs),
        }


def _num(text: str) -> float:
    if text == "forbidden":
        return FORBIDDEN
    return float(text)


def improvement(bms_value: float, hbms_value: float) -> float:
    return (hbms_value - bms_value) / bms_value * 100.0


def summarize(rows: list[dict[str, str]]) -> list[SummaryRow]:
    """Per-size summary computed from parsed results-CSV rows alone.

    Improvement uses only instances where BMS and HBMS are both feasible and
    the BMS value is positive; infeasible outcomes are counted per algorithm.
    """
    by_instance: dict[str, dict[str, dict[str, str]]] = {}
    sizes: dict[str, int] = {}
    for row in rows:
        by_instance.setdefault(row["instance_id"], {})[row["algorithm"]] = row
        sizes[row["instance_id"]] = int(row["n_vars"])
    out: dict[int, SummaryRow] = {}
    times: dict[int, list[tuple[float, float]]] = {}
    for iid, algs in by_instance.items():
        n = sizes[iid]
        s = out.setdefault(n, SummaryRow(n, 0, {}))
        s.instances += 1
        for alg, row in algs.items():
            s.infeasible.setdefault(alg, 0)
            if row["feasible"] != "true":
                s.infeasible[alg] += 1
        b, h = algs.get("bms"), algs.get("hbms")
        if b is None or h is None:
            continue
        if b["wall_ms"] and h["wall_ms"]:
            times.setdefault(n, []).append((float(b["wall_ms"]), float(h["wall_ms"])))
        s.rescued += b["feasible"] != "true" and h["feasible"] == "true"
        s.lost += b["feasible"] == "true" and h["feasible"] != "true"
        if b["feasible"] == "true" and h["feasible"] == "true" and _num(b["value"]) > 0:
            s.improvements.append(improvement(_num(b["value"]), _num(h["value"])))
    for n, pairs in times.items():
        tb = sum(p[0] for p in pairs)
        if tb > 0:
            out[n].time_ratio = sum(p[1] for p in pairs) / tb
    return [out[n] for n in sorted(out)]


def format_summary(summary: list[SummaryRow], algorithms) -> str:
    paired = "bms" in algorithms and "hbms" in algorithms
    head = ["n", "instances"] + [f"infeasible_{a}" for a in algorithms]
    if paired:
        head += ["paired", "mean_%", "median_%", "min_%", "max_%", "hbms/bms_time"]
    lines = ["\t".join(head)]
    every = []
    for s in summary:
        cells = [str(s.n_vars), str(s.instances)] + [str(s.infeasible.get(a, 0)) for a in algorithms]
        if paired:
            st = s.stats
            every.extend(s.improvements)
            cells.append(str(len(s.improvements)))
            if st:
                cells += [f"{st[k]:.3f}" for k in ("mean", "median", "min", "max")]
            else:
                cells += ["-"] * 4
            cells.append("-" if s.time_ratio is None else f"{s.time_ratio:.2f}")
        lines.append("\t".join(cells))
    if paired:
        if every:
            neg = sum(x < 0 for x in every)
            pos = sum(x > 0 for x in every)
            lines.append(
                f"overall: paired={len(every)} mean={statistics.fmean(every):.3f}% "
                f"median={statistics.median(every):.3f}% min={min(every):.3f}% "
                f"max={max(every):.3f}% positive={pos} negative={neg} zero={len(every) - pos - neg}"
            )
        else:
            lines.append("overall: paired=0 (no instance where both BMS and HBMS are feasible)")
        rescued = sum(s.rescued for s in summary)
        lost = sum(s.lost for s in summary)
        lines.append(f"feasibility: hbms-only={rescued} bms-only={lost}")
    return "\n".join(lines) + "\n"


def mean_improvement(summary: list[SummaryRow]) -> float:
    xs = [x for s in summary for x in s.improvements]
    return statistics.fmean(xs) if xs else math.nan

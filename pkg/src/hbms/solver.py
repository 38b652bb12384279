"""Hard-consistency-enforced Bounded Max-Sum.

Four phases:

1. arc consistency over hard factors prunes unsupported values;
2. the bounded pipeline runs on the pruned instance and yields, per variable,
   the set of values tied at the tree optimum;
3. the factors that lost a dependency in phase 2 form a small instance over
   the tied values only, solved with the bounded pipeline; its raw marginals
   rank each tied value;
4. Max-Sum runs again on the phase-2 tree, restricted to the tied values and
   to factor entries that are tight at the tree optimum, with the rankings
   attached as unary factors. Every assignment that phase 4 can return is
   therefore still optimal for the phase-2 tree; the rankings only decide
   between such assignments.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hbms.bms import BmsRun, BoundReport, RemovedDependency, SolveResult, bms_pipeline
from hbms.bms import build_spanning_structure, edge_weights
from hbms.consistency import PruneReport, enforce_arc_consistency
from hbms.maxsum import (
    REL_TOL,
    PriorityTieBreaker,
    build_factor_graph,
    decode_assignment,
    extract_tie_sets,
    run_tree_maxsum,
)
from hbms.model import (
    FORBIDDEN,
    HARD,
    SOFT,
    Factor,
    InfeasibleError,
    Instance,
    Variable,
    evaluate,
)

PriorityTable = dict[int, dict[int, float]]


@dataclass
class HbmsTrace:
    instance: Instance = field(repr=False)
    prune: PruneReport
    B_after: float | None = None
    tie_sets: list[tuple[int, ...]] | None = None
    sub_vars: int = 0
    sub_factors: int = 0
    priorities: PriorityTable = field(default_factory=dict)
    phase2_assignment: dict[int, int] | None = None
    assignment: dict[int, int] | None = None
    fallback: str | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)

    @cached_property
    def B_before(self) -> float:
        """Cut weight of the bounded relaxation of the unpruned instance."""
        graph = build_factor_graph(self.instance)
        _, removed = build_spanning_structure(graph, edge_weights(self.instance))
        return float(sum(r.weight for r in removed))


def build_tiebreak_subproblem(
    instance: Instance, removed: list[RemovedDependency], tie_sets: list[tuple[int, ...]]
) -> tuple[Instance, list[int]]:
    """Instance made of the factors that lost a dependency, over tied values only.

    Returns the sub-instance and the original id of each of its variables.
    Re-sliced hard factors that allow nothing are kept; they drive the
    affected priorities to forbidden.
    """
    factor_ids = sorted({r.factor for r in removed})
    var_ids = sorted({v for j in factor_ids for v in instance.factors[j].scope})
    local = {v: k for k, v in enumerate(var_ids)}
    variables = []
    for v in var_ids:
        variables.append(Variable(instance.variables[v].name, tuple(tie_sets[v])))
    factors = []
    for j in factor_ids:
        f = instance.factors[j]
        rows, cols = (
            [instance.variables[v].position[x] for x in tie_sets[v]] for v in f.scope
        )
        table = f.table[np.ix_(rows, cols)]
        factors.append(Factor(f.name, tuple(local[v] for v in f.scope), f.kind, table))
    return Instance(tuple(variables), tuple(factors)), var_ids


def compute_priorities(sub: Instance, var_ids: list[int]) -> PriorityTable:
    """Raw tree marginal of each tied value in the bounded solve of ``sub``."""
    if sub.n_vars == 0:
        return {}
    run = bms_pipeline(sub, normalize=False)
    table: PriorityTable = {}
    for k, v in enumerate(var_ids):
        dom = sub.variables[k].domain
        table[v] = {x: float(run.maxsum.marginals[k][p]) for p, x in enumerate(dom)}
    return table


def _priority_scores(priorities: PriorityTable) -> dict[int, np.ndarray]:
    """Finite unary scores; forbidden priorities sink below every finite choice."""
    spans = {}
    for v, table in priorities.items():
        finite = [p for p in table.values() if p != FORBIDDEN]
        spans[v] = (min(finite), max(finite)) if finite else None
    total_span = sum(hi - lo for lo, hi in (s for s in spans.values() if s))
    scores = {}
    for v, table in priorities.items():
        if spans[v] is None:
            scores[v] = {x: 0.0 for x in table}
            continue
        floor = spans[v][0] - total_span - 1.0
        scores[v] = {x: (p if p != FORBIDDEN else floor) for x, p in table.items()}
    return scores


def _tight_tree(run: BmsRun, tie_sets: list[tuple[int, ...]], priorities: PriorityTable) -> Instance:
    """Phase-2 tree restricted to tied values and optimum-tight factor entries."""
    tree = run.tree.instance
    ms = run.maxsum
    factors = []
    for j, f in enumerate(tree.factors):
        if f.arity == 1:
            continue
        a, b = f.scope
        belief = f.table + ms.var_to_factor[(j, a)][:, None] + ms.var_to_factor[(j, b)][None, :]
        top = belief.max()
        tight = belief >= top - REL_TOL * max(1.0, abs(float(top)))
        factors.append(Factor(f.name, f.scope, HARD, np.where(tight, 0.0, FORBIDDEN)))
    scores = _priority_scores(priorities)
    variables = list(tree.variables)
    for v, table in sorted(scores.items()):
        dom = variables[v].domain
        row = np.array([table.get(x, 0.0) for x in dom])
        factors.append(Factor(f"priority_{variables[v].name}", (v,), SOFT, row))
    full = Instance(tuple(variables), tuple(factors), tree.agents)
    return full.restrict({v: tie_sets[v] for v in range(tree.n_vars)})


def solve_hbms(instance: Instance) -> tuple[SolveResult, HbmsTrace]:
    start = time.perf_counter()
    clock = start

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        trace.timings_ms[name] = (now - clock) * 1000.0
        clock = now

    pruned, report = enforce_arc_consistency(instance)
    trace = HbmsTrace(instance, report)
    lap("consistency")

    def finish(assignment, bound):
        value = FORBIDDEN if assignment is None else evaluate(instance, assignment)
        trace.assignment = assignment
        wall = (time.perf_counter() - start) * 1000.0
        return SolveResult("hbms", assignment, value, value != FORBIDDEN, bound, wall, trace), trace

    if report.infeasible:
        return finish(None, BoundReport(FORBIDDEN, 0.0))

    run = bms_pipeline(pruned)
    trace.B_after = run.B
    trace.phase2_assignment = run.assignment
    if run.assignment is None:
        lap("tree")
        return finish(None, run.bound)
    ties = extract_tie_sets(pruned, run.maxsum.marginals)
    trace.tie_sets = ties
    lap("tree")

    sub, var_ids = build_tiebreak_subproblem(pruned, run.removed, ties)
    trace.sub_vars, trace.sub_factors = sub.n_vars, sub.n_factors
    if not any(len(ties[v]) > 1 for v in var_ids):
        # no tied value to rank: phase 4 would reproduce the phase-2 decoding
        lap("subproblem")
        return finish(run.assignment, run.bound)
    priorities = compute_priorities(sub, var_ids)
    trace.priorities = priorities
    lap("subproblem")

    assignment = _final_assignment(run, ties, priorities, trace)
    lap("final")
    return finish(assignment, run.bound)


def _final_assignment(run: BmsRun, ties, priorities: PriorityTable, trace: HbmsTrace):
    restricted = _tight_tree(run, ties, priorities)
    graph = build_factor_graph(restricted)
    try:
        assignment = decode_assignment(graph, run_tree_maxsum(graph), PriorityTieBreaker(priorities))
    except InfeasibleError:
        trace.fallback = "restricted tree infeasible"
        return run.assignment
    vm = run.bound.vm
    got = evaluate(run.tree.instance, assignment)
    if got < vm - REL_TOL * max(1.0, abs(vm)):
        trace.fallback = "restricted tree lost optimality"
        return run.assignment
    return assignment


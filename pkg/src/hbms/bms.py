"""Bounded Max-Sum: relax a cyclic factor graph to a maximum spanning tree.

Each (factor, variable) edge gets an impact weight, the worst-case utility
swing that variable can cause in the factor. Edges outside a maximum-weight
spanning forest are cut; a cut binary factor is replaced by its minimum over
the cut variable, and the cut weights add up to ``B``. The tree optimum
``vm`` then satisfies ``optimum <= vm + B``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hbms.maxsum import (
    FactorGraph,
    MaxSumResult,
    TieBreaker,
    _UnionFind,
    build_factor_graph,
    decode_assignment,
    lexicographic,
    run_tree_maxsum,
)
from hbms.model import (
    FORBIDDEN,
    ContractError,
    Factor,
    InfeasibleError,
    Instance,
    evaluate,
)


def edge_impact(factor: Factor, variable: int, strict: bool = True) -> float:
    """Largest utility swing ``variable`` can cause in ``factor``.

    For each value of the other scope variable, the gap between the best and
    worst finite entry over ``variable``'s values; the weight is the largest
    gap. Forbidden entries are ignored. With ``strict`` a row without any
    finite entry is a contract violation; otherwise such rows are skipped.
    """
    if variable not in factor.scope:
        raise ContractError(f"variable {variable} is not in the scope of {factor.name}")
    if factor.arity == 1:
        finite = factor.table[np.isfinite(factor.table)]
        if finite.size == 0:
            if strict:
                raise ContractError(f"unary factor {factor.name} has no finite entry")
            return 0.0
        return float(finite.max() - finite.min())
    kept_first = factor.oriented(factor.other(variable))
    if kept_first.size == 0:
        return 0.0
    if factor.is_hard:
        # finite hard entries are all 0, so every row range is 0
        if strict and not np.isfinite(kept_first).any(axis=1).all():
            raise ContractError("a row of the factor has no finite entry")
        return 0.0
    return float((kept_first.max(axis=1) - kept_first.min(axis=1)).max())


def edge_weights(instance: Instance, strict: bool = False) -> dict[tuple[int, int], float]:
    return {
        (j, v): edge_impact(f, v, strict)
        for j, f in enumerate(instance.factors)
        for v in f.scope
    }


def reduce_removed_factor(factor: Factor, removed: int) -> np.ndarray:
    """Minimum over the removed variable of the finite entries, per kept value.

    A kept value whose every entry is forbidden stays forbidden.
    """
    if factor.arity != 2 or removed not in factor.scope:
        raise ContractError(f"cannot remove {removed} from {factor.name}")
    table = factor.oriented(factor.other(removed))
    finite = np.isfinite(table)
    lo = np.where(finite, table, np.inf).min(axis=1, initial=np.inf)
    return np.where(finite.any(axis=1), lo, FORBIDDEN)


@dataclass(frozen=True)
class RemovedDependency:
    factor: int
    variable: int
    weight: float
    reduction: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class BoundReport:
    vm: float
    B: float

    @property
    def upper_bound(self) -> float:
        return self.vm + self.B

    @property
    def rho(self) -> float | None:
        if self.vm > 0:
            return self.upper_bound / self.vm
        return None


@dataclass
class SolveResult:
    algorithm: str
    assignment: dict[int, int] | None
    value: float
    feasible: bool
    bound: BoundReport | None = None
    wall_ms: float = 0.0
    trace: Any = None


def build_spanning_structure(
    graph: FactorGraph, weights: dict[tuple[int, int], float]
) -> tuple[FactorGraph, list[RemovedDependency]]:
    """Maximum-weight spanning forest over factor-graph edges.

    Edges are taken by decreasing weight, ties broken by factor id then
    variable id; an edge closing a cycle is cut. Cut binary factors become
    unary factors on their surviving variable.
    """
    inst = graph.instance
    missing = [e for e in graph.edges if e not in weights]
    if missing:
        raise ContractError(f"no weight for edges {missing}")
    n = graph.n_vars
    uf = _UnionFind(graph.n_nodes)
    removed = []
    for j, v in sorted(graph.edges, key=lambda e: (-weights[e], e[0], e[1])):
        if not uf.union(n + j, v):
            f = inst.factors[j]
            removed.append(RemovedDependency(j, v, weights[(j, v)], reduce_removed_factor(f, v)))
    removed.sort(key=lambda r: r.factor)
    factors = list(inst.factors)
    for r in removed:
        f = factors[r.factor]
        kept = f.other(r.variable)
        factors[r.factor] = Factor(f.name, (kept,), f.kind, r.reduction)
    tree = build_factor_graph(inst.with_factors(factors))
    return tree, removed


@dataclass
class BmsRun:
    """Everything the bounded pipeline computed for one instance."""

    instance: Instance
    weights: dict[tuple[int, int], float]
    tree: FactorGraph
    removed: list[RemovedDependency]
    maxsum: MaxSumResult
    assignment: dict[int, int] | None
    bound: BoundReport

    @property
    def B(self) -> float:
        return self.bound.B


def bms_pipeline(
    instance: Instance, tie_breaker: TieBreaker = lexicographic, normalize: bool = True
) -> BmsRun:
    graph = build_factor_graph(instance)
    weights = edge_weights(instance)
    tree, removed = build_spanning_structure(graph, weights)
    ms = run_tree_maxsum(tree, normalize=normalize)
    B = float(sum(r.weight for r in removed))
    try:
        assignment = decode_assignment(tree, ms, tie_breaker)
        vm = evaluate(tree.instance, assignment)
    except InfeasibleError:
        assignment, vm = None, FORBIDDEN
    return BmsRun(instance, weights, tree, removed, ms, assignment, BoundReport(vm, B))


def solve_bms(instance: Instance) -> SolveResult:
    start = time.perf_counter()
    run = bms_pipeline(instance)
    value = FORBIDDEN if run.assignment is None else evaluate(instance, run.assignment)
    wall = (time.perf_counter() - start) * 1000.0
    return SolveResult(
        "bms",
        run.assignment,
        value,
        value != FORBIDDEN,
        run.bound,
        wall,
        trace=run,
    )

"""Exact Max-Sum on acyclic factor graphs.

One upward and one downward sweep per connected component, rooted at the
component's smallest variable id. Decoding walks the same schedule top-down
and picks each child's value against its parent's choice, so the result is
jointly consistent even when hard factors make per-variable argmax choices
incompatible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from hbms.model import FORBIDDEN, ContractError, InfeasibleError, Instance

TieBreaker = Callable[[int, Sequence[int]], int]

REL_TOL = 1e-9


def lexicographic(var: int, candidates: Sequence[int]) -> int:
    return min(candidates)


class PriorityTieBreaker:
    """Highest priority first, then the smallest value."""

    def __init__(self, priorities: Mapping[int, Mapping[int, float]]):
        self.priorities = priorities

    def __call__(self, var: int, candidates: Sequence[int]) -> int:
        table = self.priorities.get(var)
        if not table:
            return min(candidates)
        return min(candidates, key=lambda v: (-table.get(v, FORBIDDEN), v))


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


class FactorGraph:
    """Bipartite variable/factor graph of an instance.

    Node ids: variable ``i`` is node ``i``, factor ``j`` is node ``n_vars + j``.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.n_vars = instance.n_vars
        self.n_factors = instance.n_factors
        self.edges = [(j, v) for j, f in enumerate(instance.factors) for v in f.scope]
        uf = _UnionFind(self.n_vars + self.n_factors)
        self.acyclic = all(uf.union(self.n_vars + j, v) for j, v in self.edges)

    @property
    def n_nodes(self) -> int:
        return self.n_vars + self.n_factors

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def build_factor_graph(instance: Instance) -> FactorGraph:
    return FactorGraph(instance)


def normalized(payload: np.ndarray) -> np.ndarray:
    """Shift so the largest finite entry is 0; all-forbidden payloads pass unchanged."""
    if payload.size == 0:
        return payload
    top = payload.max()
    if top == FORBIDDEN:
        return payload
    return payload - top


def variable_to_factor_message(
    incoming: Sequence[np.ndarray], size: int, normalize: bool = True
) -> np.ndarray:
    """Sum of the messages a variable received from its other factors."""
    out = np.zeros(size)
    for m in incoming:
        out = out + m
    return normalized(out) if normalize else out


def factor_to_variable_message(
    factor, target: int, incoming: np.ndarray | None = None, normalize: bool = True
) -> np.ndarray:
    """Max-plus product of the factor table with the other variable's message."""
    table = factor.oriented(target)
    if factor.arity == 1:
        out = np.array(table, dtype=np.float64)
    else:
        if incoming is None:
            incoming = np.zeros(table.shape[1])
        if table.shape[1] == 0:
            out = np.full(table.shape[0], FORBIDDEN)
        else:
            out = (table + incoming[None, :]).max(axis=1)
    return normalized(out) if normalize else out


@dataclass
class MaxSumResult:
    graph: FactorGraph
    marginals: list[np.ndarray]
    var_to_factor: dict[tuple[int, int], np.ndarray]
    factor_to_var: dict[tuple[int, int], np.ndarray]
    # (node, parent) in DFS order; parent is None for component roots
    order: list[tuple[int, int | None]] = field(default_factory=list)


def _schedule(graph: FactorGraph) -> list[tuple[int, int | None]]:
    inst = graph.instance
    n = graph.n_vars
    seen = [False] * graph.n_nodes
    order: list[tuple[int, int | None]] = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        stack = [(root, None)]
        while stack:
            node, parent = stack.pop()
            order.append((node, parent))
            if node < n:
                neighbours = [n + j for j in inst.factors_of[node]]
            else:
                neighbours = list(inst.factors[node - n].scope)
            for nb in reversed(neighbours):
                if nb == parent or seen[nb]:
                    continue
                seen[nb] = True
                stack.append((nb, node))
    return order


def run_tree_maxsum(graph: FactorGraph, normalize: bool = True) -> MaxSumResult:
    """Exact max-marginals on an acyclic factor graph.

    With ``normalize=False`` every marginal entry is the best total utility of
    the component given that value.
    """
    if not graph.acyclic:
        raise ContractError("tree Max-Sum needs an acyclic factor graph")
    inst = graph.instance
    n = graph.n_vars
    sizes = [len(v) for v in inst.variables]
    v2f: dict[tuple[int, int], np.ndarray] = {}
    f2v: dict[tuple[int, int], np.ndarray] = {}

    def send_from_var(i: int, j: int):
        others = [f2v[(g, i)] for g in inst.factors_of[i] if g != j]
        v2f[(j, i)] = variable_to_factor_message(others, sizes[i], normalize)

    def send_from_factor(j: int, i: int):
        f = inst.factors[j]
        incoming = v2f[(j, f.other(i))] if f.arity == 2 else None
        f2v[(j, i)] = factor_to_variable_message(f, i, incoming, normalize)

    order = _schedule(graph)
    for node, parent in reversed(order):
        if parent is None:
            continue
        if node < n:
            send_from_var(node, parent - n)
        else:
            send_from_factor(node - n, parent)
    for node, parent in order:
        if node < n:
            for j in inst.factors_of[node]:
                if n + j != parent:
                    send_from_var(node, j)
        else:
            j = node - n
            for i in inst.factors[j].scope:
                if i != parent:
                    send_from_factor(j, i)

    marginals = []
    for i in range(n):
        z = np.zeros(sizes[i])
        for j in inst.factors_of[i]:
            z = z + f2v[(j, i)]
        marginals.append(z)
    return MaxSumResult(graph, marginals, v2f, f2v, order)


def argmax_positions(vec: np.ndarray) -> list[int]:
    """Positions attaining the maximum; exact on integers, 1e-9 relative otherwise."""
    if vec.size == 0:
        return []
    top = vec.max()
    if top == FORBIDDEN:
        return []
    tol = REL_TOL * max(1.0, abs(float(top)))
    return [int(k) for k in np.nonzero(vec >= top - tol)[0]]


def extract_tie_sets(instance: Instance, marginals: Sequence[np.ndarray]) -> list[tuple[int, ...]]:
    ties = []
    for i, z in enumerate(marginals):
        best = argmax_positions(z)
        if not best:
            raise InfeasibleError(f"variable {instance.variables[i].name} has no feasible value")
        dom = instance.variables[i].domain
        ties.append(tuple(dom[k] for k in best))
    return ties


def decode_assignment(
    graph: FactorGraph, result: MaxSumResult, tie_breaker: TieBreaker = lexicographic
) -> dict[int, int]:
    """Top-down decoding along the Max-Sum schedule."""
    inst = graph.instance
    n = graph.n_vars
    chosen: dict[int, int] = {}

    def pick(i: int, scores: np.ndarray) -> int:
        best = argmax_positions(scores)
        if not best:
            raise InfeasibleError(f"dead end while decoding {inst.variables[i].name}")
        dom = inst.variables[i].domain
        value = tie_breaker(i, [dom[k] for k in best])
        return inst.variables[i].position[value]

    for node, parent in result.order:
        if node >= n:
            continue
        if parent is None:
            chosen[node] = pick(node, result.marginals[node])
            continue
        j = parent - n
        f = inst.factors[j]
        p = f.other(node)
        scores = f.oriented(node)[:, chosen[p]] + result.var_to_factor[(j, node)]
        chosen[node] = pick(node, scores)
    return {i: inst.variables[i].domain[k] for i, k in sorted(chosen.items())}


def solve_tree(instance: Instance, tie_breaker: TieBreaker = lexicographic) -> dict[int, int]:
    """Convenience: build, run and decode on an acyclic instance."""
    graph = build_factor_graph(instance)
    return decode_assignment(graph, run_tree_maxsum(graph), tie_breaker)


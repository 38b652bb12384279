"""Exhaustive exact solvers for small instances.

Two independent code paths: a depth-first search with hard-constraint
pruning, and a flat enumeration that sums broadcast factor tables over the
full assignment grid. Tests check that they agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hbms.model import FORBIDDEN, Instance

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float
    assignment: dict[int, int] | None
    n_optimal: int
    explored: int


def _check_budget(instance: Instance, budget: int) -> None:
    size = math.prod(len(v) for v in instance.variables)
    if size > budget:
        raise BudgetExceeded(f"{size} assignments exceed the budget of {budget}")


def solve_exact(instance: Instance, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Depth-first enumeration in variable-id order, values ascending.

    A factor is scored once its last scope variable is assigned; a forbidden
    partial sum cuts the branch. ``explored`` counts complete assignments
    reached. The first optimum in lexicographic order is returned.
    """
    _check_budget(instance, budget)
    n = instance.n_vars
    # factors whose highest scope variable is k, as (table rows, other var or None)
    closing: list[list[tuple[list, int | None, bool]]] = [[] for _ in range(n)]
    for f in instance.factors:
        if f.arity == 1:
            closing[f.scope[0]].append((f.table.tolist(), None, False))
        else:
            a, b = f.scope
            if a < b:
                closing[b].append((f.table.T.tolist(), a, True))
            else:
                closing[a].append((f.table.tolist(), b, True))
    sizes = [len(v) for v in instance.variables]
    pos = [0] * n
    best = [FORBIDDEN, None, 0]
    explored = 0

    def visit(k: int, acc: float):
        nonlocal explored
        if k == n:
            explored += 1
            if acc > best[0]:
                best[0], best[1], best[2] = acc, list(pos), 1
            elif acc == best[0] and acc != FORBIDDEN:
                best[2] += 1
            return
        for p in range(sizes[k]):
            total = acc
            for rows, other, binary in closing[k]:
                total += rows[p][pos[other]] if binary else rows[p]
                if total == FORBIDDEN:
                    break
            if total == FORBIDDEN:
                continue
            pos[k] = p
            visit(k + 1, total)

    visit(0, 0.0)
    value, positions, count = best
    if positions is None:
        return OracleResult(FORBIDDEN, None, 0, explored)
    assignment = {i: instance.variables[i].domain[p] for i, p in enumerate(positions)}
    return OracleResult(float(value), assignment, count, explored)


def enumerate_exact(instance: Instance, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Flat enumeration: the objective over the whole grid via broadcasting."""
    _check_budget(instance, budget)
    n = instance.n_vars
    shape = tuple(len(v) for v in instance.variables)
    grid = np.zeros(shape)
    for f in instance.factors:
        view = [1] * n
        table = f.table
        if f.arity == 2 and f.scope[0] > f.scope[1]:
            table = table.T
        for v in f.scope:
            view[v] = shape[v]
        grid = grid + table.reshape(view)
    flat = grid.ravel()
    if flat.size == 0 or flat.max() == FORBIDDEN:
        return OracleResult(FORBIDDEN, None, 0, int(flat.size))
    top = flat.max()
    first = int(np.argmax(flat))
    positions = np.unravel_index(first, shape)
    assignment = {i: instance.variables[i].domain[int(p)] for i, p in enumerate(positions)}
    return OracleResult(float(top), assignment, int((flat == top).sum()), int(flat.size))

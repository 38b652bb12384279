"""Arc consistency over hard factors (AC-3).

Pruning removes values that have no allowed partner in some hard factor.
Such values appear in no feasible assignment, so pruning never changes the
optimum, while it can only shrink the per-edge impacts the bounded solver
sums into its bound.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from hbms.model import ContractError, Factor, Instance


@dataclass
class PruneReport:
    removed: dict[int, frozenset[int]] = field(default_factory=dict)
    infeasible: bool = False
    revisions: int = 0

    @property
    def n_removed(self) -> int:
        return sum(len(v) for v in self.removed.values())


def _supported(allowed: np.ndarray, target_axis: int, other_mask: np.ndarray | None) -> np.ndarray:
    """Boolean vector: which target positions have an allowed partner."""
    if allowed.ndim == 1:
        return allowed
    grid = allowed if target_axis == 0 else allowed.T
    if other_mask is not None:
        grid = grid[:, other_mask]
    return grid.any(axis=1)


def revise(instance: Instance, factor: Factor, target: int) -> tuple[tuple[int, ...], bool]:
    """Domain of ``target`` with every value lacking support in ``factor`` removed."""
    if not factor.is_hard:
        raise ContractError(f"soft factor {factor.name} cannot prune domains")
    if target not in factor.scope:
        raise ContractError(f"variable {target} is not in the scope of {factor.name}")
    axis = factor.scope.index(target)
    keep = _supported(np.isfinite(factor.table), axis, None)
    domain = instance.variables[target].domain
    new = tuple(v for v, ok in zip(domain, keep) if ok)
    return new, len(new) != len(domain)


def enforce_arc_consistency(instance: Instance) -> tuple[Instance, PruneReport]:
    """AC-3 fixpoint over hard factors.

    The worklist is FIFO, seeded with (factor, scope variable) arcs in factor id
    order. Returns the pruned instance (tables re-sliced) and the report. A
    wiped-out domain sets ``infeasible`` but propagation still runs to the
    fixpoint, so applying the function to its own output changes nothing.
    """
    report = PruneReport()
    hard = [j for j, f in enumerate(instance.factors) if f.is_hard]
    if not hard:
        return instance, report

    masks = [np.ones(len(v), dtype=bool) for v in instance.variables]
    allowed = {j: np.isfinite(instance.factors[j].table) for j in hard}
    hard_of: list[list[int]] = [[] for _ in instance.variables]
    for j in hard:
        for v in instance.factors[j].scope:
            hard_of[v].append(j)

    queue = deque((j, v) for j in hard for v in instance.factors[j].scope)
    queued = set(queue)
    while queue:
        arc = queue.popleft()
        queued.discard(arc)
        j, target = arc
        f = instance.factors[j]
        axis = f.scope.index(target)
        other_mask = masks[f.scope[1 - axis]] if f.arity == 2 else None
        report.revisions += 1
        support = _supported(allowed[j], axis, other_mask)
        pruned = masks[target] & ~support
        if not pruned.any():
            continue
        masks[target] &= support
        for g in hard_of[target]:
            if g == j:
                continue
            gf = instance.factors[g]
            for v in gf.scope:
                if v != target and (g, v) not in queued:
                    queue.append((g, v))
                    queued.add((g, v))

    report.infeasible = not all(m.any() for m in masks)
    domains = {}
    for v, mask in enumerate(masks):
        if not mask.all():
            dom = instance.variables[v].domain
            domains[v] = [x for x, ok in zip(dom, mask) if ok]
            report.removed[v] = frozenset(x for x, ok in zip(dom, mask) if not ok)
    if not domains:
        return instance, report
    return instance.restrict(domains), report

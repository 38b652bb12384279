import numpy as np
import pytest

from conftest import equality, hard, random_cyclic_instances, random_tree_instances, soft, var
from hbms import FORBIDDEN, GeneratorConfig, Instance, enforce_arc_consistency, evaluate, generate
from hbms import solve_bms, solve_hbms
from hbms.bms import RemovedDependency, bms_pipeline
from hbms.maxsum import extract_tie_sets
from hbms.oracle import enumerate_exact
from hbms.solver import _final_assignment, build_tiebreak_subproblem, compute_priorities

CYCLIC = random_cyclic_instances(60, seed=23, hard_ratio=0.4)
MEDIUM = [
    generate(GeneratorConfig(n_vars=n, domain_size=6, graph_density=0.5, hard_ratio=0.3, seed=s))
    for n in (6, 8) for s in range(15)
]


def _phase2(inst):
    pruned, report = enforce_arc_consistency(inst)
    if report.infeasible:
        return None, None, None
    run = bms_pipeline(pruned)
    if run.assignment is None:
        return pruned, run, None
    return pruned, run, extract_tie_sets(pruned, run.maxsum.marginals)


@pytest.mark.parametrize("inst", random_tree_instances(20, seed=29))
def test_acyclic_matches_exact_with_zero_gap(inst):
    res, trace = solve_hbms(inst)
    exact = enumerate_exact(inst)
    if exact.assignment is None:
        assert not res.feasible
        return
    assert res.bound.B == 0.0 and trace.B_after == 0.0
    assert res.value == pytest.approx(exact.value, rel=1e-9)
    assert res.value == pytest.approx(solve_bms(inst).value, rel=1e-9)


def test_wipeout_is_infeasible():
    inst = Instance(
        (var("x0", 0, 1), var("x1", 0, 1)),
        (hard("h", 0, 1, [(0, 0)], (2, 2)), hard("g", 0, 1, [(1, 1)], (2, 2))),
    )
    res, trace = solve_hbms(inst)
    assert trace.prune.infeasible
    assert not res.feasible and res.assignment is None and res.value == FORBIDDEN


def test_subproblem_slices_removed_factors():
    inst = Instance(
        tuple(var(f"x{i}", 0, 1) for i in range(3)),
        (
            soft("a", 0, 1, [[0, 8], [8, 0]]),
            soft("b", 1, 2, [[0, 5], [5, 0]]),
            soft("c", 0, 2, [[0, 1], [2, 0]]),
        ),
    )
    removed = [RemovedDependency(2, 2, 2.0, np.zeros(2))]
    sub, var_ids = build_tiebreak_subproblem(inst, removed, [(1,), (0, 1), (0,)])
    assert var_ids == [0, 2]
    assert sub.domains == [(1,), (0,)]
    assert sub.factors[0].scope == (0, 1)
    np.testing.assert_array_equal(sub.factors[0].table, [[2.0]])


def test_subproblem_keeps_empty_hard_slice():
    inst = Instance(
        (var("x0", 0, 1), var("x1", 0, 1)),
        (hard("h", 0, 1, [(0, 1), (1, 0)], (2, 2)),),
    )
    removed = [RemovedDependency(0, 1, 0.0, np.zeros(2))]
    sub, _ = build_tiebreak_subproblem(inst, removed, [(0,), (0,)])
    assert sub.factors[0].table.tolist() == [[FORBIDDEN]]
    assert compute_priorities(sub, [0, 1]) == {0: {0: FORBIDDEN}, 1: {0: FORBIDDEN}}


def test_priorities_are_raw_marginals():
    sub = Instance((var("x3", 0), var("x7", 0, 1)), (soft("f", 0, 1, [[5, 9]]),))
    assert compute_priorities(sub, [3, 7]) == {3: {0: 9.0}, 7: {0: 5.0, 1: 9.0}}
    assert compute_priorities(Instance((), ()), []) == {}


@pytest.mark.parametrize("inst", CYCLIC + MEDIUM)
def test_assignment_is_a_phase2_tree_optimum(inst):
    res, trace = solve_hbms(inst)
    pruned, run, ties = _phase2(inst)
    if ties is None:
        assert not res.feasible
        return
    assert trace.tie_sets == ties
    a = trace.assignment
    assert all(a[v] in ties[v] for v in a)
    got = evaluate(run.tree.instance, a)
    assert got == pytest.approx(run.bound.vm, rel=1e-9)
    assert res.bound == run.bound


@pytest.mark.parametrize("inst", CYCLIC + MEDIUM)
def test_empty_priorities_reproduce_phase2(inst):
    pruned, run, ties = _phase2(inst)
    if ties is None:
        return
    res, trace = solve_hbms(inst)
    assert _final_assignment(run, ties, {}, trace) == run.assignment
    if not any(len(ties[v]) > 1 for v in range(inst.n_vars)):
        assert trace.assignment == run.assignment


@pytest.mark.parametrize("inst", CYCLIC[:20])
def test_deterministic(inst):
    a, ta = solve_hbms(inst)
    b, tb = solve_hbms(inst)
    assert a.assignment == b.assignment and a.value == b.value and a.bound == b.bound
    assert ta.priorities == tb.priorities


@pytest.mark.parametrize("inst", CYCLIC)
def test_sound_against_exact(inst):
    res, trace = solve_hbms(inst)
    exact = enumerate_exact(inst)
    assert exact.value <= res.bound.upper_bound + 1e-6
    if res.feasible:
        assert res.value <= exact.value + 1e-6
        assert res.value == evaluate(inst, res.assignment)


def test_trace_bounds_before_and_after():
    inst = MEDIUM[3]
    _, trace = solve_hbms(inst)
    assert trace.B_before == solve_bms(inst).bound.B
    assert trace.B_after is not None
    assert set(trace.timings_ms) >= {"consistency", "tree"}

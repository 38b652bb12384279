import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import equality, soft, var
from hbms import FORBIDDEN, ContractError, Factor, GeneratorConfig, Instance, generate
from hbms import evaluate, is_feasible
from hbms.model import HARD, SOFT, factor_max_sum, format_utility
from hbms.oracle import enumerate_exact


def test_forbidden_is_absorbing_and_minimal():
    assert FORBIDDEN + 1e9 == FORBIDDEN
    assert FORBIDDEN + FORBIDDEN == FORBIDDEN
    assert FORBIDDEN < -1e300


def test_empty_instance_evaluates_to_zero():
    inst = Instance((var("x0", 0, 1), var("x1", 0, 1)))
    assert evaluate(inst, {0: 1, 1: 0}) == 0
    assert is_feasible(inst, {0: 0, 1: 0})


def test_violated_equality_is_forbidden():
    inst = Instance((var("x0", 0, 1), var("x1", 0, 1)), (equality("eq", 0, 1, (0, 1), (0, 1)),))
    assert evaluate(inst, {0: 0, 1: 1}) == FORBIDDEN
    assert not is_feasible(inst, {0: 0, 1: 1})
    assert evaluate(inst, {0: 1, 1: 1}) == 0


def test_seed42_oracle_optimum():
    # value frozen from the flat enumerator over all 27 assignments
    inst = generate(GeneratorConfig(n_vars=3, domain_size=3, graph_density=1.0, seed=42))
    assert inst.n_factors == 3
    oracle = enumerate_exact(inst)
    assert oracle.value == 863
    assert oracle.assignment == {0: 0, 1: 1, 2: 2}
    assert evaluate(inst, oracle.assignment) == 863
    assert is_feasible(inst, oracle.assignment)


def test_assignment_contract_violations():
    inst = Instance((var("x0", 0, 1),))
    with pytest.raises(ContractError):
        evaluate(inst, {})
    with pytest.raises(ContractError):
        evaluate(inst, {0: 5})


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(name="f", scope=(0, 0), kind=SOFT, table=np.zeros((2, 2))),
        dict(name="f", scope=(0, 1, 2), kind=SOFT, table=np.zeros((2, 2, 2))),
        dict(name="f", scope=(0, 1), kind=SOFT, table=np.array([[0.0, FORBIDDEN]])),
        dict(name="f", scope=(0, 1), kind=HARD, table=np.array([[1.0, 0.0]])),
        dict(name="f", scope=(0, 1), kind=SOFT, table=np.zeros(2)),
        dict(name="f", scope=(0, 1), kind="mixed", table=np.zeros((1, 1))),
    ],
)
def test_factor_invariants(kwargs):
    with pytest.raises(ContractError):
        Factor(**kwargs)


def test_instance_checks_table_shape_and_agents():
    with pytest.raises(ContractError):
        Instance((var("x0", 0, 1), var("x1", 0)), (soft("f", 0, 1, [[1, 2]]),))
    with pytest.raises(ContractError):
        Instance((var("x0", 0), var("x0", 1)))
    with pytest.raises(ContractError):
        Instance((var("x0", 0), var("x1", 1)), agents=(0, 0))
    with pytest.raises(ContractError):
        var("x", 1, 1)


def test_restrict_reslices_tables():
    inst = Instance((var("a", 0, 1, 2), var("b", 5, 6)), (soft("f", 0, 1, [[1, 2], [3, 4], [5, 6]]),))
    small = inst.restrict({0: [0, 2]})
    assert small.variables[0].domain == (0, 2)
    np.testing.assert_array_equal(small.factors[0].table, [[1, 2], [5, 6]])
    assert evaluate(small, {0: 2, 1: 6}) == evaluate(inst, {0: 2, 1: 6})


def test_format_utility():
    assert format_utility(120.0) == "120"
    assert format_utility(0.5) == "0.5"
    assert format_utility(1 / 3) == "0.333333333"
    assert format_utility(FORBIDDEN) == "forbidden"


small_configs = st.builds(
    GeneratorConfig,
    n_vars=st.integers(2, 5),
    domain_size=st.integers(1, 3),
    graph_density=st.floats(0, 1),
    hard_ratio=st.floats(0, 1),
    hard_tightness=st.floats(0.2, 0.9),
    utility_max=st.integers(0, 50),
    seed=st.integers(0, 2**32),
)


@settings(max_examples=40, deadline=None)
@given(small_configs, st.randoms(use_true_random=False))
def test_evaluate_properties(config, rnd):
    inst = generate(config)
    shuffled = list(inst.factors)
    rnd.shuffle(shuffled)
    other = inst.with_factors(shuffled)
    bound = factor_max_sum(inst)
    for values in itertools.product(*inst.domains):
        a = dict(enumerate(values))
        value = evaluate(inst, a)
        assert value == evaluate(other, a)
        violated = any(
            f.is_hard and f.table[tuple(inst.variables[v].position[a[v]] for v in f.scope)] == FORBIDDEN
            for f in inst.factors
        )
        assert (value == FORBIDDEN) == violated
        assert value <= bound

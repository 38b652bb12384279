import numpy as np
import pytest

from hbms import FORBIDDEN, HARD, SOFT, Factor, GeneratorConfig, Instance, Variable, generate
from hbms.maxsum import build_factor_graph


def var(name, *values):
    return Variable(name, tuple(values))


def soft(name, a, b, rows):
    return Factor(name, (a, b), SOFT, np.array(rows, dtype=float))


def hard(name, a, b, allowed, shape):
    table = np.full(shape, FORBIDDEN)
    for i, j in allowed:
        table[i, j] = 0.0
    return Factor(name, (a, b), HARD, table)


def equality(name, a, b, dom_a, dom_b):
    table = np.array([[0.0 if x == y else FORBIDDEN for y in dom_b] for x in dom_a])
    return Factor(name, (a, b), HARD, table)


def random_tree_instances(count, seed=0, max_n=10, max_d=5, hard_ratio=0.3):
    """Generator draws with density 0: only the connecting spanning tree remains."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        cfg = GeneratorConfig(
            n_vars=int(rng.integers(2, max_n + 1)),
            domain_size=int(rng.integers(1, max_d + 1)),
            graph_density=0.0,
            hard_ratio=hard_ratio,
            hard_tightness=float(rng.uniform(0.2, 0.8)),
            utility_max=int(rng.integers(0, 501)),
            seed=seed * 100_000 + k,
        )
        out.append(generate(cfg))
    return out


def random_cyclic_instances(count, seed=0, max_n=8, max_d=4, hard_ratio=0.3, feasible=True):
    from hbms.oracle import solve_exact

    rng = np.random.default_rng(seed)
    out = []
    k = 0
    while len(out) < count:
        k += 1
        cfg = GeneratorConfig(
            n_vars=int(rng.integers(3, max_n + 1)),
            domain_size=int(rng.integers(2, max_d + 1)),
            graph_density=float(rng.uniform(0.3, 0.9)),
            hard_ratio=hard_ratio,
            hard_tightness=float(rng.uniform(0.3, 0.7)),
            seed=seed * 100_000 + k,
        )
        inst = generate(cfg)
        if build_factor_graph(inst).acyclic:
            continue
        if feasible and solve_exact(inst).assignment is None:
            continue
        out.append(inst)
    return out


@pytest.fixture
def seed123():
    return generate(
        GeneratorConfig(n_vars=6, domain_size=4, graph_density=0.5, hard_ratio=0.3, seed=123)
    )


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for k in sorted(REPORT):
            terminalreporter.write_line(REPORT[k])

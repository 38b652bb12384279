"""DCOP data model: variables, binary factors, instances and objective evaluation.

Utilities are IEEE doubles. The absorbing "forbidden" element is ``-inf``:
it is exact under addition (``-inf + u == -inf``), orders below every finite
value, and no operation in this package can produce ``+inf``, so sums never
degenerate to NaN. Integer utilities stay exact as long as totals remain
below 2**53.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

FORBIDDEN = -math.inf

SOFT = "soft"
HARD = "hard"


class ContractError(ValueError):
    """Raised when a caller violates an operation's precondition."""


class InfeasibleError(Exception):
    """Raised when message passing finds no assignment with finite utility."""


def is_forbidden(u) -> bool:
    return u == FORBIDDEN


def format_utility(u) -> str:
    """Integers print without a fractional part, reals with up to 9 digits."""
    if u == FORBIDDEN:
        return "forbidden"
    u = float(u)
    if u.is_integer():
        return str(int(u))
    return f"{u:.9f}".rstrip("0").rstrip(".")


def _frozen(table) -> np.ndarray:
    arr = np.array(table, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[int, ...]

    def __post_init__(self):
        dom = tuple(int(v) for v in self.domain)
        if any(b <= a for a, b in zip(dom, dom[1:])):
            raise ContractError(f"domain of {self.name} must be strictly increasing")
        object.__setattr__(self, "domain", dom)

    @cached_property
    def position(self) -> dict[int, int]:
        return {v: k for k, v in enumerate(self.domain)}

    def __len__(self):
        return len(self.domain)


@dataclass(frozen=True, eq=False)
class Factor:
    """A unary or binary utility table over variable ids.

    ``table[i, j]`` is the utility of (scope[0] = domain[i], scope[1] = domain[j]).
    Hard factors hold only 0 and FORBIDDEN; soft factors hold only finite values.
    Unary factors exist for internal tie-breaking and are never serialized.
    """

    name: str
    scope: tuple[int, ...]
    kind: str
    table: np.ndarray

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        table = _frozen(self.table)
        if len(scope) not in (1, 2):
            raise ContractError(f"factor {self.name}: only unary and binary scopes are supported")
        if len(set(scope)) != len(scope):
            raise ContractError(f"factor {self.name}: scope variables must be distinct")
        if table.ndim != len(scope):
            raise ContractError(f"factor {self.name}: table rank {table.ndim} != arity {len(scope)}")
        if self.kind == SOFT:
            if not np.isfinite(table).all():
                raise ContractError(f"factor {self.name}: soft factor with forbidden entry")
        elif self.kind == HARD:
            if not np.all((table == 0) | (table == FORBIDDEN)):
                raise ContractError(f"factor {self.name}: hard entries must be 0 or forbidden")
        else:
            raise ContractError(f"factor {self.name}: unknown kind {self.kind!r}")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "table", table)

    @property
    def arity(self) -> int:
        return len(self.scope)

    @property
    def is_hard(self) -> bool:
        return self.kind == HARD

    def oriented(self, first: int) -> np.ndarray:
        """Table with ``first`` on axis 0."""
        if self.scope[0] == first:
            return self.table
        if self.arity == 2 and self.scope[1] == first:
            return self.table.T
        raise ContractError(f"variable {first} is not in the scope of {self.name}")

    def other(self, var: int) -> int:
        a, b = self.scope
        if var == a:
            return b
        if var == b:
            return a
        raise ContractError(f"variable {var} is not in the scope of {self.name}")

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return (
            self.name == other.name
            and self.scope == other.scope
            and self.kind == other.kind
            and self.table.shape == other.table.shape
            and bool(np.array_equal(self.table, other.table))
        )

    def __hash__(self):
        return hash((self.name, self.scope, self.kind, self.table.tobytes()))


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable DCOP: variables (ids are positions), factors and agent map."""

    variables: tuple[Variable, ...]
    factors: tuple[Factor, ...] = ()
    agents: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        variables = tuple(self.variables)
        factors = tuple(self.factors)
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ContractError("duplicate variable names")
        n = len(variables)
        for f in factors:
            for v in f.scope:
                if not 0 <= v < n:
                    raise ContractError(f"factor {f.name} references unknown variable {v}")
            expected = tuple(len(variables[v]) for v in f.scope)
            if f.table.shape != expected:
                raise ContractError(
                    f"factor {f.name}: table shape {f.table.shape} != domain sizes {expected}"
                )
        agents = tuple(range(n)) if self.agents is None else tuple(self.agents)
        if len(agents) != n or len(set(agents)) != n:
            raise ContractError("agent map must assign one distinct agent per variable")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "agents", agents)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def domains(self) -> list[tuple[int, ...]]:
        return [v.domain for v in self.variables]

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    @cached_property
    def factors_of(self) -> list[list[int]]:
        """Factor ids touching each variable, in id order."""
        adj: list[list[int]] = [[] for _ in self.variables]
        for j, f in enumerate(self.factors):
            for v in f.scope:
                adj[v].append(j)
        return adj

    def restrict(self, domains: Mapping[int, Iterable[int]]) -> "Instance":
        """New instance with the given variables' domains replaced by subsets.

        Factor tables are re-sliced so rows and columns of dropped values disappear.
        """
        keep: dict[int, list[int]] = {}
        variables = list(self.variables)
        for v, values in domains.items():
            var = self.variables[v]
            values = sorted(set(int(x) for x in values))
            try:
                keep[v] = [var.position[x] for x in values]
            except KeyError as exc:
                raise ContractError(f"value {exc.args[0]} not in domain of {var.name}") from None
            variables[v] = Variable(var.name, tuple(values))
        factors = []
        for f in self.factors:
            if not any(v in keep for v in f.scope):
                factors.append(f)
                continue
            index = [keep.get(v, range(len(self.variables[v]))) for v in f.scope]
            table = f.table[np.ix_(*[np.asarray(list(ix), dtype=np.intp) for ix in index])]
            factors.append(Factor(f.name, f.scope, f.kind, table))
        return Instance(tuple(variables), tuple(factors), self.agents)

    def with_factors(self, factors: Sequence[Factor]) -> "Instance":
        return Instance(self.variables, tuple(factors), self.agents)

    def positions(self, assignment: Mapping[int, int]) -> list[int]:
        """Domain positions of a total assignment; raises ContractError otherwise."""
        out = []
        for i, var in enumerate(self.variables):
            if i not in assignment:
                raise ContractError(f"assignment is missing variable {var.name}")
            value = assignment[i]
            try:
                out.append(var.position[int(value)])
            except KeyError:
                raise ContractError(f"value {value} not in domain of {var.name}") from None
        return out

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.factors == other.factors
            and self.agents == other.agents
        )

    __hash__ = None


Assignment = dict


def evaluate(instance: Instance, assignment: Mapping[int, int]) -> float:
    """Sum of all factor utilities under ``assignment``; FORBIDDEN if a hard factor is violated."""
    pos = instance.positions(assignment)
    total = 0.0
    for f in instance.factors:
        total += f.table[tuple(pos[v] for v in f.scope)]
    return float(total)


def is_feasible(instance: Instance, assignment: Mapping[int, int]) -> bool:
    return not is_forbidden(evaluate(instance, assignment))


def factor_max_sum(instance: Instance) -> float:
    """Sum over factors of the largest finite entry; an upper bound on every assignment."""
    total = 0.0
    for f in instance.factors:
        finite = f.table[np.isfinite(f.table)]
        if finite.size == 0:
            return FORBIDDEN
        total += finite.max()
    return float(total)

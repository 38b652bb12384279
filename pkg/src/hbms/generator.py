"""Seeded random DCOP instances with mixed hard and soft binary constraints.

Random stream
-------------
All randomness comes from keyed SplitMix64 streams so that any implementation
can reproduce an instance bit for bit from its seed. With

    mix(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
             return z ^ (z >> 31)                 (all arithmetic mod 2**64)

and ``G = 0x9E3779B97F4A7C15``, the stream for ``(seed, tag, index)`` has key
``mix(mix(seed + tag * G) + index * G)`` and its k-th draw (k = 1, 2, ...) is
``mix(key + k * G)``. Derived draws:

* ``uniform()``  = (draw >> 11) * 2**-53, in [0, 1)
* ``below(n)``   = draw mod n, redrawing while draw >= 2**64 - (2**64 mod n)

Construction
------------
1. Stream (seed, 1, 0): for each pair i < j in lexicographic order, an edge is
   kept when ``uniform() < density``.
2. Stream (seed, 2, 0): a Fisher-Yates shuffle ``perm`` (for k = n-1 .. 1 swap
   k with ``below(k+1)``), then for k = 1 .. n-1 the edge
   {perm[k], perm[below(k)]} is added. The graph is therefore connected.
3. Edges sorted lexicographically become factors f0, f1, ... The hard count is
   ``floor(hard_ratio * m + 0.5)``; stream (seed, 3, 0) shuffles factor ids as
   in step 2 and the first ``h`` of the shuffled ids are hard.
4. Stream (seed, 4, k) fills factor k. Soft: row-major ``below(utility_max+1)``.
   Hard: row-major, a pair is allowed when ``uniform() < tightness``; then each
   row without an allowed pair gets column ``below(|dB|)`` allowed, then each
   column without one gets row ``below(|dA|)`` allowed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hbms.model import FORBIDDEN, HARD, SOFT, Factor, Instance, Variable

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

EDGE_STREAM = 1
TREE_STREAM = 2
HARD_STREAM = 3
FACTOR_STREAM = 4


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Stream:
    """Counter-based SplitMix64 stream keyed by (seed, tag, index)."""

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, tag: int, index: int = 0):
        base = mix64((seed + tag * GOLDEN) & MASK64)
        self.key = mix64((base + index * GOLDEN) & MASK64)
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.key + self.counter * GOLDEN) & MASK64)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> list:
        for k in range(len(items) - 1, 0, -1):
            j = self.below(k + 1)
            items[k], items[j] = items[j], items[k]
        return items


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    n_vars: int = 10
    domain_size: int = 41
    graph_density: float = 0.4
    hard_ratio: float = 0.3
    utility_max: int = 500
    hard_tightness: float = 0.5
    seed: int = 0

    def validate(self) -> "GeneratorConfig":
        if self.n_vars < 2:
            raise ConfigError("n_vars must be at least 2")
        if self.domain_size < 1:
            raise ConfigError("domain_size must be at least 1")
        for name in ("graph_density", "hard_ratio", "hard_tightness"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.utility_max < 0 or int(self.utility_max) != self.utility_max:
            raise ConfigError("utility_max must be a non-negative integer")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        return self


def graph_edges(config: GeneratorConfig) -> list[tuple[int, int]]:
    n = config.n_vars
    edges = set()
    s = Stream(config.seed, EDGE_STREAM)
    for i in range(n):
        for j in range(i + 1, n):
            if s.uniform() < config.graph_density:
                edges.add((i, j))
    t = Stream(config.seed, TREE_STREAM)
    perm = t.shuffle(list(range(n)))
    for k in range(1, n):
        a, b = perm[k], perm[t.below(k)]
        edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def hard_count(config: GeneratorConfig, m: int) -> int:
    return math.floor(config.hard_ratio * m + 0.5)


def _soft_table(s: Stream, da: int, db: int, umax: int) -> np.ndarray:
    return np.array([s.below(umax + 1) for _ in range(da * db)], dtype=np.float64).reshape(da, db)


def _hard_table(s: Stream, da: int, db: int, tightness: float) -> np.ndarray:
    allowed = np.array([s.uniform() < tightness for _ in range(da * db)], dtype=bool).reshape(da, db)
    for i in range(da):
        if not allowed[i].any():
            allowed[i, s.below(db)] = True
    for j in range(db):
        if not allowed[:, j].any():
            allowed[s.below(da), j] = True
    return np.where(allowed, 0.0, FORBIDDEN)


def generate(config: GeneratorConfig) -> Instance:
    config.validate()
    d = config.domain_size
    variables = tuple(Variable(f"x{i}", tuple(range(d))) for i in range(config.n_vars))
    edges = graph_edges(config)
    order = Stream(config.seed, HARD_STREAM).shuffle(list(range(len(edges))))
    hard = set(order[: hard_count(config, len(edges))])
    factors = []
    for k, (a, b) in enumerate(edges):
        s = Stream(config.seed, FACTOR_STREAM, k)
        if k in hard:
            table = _hard_table(s, d, d, config.hard_tightness)
            factors.append(Factor(f"f{k}", (a, b), HARD, table))
        else:
            table = _soft_table(s, d, d, int(config.utility_max))
            factors.append(Factor(f"f{k}", (a, b), SOFT, table))
    return Instance(variables, tuple(factors))

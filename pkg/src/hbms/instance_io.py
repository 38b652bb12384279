"""Text instance format and results CSV.

Instance files are line based (UTF-8, LF)::

    dcop 1
    var x0 0 1 2
    var x1 0 1 2
    soft f0 x0 x1
    3 1 4
    1 5 9
    2 6 5
    hard f1 x0 x1
    allow 0 0
    allow 2 1
    end

``#`` starts a comment; blank lines are ignored. Soft tables are dense with one
row per value of the first scope variable. Hard factors list allowed pairs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from hbms.model import (
    FORBIDDEN,
    HARD,
    SOFT,
    ContractError,
    Factor,
    Instance,
    Variable,
    format_utility,
)

HEADER = "dcop 1"

CSV_COLUMNS = (
    "instance_id",
    "seed",
    "n_vars",
    "n_factors",
    "algorithm",
    "value",
    "feasible",
    "vm",
    "B",
    "upper_bound",
    "wall_ms",
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SerializationError(ValueError):
    pass


def _tokens(text: str):
    """Yield (line number, [(column, token), ...]) for non-blank lines."""
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].rstrip("\r")
        toks = []
        col = 0
        for part in line.split():
            col = line.index(part, col)
            toks.append((col + 1, part))
            col += len(part)
        if toks:
            yield lineno, toks


def _int(tok, lineno):
    col, text = tok
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected an integer, got {text!r}", lineno, col) from None


def _number(tok, lineno):
    col, text = tok
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", lineno, col) from None
    if not math.isfinite(value):
        raise ParseError(f"soft entry must be finite, got {text!r}", lineno, col)
    return value


def parse_instance(text: str) -> Instance:
    lines = list(_tokens(text))
    if not lines or [t for _, t in lines[0][1]] != HEADER.split():
        where = lines[0][0] if lines else 1
        raise ParseError(f"expected header {HEADER!r}", where)

    variables: list[Variable] = []
    names: dict[str, int] = {}
    factors: list[Factor] = []
    factor_names: set[str] = set()

    def scope_of(toks, lineno):
        ids = []
        for col, name in toks:
            if name not in names:
                raise ParseError(f"undeclared variable {name!r}", lineno, col)
            ids.append(names[name])
        if ids[0] == ids[1]:
            raise ParseError("factor scope repeats a variable", lineno, toks[1][0])
        return ids

    k = 1
    while k < len(lines):
        lineno, toks = lines[k]
        col, keyword = toks[0]
        if keyword == "var":
            if len(toks) < 3:
                raise ParseError("variable needs a name and at least one value", lineno, col)
            name = toks[1][1]
            if name in names:
                raise ParseError(f"duplicate variable {name!r}", lineno, toks[1][0])
            values = [_int(t, lineno) for t in toks[2:]]
            for prev, (vcol, _), cur in zip(values, toks[3:], values[1:]):
                if cur <= prev:
                    raise ParseError("domain values must be strictly increasing", lineno, vcol)
            names[name] = len(variables)
            variables.append(Variable(name, tuple(values)))
            k += 1
        elif keyword in (SOFT, HARD):
            if len(toks) != 4:
                raise ParseError(f"{keyword} factor needs a name and two variables", lineno, col)
            fname = toks[1][1]
            if fname in factor_names:
                raise ParseError(f"duplicate factor {fname!r}", lineno, toks[1][0])
            a, b = scope_of(toks[2:], lineno)
            da, db = variables[a], variables[b]
            header_line = lineno
            k += 1
            if keyword == SOFT:
                rows = []
                for _ in range(len(da)):
                    if k >= len(lines):
                        raise ParseError(
                            f"soft factor {fname!r} expects {len(da)} rows", header_line
                        )
                    lineno, toks = lines[k]
                    if len(toks) != len(db):
                        raise ParseError(
                            f"table row has {len(toks)} entries, expected {len(db)}", lineno
                        )
                    rows.append([_number(t, lineno) for t in toks])
                    k += 1
                table = np.array(rows, dtype=np.float64).reshape(len(da), len(db))
            else:
                table = np.full((len(da), len(db)), FORBIDDEN)
                allowed = 0
                while True:
                    if k >= len(lines):
                        raise ParseError(f"hard factor {fname!r} is missing 'end'", header_line)
                    lineno, toks = lines[k]
                    k += 1
                    if toks[0][1] == "end" and len(toks) == 1:
                        break
                    if toks[0][1] != "allow" or len(toks) != 3:
                        raise ParseError("expected 'allow <a> <b>' or 'end'", lineno, toks[0][0])
                    va, vb = _int(toks[1], lineno), _int(toks[2], lineno)
                    if va not in da.position:
                        raise ParseError(f"{va} not in domain of {da.name}", lineno, toks[1][0])
                    if vb not in db.position:
                        raise ParseError(f"{vb} not in domain of {db.name}", lineno, toks[2][0])
                    table[da.position[va], db.position[vb]] = 0.0
                    allowed += 1
                if allowed == 0:
                    raise ParseError(f"hard factor {fname!r} allows no pair", header_line)
            factor_names.add(fname)
            factors.append(Factor(fname, (a, b), keyword, table))
        else:
            raise ParseError(f"unknown keyword {keyword!r}", lineno, col)
    try:
        return Instance(tuple(variables), tuple(factors))
    except ContractError as exc:
        raise ParseError(str(exc), lines[-1][0]) from None


def serialize_instance(instance: Instance) -> str:
    out = [HEADER]
    for var in instance.variables:
        out.append(" ".join(["var", var.name, *map(str, var.domain)]))
    for f in instance.factors:
        if f.arity != 2:
            raise SerializationError(f"factor {f.name} is not binary and cannot be written")
        a, b = (instance.variables[v] for v in f.scope)
        out.append(f"{f.kind} {f.name} {a.name} {b.name}")
        if f.kind == SOFT:
            for row in f.table:
                out.append(" ".join(format_utility(u) for u in row))
        else:
            for i, j in zip(*np.nonzero(f.table == 0)):
                out.append(f"allow {a.domain[i]} {b.domain[j]}")
            out.append("end")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class ResultRecord:
    """One CSV row: an (instance, algorithm) pair and its outcome."""

    instance_id: str
    seed: int | None
    n_vars: int
    n_factors: int
    algorithm: str
    value: float
    feasible: bool
    vm: float | None = None
    B: float | None = None
    upper_bound: float | None = None
    wall_ms: float | None = None


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, float, np.floating, np.integer)):
        return format_utility(x)
    return str(x)


def write_results_csv(records: Iterable[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        wall = None if r.wall_ms is None else round(r.wall_ms, 3)
        writer.writerow(
            [
                r.instance_id,
                _cell(r.seed),
                r.n_vars,
                r.n_factors,
                r.algorithm,
                _cell(r.value),
                _cell(r.feasible),
                _cell(r.vm),
                _cell(r.B),
                _cell(r.upper_bound),
                _cell(wall),
            ]
        )
    return buf.getvalue()


def read_results_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))

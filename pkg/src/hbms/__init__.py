"""Max-Sum, Bounded Max-Sum and hard-consistency-enforced Bounded Max-Sum for DCOPs."""

from hbms.bms import BoundReport, SolveResult, solve_bms
from hbms.consistency import PruneReport, enforce_arc_consistency
from hbms.generator import GeneratorConfig, generate
from hbms.instance_io import parse_instance, serialize_instance, write_results_csv
from hbms.model import (
    FORBIDDEN,
    HARD,
    SOFT,
    ContractError,
    Factor,
    InfeasibleError,
    Instance,
    Variable,
    evaluate,
    is_feasible,
)
from hbms.oracle import enumerate_exact, solve_exact
from hbms.solver import HbmsTrace, solve_hbms

__all__ = [
    "FORBIDDEN",
    "HARD",
    "SOFT",
    "BoundReport",
    "ContractError",
    "Factor",
    "GeneratorConfig",
    "HbmsTrace",
    "InfeasibleError",
    "Instance",
    "PruneReport",
    "SolveResult",
    "Variable",
    "enforce_arc_consistency",
    "enumerate_exact",
    "evaluate",
    "generate",
    "is_feasible",
    "parse_instance",
    "serialize_instance",
    "solve_bms",
    "solve_exact",
    "solve_hbms",
    "write_results_csv",
]

"""Concurrent cube-and-conquer SAT solving."""
from .cdcl import SolveResult, Solver, Status, solve_incremental
from .conquer import IcnfDocument, conquer_parallel, conquer_serial, parse_icnf, write_icnf
from .formula import CnfFormula, parse_dimacs, serialize_dimacs
from .heuristics import DEFAULT_CONFIG, HeuristicConfig
from .lookahead import Mode, la_search
from .protocol import Answer, CccConfig, run_ccc
from .verify import brute_force_solve, check_model, check_tree_cover, random_3sat

__all__ = [
    "Answer", "CccConfig", "CnfFormula", "DEFAULT_CONFIG", "HeuristicConfig", "IcnfDocument",
    "Mode", "SolveResult", "Solver", "Status", "brute_force_solve", "check_model",
    "check_tree_cover", "conquer_parallel", "conquer_serial", "la_search", "parse_dimacs",
    "parse_icnf", "random_3sat", "run_ccc", "serialize_dimacs", "solve_incremental", "write_icnf",
]

"""Independent checkers: exhaustive solver, model checker, cube-cover checker, generators."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from .formula import MAX_ENUM_VARS, CnfFormula, TooManyVariables, var

_CHUNK = 1 << 20


class PartialModel(ValueError):
    pass


@dataclass(frozen=True)
class OracleVerdict:
    sat: bool
    model: Optional[Dict[int, bool]]
    assignments_enumerated: int


def brute_force_solve(f: CnfFormula) -> OracleVerdict:
    """Enumerate assignments in counting order (bit i-1 of k is x_i).

    Returns the first satisfying assignment in that order.
    """
    n = f.num_vars
    if n > MAX_ENUM_VARS:
        raise TooManyVariables(f"{n} variables exceeds enumeration cap {MAX_ENUM_VARS}")
    total = 1 << n
    clauses = [tuple(c) for c in f.clauses]
    if any(len(c) == 0 for c in clauses):
        return OracleVerdict(False, None, total)
    for start in range(0, total, _CHUNK):
        ks = np.arange(start, min(total, start + _CHUNK), dtype=np.uint32)
        for c in clauses:
            keep = np.zeros(ks.shape, dtype=bool)
            for lit in c:
                bit = (ks >> np.uint32(var(lit) - 1)) & np.uint32(1)
                keep |= (bit == 1) if lit > 0 else (bit == 0)
            ks = ks[keep]
            if ks.size == 0:
                break
        if ks.size:
            k = int(ks[0])
            return OracleVerdict(True, {i + 1: bool((k >> i) & 1) for i in range(n)}, total)
    return OracleVerdict(False, None, total)


def check_model(f: CnfFormula, model: Mapping[int, bool]) -> bool:
    for v in range(1, f.num_vars + 1):
        if v not in model:
            raise PartialModel(f"model does not assign x{v}")
    for c in f.clauses:
        if not any(model[var(l)] == (l > 0) for l in c):
            return False
    return True


def check_tree_cover(emitted: Iterable[Sequence[int]], refuted: Iterable[Sequence[int]]) -> bool:
    """True iff the cubes are exactly the leaves of one binary decision tree.

    Sibling leaves (same prefix, complementary last literal) are merged into
    their parent, deepest first, until only the empty cube remains.
    """
    leaves = [tuple(c) for c in emitted] + [tuple(c) for c in refuted]
    if not leaves:
        return False
    pool = set()
    for c in leaves:
        if c in pool:
            return False
        pool.add(c)
    while pool != {()}:
        deepest = max(pool, key=len)
        if not deepest:
            return False
        sibling = deepest[:-1] + (-deepest[-1],)
        if sibling not in pool:
            return False
        pool.discard(deepest)
        pool.discard(sibling)
        parent = deepest[:-1]
        if parent in pool:
            return False
        pool.add(parent)
    return True


def random_3sat(num_vars: int, num_clauses: int, seed: int) -> CnfFormula:
    """Uniform random 3-SAT: three distinct variables per clause, random signs."""
    if num_vars < 3:
        raise ValueError("3-SAT needs at least three variables")
    rng = random.Random(seed)
    clauses = []
    for _ in range(num_clauses):
        vs = rng.sample(range(1, num_vars + 1), 3)
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula(num_vars, tuple(clauses))

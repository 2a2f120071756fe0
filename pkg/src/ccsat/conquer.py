"""Conquer phase: iCNF documents and incremental solving of cubes.

An iCNF document is the formula followed by one assumption line per cube::

    p inccnf
    1 2 0
    a 1 0
    a -1 0
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from .cdcl import Solver, Status
from .formula import CnfFormula, canonical_clause, clause_line

HEADER = "p inccnf"


class MalformedIcnf(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__((f"line {line}: " if line is not None else "") + message)


class EmptyCubeList(ValueError):
    pass


@dataclass(frozen=True)
class IcnfDocument:
    formula: CnfFormula
    cubes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(tuple(c) for c in self.cubes))
        n = self.formula.num_vars
        for i, c in enumerate(self.cubes):
            for lit in c:
                if lit == 0 or abs(lit) > n:
                    raise MalformedIcnf(f"cube {i + 1} literal {lit} outside 1..{n}")


def write_icnf(doc: IcnfDocument) -> bytes:
    lines = [HEADER]
    lines.extend(clause_line(c) for c in doc.formula.clauses)
    lines.extend("a " + clause_line(c) for c in doc.cubes)
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_icnf(data: Union[bytes, str], num_vars: Optional[int] = None) -> IcnfDocument:
    """Parse iCNF.  ``num_vars`` defaults to the largest variable in the clauses.

    Cube literals must stay within the formula's variables.
    """
    text = data.decode("ascii") if isinstance(data, bytes) else data
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != HEADER:
        raise MalformedIcnf(f"first line must be {HEADER!r}", 1)
    clauses: List[tuple] = []
    cubes: List[tuple] = []
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        is_cube = toks[0] == "a"
        if is_cube:
            toks = toks[1:]
        try:
            lits = [int(t) for t in toks]
        except ValueError:
            raise MalformedIcnf(f"non-integer token in {line!r}", lineno) from None
        if not lits or lits[-1] != 0 or 0 in lits[:-1]:
            raise MalformedIcnf("each line must hold one 0-terminated clause or cube", lineno)
        lits = lits[:-1]
        if is_cube:
            if canonical_clause(lits) is None or len(set(lits)) != len(lits):
                raise MalformedIcnf("cube repeats a variable", lineno)
            cubes.append((tuple(lits), lineno))
        else:
            clauses.append(tuple(lits))
    top = max((abs(l) for c in clauses for l in c), default=0)
    n = num_vars if num_vars is not None else top
    if top > n:
        raise MalformedIcnf(f"clause variable {top} exceeds {n} variables")
    for cube, lineno in cubes:
        for lit in cube:
            if abs(lit) > n:
                raise MalformedIcnf(f"cube literal {lit} outside the formula's {n} variables", lineno)
    return IcnfDocument(CnfFormula(n, tuple(clauses)), tuple(c for c, _ in cubes))


@dataclass(frozen=True)
class CubeStat:
    index: int  # 1-based position in the document
    status: Status
    conflicts: int
    worker: int = 0


@dataclass
class ConquerResult:
    sat: bool
    model: Optional[Dict[int, bool]] = None
    winning_cube_index: Optional[int] = None
    per_cube: List[CubeStat] = field(default_factory=list)

    def claims_by_worker(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for s in self.per_cube:
            out.setdefault(s.worker, []).append(s.index)
        return out


def _check_doc(doc: IcnfDocument) -> None:
    if not doc.cubes:
        raise EmptyCubeList("conquer needs at least one cube; an empty list proves nothing")


def conquer_serial(doc: IcnfDocument, solver: Optional[Solver] = None) -> ConquerResult:
    """Solve ``F and cube`` for each cube in order, reusing one incremental solver."""
    _check_doc(doc)
    solver = solver if solver is not None else Solver(doc.formula)
    result = ConquerResult(sat=False)
    for i, cube in enumerate(doc.cubes, start=1):
        before = solver.conflicts
        r = solver.solve(cube)
        result.per_cube.append(CubeStat(i, r.status, solver.conflicts - before))
        if r.status is Status.SAT:
            result.sat = True
            result.model = r.model
            result.winning_cube_index = i
            break
    return result


def conquer_parallel(doc: IcnfDocument, k: int) -> ConquerResult:
    """Multijob conquer: ``k`` workers claim cubes from a shared counter.

    Every cube is claimed by exactly one worker.  The first model found
    wins and the other workers stop at their next conflict.
    """
    if k < 1:
        raise ValueError("need at least one worker")
    _check_doc(doc)
    claim = itertools.count()
    claim_lock = threading.Lock()
    stop = threading.Event()
    cell_lock = threading.Lock()
    result = ConquerResult(sat=False)
    stats: List[CubeStat] = []

    def worker(wid: int) -> None:
        solver = Solver(doc.formula)
        while not stop.is_set():
            with claim_lock:
                idx = next(claim)
            if idx >= len(doc.cubes):
                return
            before = solver.conflicts
            r = solver.solve(doc.cubes[idx], should_stop=stop.is_set)
            with cell_lock:
                stats.append(CubeStat(idx + 1, r.status, solver.conflicts - before, wid))
                if r.status is Status.SAT and not result.sat:
                    result.sat = True
                    result.model = r.model
                    result.winning_cube_index = idx + 1
                    stop.set()

    if k == 1:
        worker(0)
    else:
        threads = [threading.Thread(target=worker, args=(w,)) for w in range(k)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    result.per_cube = sorted(stats, key=lambda s: s.index)
    return result

"""Propositional basics: literals, clauses, CNF formulas, cubes, DIMACS I/O.

Literals are DIMACS-style signed integers (``3`` is x3, ``-3`` is its
negation).  Engines that need array-indexed literals convert with
:func:`lit_code`, which maps positive literals to ``2*(v-1)`` and negative
ones to ``2*(v-1)+1`` so negation is ``code ^ 1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

Lit = int
Clause = tuple  # tuple[int, ...]
Cube = tuple  # tuple[int, ...], decision order preserved
Assignment = Mapping[int, bool]

MAX_ENUM_VARS = 24


class DimacsError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class MalformedHeader(DimacsError):
    pass


class LiteralOutOfRange(DimacsError):
    pass


class UnterminatedClause(DimacsError):
    pass


class ClauseCountMismatch(DimacsError):
    pass


class TooManyVariables(ValueError):
    pass


def neg(lit: Lit) -> Lit:
    return -lit


def var(lit: Lit) -> int:
    return lit if lit > 0 else -lit


def lit_code(lit: Lit) -> int:
    return 2 * (lit - 1) if lit > 0 else 2 * (-lit - 1) + 1


def code_lit(code: int) -> Lit:
    v = (code >> 1) + 1
    return -v if code & 1 else v


def canonical_clause(lits: Iterable[Lit]) -> Optional[Clause]:
    """Drop duplicate literals (keeping first occurrence); ``None`` for a tautology."""
    seen: set = set()
    out = []
    for lit in lits:
        if -lit in seen:
            return None
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        for c in self.clauses:
            for lit in c:
                if lit == 0 or var(lit) > self.num_vars:
                    raise LiteralOutOfRange(f"literal {lit} outside 1..{self.num_vars}")

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[Lit]], num_vars: Optional[int] = None) -> "CnfFormula":
        """Build a canonical formula: deduplicated literals, tautologies dropped."""
        kept = []
        top = 0
        for c in clauses:
            c = tuple(c)
            top = max([top] + [var(l) for l in c])
            cc = canonical_clause(c)
            if cc is not None:
                kept.append(cc)
        return cls(num_vars if num_vars is not None else top, tuple(kept))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def with_clauses(self, extra: Iterable[Iterable[Lit]]) -> "CnfFormula":
        return CnfFormula(self.num_vars, self.clauses + tuple(tuple(c) for c in extra))


def parse_dimacs(text: Union[str, bytes]) -> CnfFormula:
    """Parse DIMACS CNF.

    Comment lines start with ``c``.  Clauses may span lines and are
    terminated by ``0``.  The clause count in the header must match.
    """
    if isinstance(text, bytes):
        text = text.decode("ascii")
    num_vars = num_clauses = None
    header_line = None
    raw: list = []
    current: list = []
    last_line = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        last_line = lineno
        stripped = line.strip()
        if not stripped or stripped.startswith("c"):
            continue
        if stripped.startswith("p"):
            if header_line is not None:
                raise MalformedHeader("duplicate header", lineno)
            parts = stripped.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise MalformedHeader(f"expected 'p cnf <vars> <clauses>', got {stripped!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise MalformedHeader(f"non-integer header field in {stripped!r}", lineno) from None
            if num_vars < 0 or num_clauses < 0:
                raise MalformedHeader("negative header field", lineno)
            header_line = lineno
            continue
        if header_line is None:
            raise MalformedHeader("clause data before 'p cnf' header", lineno)
        for tok in stripped.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}", lineno) from None
            if lit == 0:
                raw.append((tuple(current), lineno))
                current = []
            elif abs(lit) > num_vars:
                raise LiteralOutOfRange(f"literal {lit} exceeds {num_vars} variables", lineno)
            else:
                current.append(lit)
    if header_line is None:
        raise MalformedHeader("missing 'p cnf' header", last_line or None)
    if current:
        raise UnterminatedClause("last clause is missing its 0 terminator", last_line)
    if len(raw) != num_clauses:
        raise ClauseCountMismatch(f"header declares {num_clauses} clauses, found {len(raw)}", last_line)
    kept = [cc for cc in (canonical_clause(c) for c, _ in raw) if cc is not None]
    return CnfFormula(num_vars, tuple(kept))


def clause_line(clause: Iterable[Lit]) -> str:
    return " ".join([str(l) for l in clause] + ["0"])


def serialize_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_vars} {f.num_clauses}"]
    lines.extend(clause_line(c) for c in f.clauses)
    return "\n".join(lines) + "\n"


class ClauseStatus(enum.Enum):
    SATISFIED = "satisfied"
    FALSIFIED = "falsified"
    UNIT = "unit"
    UNRESOLVED = "unresolved"


class ClauseEval(NamedTuple):
    status: ClauseStatus
    unit: Optional[Lit] = None


def lit_value(lit: Lit, a: Assignment) -> Optional[bool]:
    v = a.get(var(lit))
    if v is None:
        return None
    return v if lit > 0 else not v


def eval_clause(clause: Sequence[Lit], a: Assignment) -> ClauseEval:
    free = []
    for lit in clause:
        val = lit_value(lit, a)
        if val is True:
            return ClauseEval(ClauseStatus.SATISFIED)
        if val is None:
            free.append(lit)
    if not free:
        return ClauseEval(ClauseStatus.FALSIFIED)
    if len(free) == 1:
        return ClauseEval(ClauseStatus.UNIT, free[0])
    return ClauseEval(ClauseStatus.UNRESOLVED)


def negate_cube(cube: Sequence[Lit]) -> Clause:
    return tuple(-l for l in cube)


def cube_satisfied(cube: Sequence[Lit], a: Assignment) -> bool:
    return all(lit_value(l, a) is True for l in cube)


def formula_satisfied(f: CnfFormula, a: Assignment) -> bool:
    return all(eval_clause(c, a).status is ClauseStatus.SATISFIED for c in f.clauses)


def _lit_true(ks: np.ndarray, lit: Lit) -> np.ndarray:
    bit = (ks >> np.uint32(var(lit) - 1)) & np.uint32(1)
    return bit == 1 if lit > 0 else bit == 0


def dnf_is_tautology(cubes: Iterable[Sequence[Lit]], num_vars: int) -> bool:
    """True iff every full assignment over ``num_vars`` variables satisfies some cube."""
    if num_vars > MAX_ENUM_VARS:
        raise TooManyVariables(f"{num_vars} variables exceeds enumeration cap {MAX_ENUM_VARS}")
    cubes = [tuple(c) for c in cubes]
    for c in cubes:
        for l in c:
            if var(l) > num_vars:
                raise LiteralOutOfRange(f"cube literal {l} exceeds {num_vars} variables")
    total = 1 << num_vars
    chunk = 1 << 20
    for start in range(0, total, chunk):
        # rows not yet covered by any cube
        ks = np.arange(start, min(total, start + chunk), dtype=np.uint32)
        for c in cubes:
            if ks.size == 0:
                break
            sat = np.ones(ks.shape, dtype=bool)
            for l in c:
                sat &= _lit_true(ks, l)
            ks = ks[~sat]
        if ks.size:
            return False
    return True


def all_assignments(num_vars: int):
    """Yield dict assignments in counting order (x1 is the lowest bit)."""
    for k in range(1 << num_vars):
        yield {i + 1: bool((k >> i) & 1) for i in range(num_vars)}


__all__ = [
    "Assignment", "Clause", "ClauseCountMismatch", "ClauseEval", "ClauseStatus", "CnfFormula",
    "Cube", "DimacsError", "Lit", "LiteralOutOfRange", "MalformedHeader", "MAX_ENUM_VARS",
    "TooManyVariables", "UnterminatedClause", "all_assignments", "canonical_clause",
    "clause_line", "code_lit", "cube_satisfied", "dnf_is_tautology", "eval_clause",
    "formula_satisfied", "lit_code", "lit_value", "neg", "negate_cube", "parse_dimacs",
    "serialize_dimacs", "var",
]

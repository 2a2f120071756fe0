"""Conflict-driven clause learning with assumptions.

A MiniSAT-style engine: two watched literals, first-UIP learning with basic
clause minimisation, VSIDS branching with phase saving, Luby restarts and
activity-based clause database reduction.

Assumptions occupy decision levels ``1..len(assumptions)`` (an assumption
that is already true gets an empty level so levels and assumption indices
stay aligned).  The same engine backs both the one-shot incremental
interface (:meth:`Solver.solve`) and the bounded step used as a concurrent
peer (:meth:`Solver.ccc_step`), where each assumption prefix is a cube whose
id is kept in ``cube_ids``.
"""
from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from .formula import CnfFormula, code_lit, lit_code
from .messages import Action, Channel, DecisionMsg, SolvedMsg, discard_stale

_UNDEF = -1


class _Clause:
    __slots__ = ("lits", "learnt", "activity", "removed")

    def __init__(self, lits: List[int], learnt: bool = False):
        self.lits = lits
        self.learnt = learnt
        self.activity = 0.0
        self.removed = False

    def dimacs(self) -> tuple:
        return tuple(code_lit(c) for c in self.lits)


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNSAT_UNDER_ASSUMPTIONS = "UNSAT_UNDER_ASSUMPTIONS"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"
    CUBE_REFUTED = "CUBE_REFUTED"
    PAUSED = "PAUSED"


@dataclass
class SolveResult:
    status: Status
    model: Optional[Dict[int, bool]] = None
    failed_prefix: tuple = ()
    refuted_ids: tuple = ()

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT


@dataclass(frozen=True)
class TrailEntry:
    lit: int
    level: int
    reason: object  # "decision", "assumption", "unit" or the reason clause


def luby(y: float, x: int) -> float:
    """x-th element (0-based) of the Luby sequence scaled by powers of ``y``."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


class Solver:
    def __init__(self, formula: CnfFormula, *, seed: int = 0, var_decay: float = 0.95,
                 clause_decay: float = 0.999, restart_unit: int = 100,
                 random_var_freq: float = 0.0, record_learned: bool = False):
        n = formula.num_vars
        self.formula = formula
        self.num_vars = n
        self.vals = [_UNDEF] * (2 * n)
        self.level = [0] * n
        self.reason: List[Optional[_Clause]] = [None] * n
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.watches: List[List[_Clause]] = [[] for _ in range(2 * n)]
        self.clauses: List[_Clause] = []
        self.learnts: List[_Clause] = []
        self.ok = True

        self.activity = [0.0] * n
        self.var_inc = 1.0
        self.var_decay = var_decay
        self.cla_inc = 1.0
        self.clause_decay = clause_decay
        self.polarity = [True] * n  # True: branch on the negative literal
        self.rng = random.Random(seed)
        if seed:
            # a nonzero seed only perturbs the initial branching order
            self.activity = [self.rng.random() * 1e-3 for _ in range(n)]
        self._heap = [(-self.activity[v], v) for v in range(n)]
        heapq.heapify(self._heap)
        self.random_var_freq = random_var_freq

        self.restart_unit = restart_unit
        self.luby_index = 0
        self.conflicts_since_restart = 0
        self.max_learnts = max(100.0, len(formula.clauses) / 3.0)

        self.assumptions: List[int] = []
        self.cube_ids: List[int] = []
        self._refuted: List[int] = []
        self._refuted_prefix: Optional[tuple] = None
        self._ccc = False

        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.restarts = 0
        self.reductions = 0
        self.restart_floor_violations = 0
        self.record_learned = record_learned
        self.learned_log: List[tuple] = []

        for c in formula.clauses:
            self.add_clause(c)

    # --- basic state -------------------------------------------------------

    def decision_level(self) -> int:
        return len(self.trail_lim)

    def value(self, lit: int) -> Optional[bool]:
        v = self.vals[lit_code(lit)]
        return None if v == _UNDEF else bool(v)

    def _enqueue(self, code: int, reason: Optional[_Clause]) -> None:
        v = code >> 1
        self.vals[code] = 1
        self.vals[code ^ 1] = 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(code)

    def _new_level(self) -> None:
        self.trail_lim.append(len(self.trail))

    def backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        vals, heap, act = self.vals, self._heap, self.activity
        for code in reversed(self.trail[stop:]):
            v = code >> 1
            vals[code] = _UNDEF
            vals[code ^ 1] = _UNDEF
            self.reason[v] = None
            self.polarity[v] = bool(code & 1)
            heapq.heappush(heap, (-act[v], v))
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        if len(heap) > 8 * self.num_vars + 1024:
            self._heap = [(-act[v], v) for v in range(self.num_vars) if vals[2 * v] == _UNDEF]
            heapq.heapify(self._heap)

    def trail_entries(self) -> List[TrailEntry]:
        out = []
        for i, code in enumerate(self.trail):
            v = code >> 1
            lvl = self.level[v]
            r = self.reason[v]
            if r is not None:
                why: object = r.dimacs()
            elif lvl == 0:
                why = "unit"
            elif lvl <= len(self.assumptions) and self.assumptions[lvl - 1] == code:
                why = "assumption"
            else:
                why = "decision"
            out.append(TrailEntry(code_lit(code), lvl, why))
        return out

    def model(self) -> Dict[int, bool]:
        return {v + 1: self.vals[2 * v] == 1 for v in range(self.num_vars)}

    # --- clauses -------------------------------------------------------------

    def add_clause(self, lits: Sequence[int]) -> bool:
        """Add an input clause (DIMACS literals).  Returns False once the formula is UNSAT."""
        if not self.ok:
            return False
        self.backtrack(0)
        codes: List[int] = []
        for lit in lits:
            c = lit_code(lit)
            val = self.vals[c]
            if val == 1 or (c ^ 1) in codes:
                return True
            if val == 0 or c in codes:
                continue
            codes.append(c)
        if not codes:
            self.ok = False
            return False
        if len(codes) == 1:
            self._enqueue(codes[0], None)
            if self.propagate_codes() is not None:
                self.ok = False
            return self.ok
        cl = _Clause(codes)
        self._attach(cl)
        self.clauses.append(cl)
        return True

    def _attach(self, cl: _Clause) -> None:
        self.watches[cl.lits[0]].append(cl)
        self.watches[cl.lits[1]].append(cl)

    def _detach(self, cl: _Clause) -> None:
        self.watches[cl.lits[0]].remove(cl)
        self.watches[cl.lits[1]].remove(cl)
        cl.removed = True

    def learned_clauses(self) -> List[tuple]:
        return [c.dimacs() for c in self.learnts]

    # --- propagation ---------------------------------------------------------

    def propagate_codes(self) -> Optional[_Clause]:
        vals, watches, trail = self.vals, self.watches, self.trail
        while self.qhead < len(trail):
            fl = trail[self.qhead] ^ 1  # literal that just became false
            self.qhead += 1
            self.propagations += 1
            ws = watches[fl]
            kept: List[_Clause] = []
            i, n = 0, len(ws)
            while i < n:
                cl = ws[i]
                i += 1
                lits = cl.lits
                if lits[0] == fl:
                    lits[0], lits[1] = lits[1], fl
                first = lits[0]
                if vals[first] == 1:
                    kept.append(cl)
                    continue
                for k in range(2, len(lits)):
                    if vals[lits[k]] != 0:
                        lits[1], lits[k] = lits[k], fl
                        watches[lits[1]].append(cl)
                        break
                else:
                    kept.append(cl)
                    if vals[first] == 0:
                        kept.extend(ws[i:])
                        watches[fl] = kept
                        self.qhead = len(trail)
                        return cl
                    self._enqueue(first, cl)
            watches[fl] = kept
        return None

    def propagate(self) -> Optional[tuple]:
        """Apply all unit consequences; return the falsified clause on conflict."""
        confl = self.propagate_codes()
        return None if confl is None else confl.dimacs()

    def assume(self, lit: int) -> None:
        """Open a new decision level with ``lit`` (testing aid; no propagation)."""
        self._new_level()
        self._enqueue(lit_code(lit), None)

    # --- conflict analysis ---------------------------------------------------

    def _bump_var(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self._heap = [(-self.activity[u], u) for u in range(self.num_vars)]
            heapq.heapify(self._heap)
        elif self.vals[2 * v] == _UNDEF:
            heapq.heappush(self._heap, (-self.activity[v], v))

    def _bump_clause(self, cl: _Clause) -> None:
        cl.activity += self.cla_inc
        if cl.activity > 1e20:
            for c in self.learnts:
                c.activity *= 1e-20
            self.cla_inc *= 1e-20

    def _analyze(self, confl: _Clause):
        seen = set()
        learnt: List[int] = [-1]
        path = 0
        p = -1
        idx = len(self.trail) - 1
        cur = self.decision_level()
        level = self.level
        while True:
            if confl.learnt:
                self._bump_clause(confl)
            lits = confl.lits if p == -1 else confl.lits[1:]
            for q in lits:
                v = q >> 1
                if v not in seen and level[v] > 0:
                    self._bump_var(v)
                    seen.add(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while (self.trail[idx] >> 1) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            confl = self.reason[p >> 1]
            seen.discard(p >> 1)
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1
        # basic minimisation: drop literals implied by other learnt literals
        in_learnt = {q >> 1 for q in learnt}
        out = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r is None or any((x >> 1) not in in_learnt and level[x >> 1] > 0 for x in r.lits[1:]):
                out.append(q)
        if len(out) == 1:
            bt = 0
        else:
            mi = max(range(1, len(out)), key=lambda i: level[out[i] >> 1])
            out[1], out[mi] = out[mi], out[1]
            bt = level[out[1] >> 1]
        return out, bt

    def analyze(self, confl: Optional[_Clause] = None):
        """First-UIP analysis of ``confl`` (defaults to re-propagating).  Returns (clause, level)."""
        if confl is None:
            confl = self.propagate_codes()
            if confl is None:
                raise ValueError("no conflict to analyze")
        if self.decision_level() == 0:
            return (), 0
        lits, bt = self._analyze(confl)
        return tuple(code_lit(c) for c in lits), bt

    def _learn(self, codes: List[int]) -> None:
        if self.record_learned:
            self.learned_log.append(tuple(code_lit(c) for c in codes))
        if len(codes) == 1:
            self._enqueue(codes[0], None)
            return
        cl = _Clause(codes, learnt=True)
        self._attach(cl)
        self.learnts.append(cl)
        self._bump_clause(cl)
        self._enqueue(codes[0], cl)

    # --- restarts and database reduction ------------------------------------

    def _restart_limit(self) -> float:
        return luby(2, self.luby_index) * self.restart_unit

    def restart(self) -> None:
        """Backtrack to the assumption levels, keeping the assumptions."""
        floor = len(self.assumptions)
        if self.decision_level() > floor:
            self.backtrack(floor)
        if self.decision_level() >= floor and (
                len(self.trail) < floor or any(self.vals[a] != 1 for a in self.assumptions)):
            self.restart_floor_violations += 1
        self.restarts += 1
        self.conflicts_since_restart = 0

    def _maybe_restart(self) -> None:
        if (self.conflicts_since_restart >= self._restart_limit()
                and self.decision_level() >= len(self.assumptions)):
            self.luby_index += 1
            self.max_learnts *= 1.05
            self.restart()

    def _locked(self, cl: _Clause) -> bool:
        v = cl.lits[0] >> 1
        return self.reason[v] is cl and self.vals[cl.lits[0]] == 1

    def reduce_db(self) -> int:
        """Halve the learned clauses by activity; reasons and binaries are kept."""
        if not self.learnts:
            return 0
        target = len(self.learnts) // 2
        candidates = sorted((c for c in self.learnts if len(c.lits) > 2 and not self._locked(c)),
                            key=lambda c: c.activity)
        excess = len(self.learnts) - target
        doomed = candidates[:excess]
        for c in doomed:
            self._detach(c)
        self.learnts = [c for c in self.learnts if not c.removed]
        self.reductions += 1
        return len(doomed)

    def _maybe_reduce(self) -> None:
        if len(self.learnts) - len(self.trail) >= self.max_learnts:
            self.reduce_db()

    def on_cube_refuted(self) -> None:
        self.luby_index = 0
        self.conflicts_since_restart = 0
        self.reduce_db()

    # --- search steps --------------------------------------------------------

    def _pick_branch(self) -> Optional[int]:
        vals = self.vals
        if self.random_var_freq and self.rng.random() < self.random_var_freq:
            v = self.rng.randrange(self.num_vars) if self.num_vars else None
            if v is not None and vals[2 * v] == _UNDEF:
                return 2 * v + (1 if self.polarity[v] else 0)
        heap, act = self._heap, self.activity
        while heap:
            a, v = heapq.heappop(heap)
            if vals[2 * v] == _UNDEF and -a == act[v]:
                return 2 * v + (1 if self.polarity[v] else 0)
        for v in range(self.num_vars):
            if vals[2 * v] == _UNDEF:
                return 2 * v + (1 if self.polarity[v] else 0)
        return None

    def _refute(self, k: int) -> None:
        """Cube with ``k`` assumptions is refuted; drop it and all larger cubes."""
        self._refuted_prefix = tuple(code_lit(c) for c in self.assumptions[:k])
        self._refuted.append(self.cube_ids[k - 1])
        del self.assumptions[k - 1:]
        del self.cube_ids[k - 1:]
        if self._ccc:
            self.on_cube_refuted()

    def _decide(self) -> bool:
        """Make one decision (next assumption or heuristic).  False when nothing is left."""
        lvl = self.decision_level()
        if lvl < len(self.assumptions):
            a = self.assumptions[lvl]
            val = self.vals[a]
            if val == 0:
                self._refute(lvl + 1)
                return True
            self._new_level()
            if val == _UNDEF:
                self._enqueue(a, None)
            return True
        code = self._pick_branch()
        if code is None:
            return False
        self.decisions += 1
        self._new_level()
        self._enqueue(code, None)
        return True

    def _resolve(self) -> bool:
        """Propagate and learn until no conflict remains.  False on global UNSAT."""
        while True:
            confl = self.propagate_codes()
            if confl is None:
                return True
            self.conflicts += 1
            self.conflicts_since_restart += 1
            if self.decision_level() == 0:
                self.ok = False
                return False
            conflict_level = self.decision_level()
            lits, bt = self._analyze(confl)
            self.backtrack(bt)
            self._learn(lits)
            self.var_inc /= self.var_decay
            self.cla_inc /= self.clause_decay
            if conflict_level <= len(self.assumptions):
                self._refute(conflict_level)

    def solve(self, assumptions: Sequence[int] = (), conflict_budget: Optional[int] = None,
              should_stop: Optional[Callable[[], bool]] = None) -> SolveResult:
        """Solve under ``assumptions``; learned clauses persist between calls."""
        self._ccc = False
        if not self.ok:
            return SolveResult(Status.UNSAT)
        self.backtrack(0)
        self.assumptions = [lit_code(a) for a in assumptions]
        self.cube_ids = list(range(1, len(self.assumptions) + 1))
        self._refuted = []
        self._refuted_prefix = None
        start = self.conflicts
        if self.propagate_codes() is not None:
            self.ok = False
            return SolveResult(Status.UNSAT)
        result = None
        while result is None:
            if conflict_budget is not None and self.conflicts - start >= conflict_budget:
                result = SolveResult(Status.BUDGET_EXHAUSTED)
                break
            if should_stop is not None and should_stop():
                result = SolveResult(Status.BUDGET_EXHAUSTED)
                break
            self._maybe_restart()
            self._maybe_reduce()
            if not self._decide():
                result = SolveResult(Status.SAT, model=self.model())
                break
            if not self._refuted and not self._resolve():
                result = SolveResult(Status.UNSAT)
                break
            if self._refuted:
                result = SolveResult(Status.UNSAT_UNDER_ASSUMPTIONS, failed_prefix=self._refuted_prefix)
        self.backtrack(0)
        self.assumptions = []
        self.cube_ids = []
        return result

    def ccc_step(self, q_decision: Channel, q_solved: Channel, log: Optional[Callable] = None) -> SolveResult:
        """One bounded step of the concurrent CDCL peer.

        Consumes at most one decision message, then makes one decision and
        propagates, learning from conflicts.  Cubes refuted during the step
        are reported on ``q_solved``; only the smallest refuted cube matters
        to the lookahead side because it implies the larger ones.
        """
        self._ccc = True
        if not self.ok:
            return SolveResult(Status.UNSAT)
        if self.decision_level() >= len(self.assumptions) and len(self.trail) == self.num_vars:
            return SolveResult(Status.SAT, model=self.model())
        self._refuted = []
        if q_decision:
            msg: DecisionMsg = q_decision.pop()
            bl = msg.backtrack_level
            if discard_stale(msg, self.cube_ids) is Action.DISCARD:
                if log:
                    log("discard", f"c{msg.cube_id}", f"level={bl}", f"|S|={len(self.cube_ids)}")
                return SolveResult(Status.PAUSED)
            del self.cube_ids[bl:]
            del self.assumptions[bl:]
            self.cube_ids.append(msg.cube_id)
            self.assumptions.append(lit_code(msg.lit))
            if self.decision_level() > bl:
                self.backtrack(bl)
            if log:
                log("open", f"c{msg.cube_id}", f"lit={msg.lit}", f"level={bl}")
        else:
            self._maybe_restart()
            self._maybe_reduce()
        if not self._decide():
            return SolveResult(Status.SAT, model=self.model())
        ok = self._resolve()
        for cid in self._refuted:
            q_solved.send(SolvedMsg(cid))
            if log:
                log("send", f"solved c{cid}", f"|S|={len(self.cube_ids)}")
        if not ok:
            return SolveResult(Status.UNSAT)
        if self._refuted:
            return SolveResult(Status.CUBE_REFUTED, refuted_ids=tuple(self._refuted))
        return SolveResult(Status.PAUSED)


def solve_incremental(f: CnfFormula, assumptions: Sequence[int] = (), budget: Optional[int] = None,
                      solver: Optional[Solver] = None) -> SolveResult:
    solver = solver if solver is not None else Solver(f)
    return solver.solve(assumptions, conflict_budget=budget)

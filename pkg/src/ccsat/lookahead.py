"""Lookahead cube-tree search.

The search is a depth-first walk over a binary decision tree.  Each node
gets a fresh id in preorder.  Entering a node first inspects the solved
queue (an id on the current path means an ancestor was refuted by the CDCL
peer, so the node is abandoned), then pushes its id and announces its
decision literal on the decision queue.  Expanding a node propagates,
probes for failed literals, applies the cutoff rule and picks the next
branching variable by lookahead.

The walk is iterative: :meth:`LookaheadEngine.step` performs exactly one
node entry or one node expansion so a scheduler can interleave it with the
CDCL peer.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import heuristics as H
from .formula import CnfFormula
from .messages import Action, Channel, DecisionMsg, discard_stale

CANDIDATE_LIMIT = 256


class Mode(enum.Enum):
    CCC_INF = "ccc_inf"
    CCC_CUTOFF = "ccc_cutoff"
    CC_CUTOFF = "cc_cutoff"
    PURE = "pure"

    @property
    def right_first(self) -> bool:
        return self in (Mode.CCC_INF, Mode.CCC_CUTOFF)

    @property
    def cuts(self) -> bool:
        return self in (Mode.CCC_CUTOFF, Mode.CC_CUTOFF)


class Refuter(enum.Enum):
    LOOKAHEAD = "lookahead"
    CDCL = "cdcl"
    CUTOFF = "cutoff"


class LaStatus(enum.Enum):
    RUNNING = "running"
    SAT = "sat"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class CubeNode:
    id: int
    phi_dec: tuple
    phi_imp: frozenset
    depth: int
    discrepancies: int


@dataclass(frozen=True)
class LeafRecord:
    id: int
    cube: tuple
    refuter: Refuter
    discrepancies: int


@dataclass
class CubePhaseOutput:
    emitted: List[tuple] = field(default_factory=list)
    refuted: List[tuple] = field(default_factory=list)
    leaves: List[LeafRecord] = field(default_factory=list)

    def count(self, refuter: Refuter) -> int:
        return sum(1 for r in self.leaves if r.refuter is refuter)

    def discrepancy_histogram(self) -> Dict[int, int]:
        hist: Dict[int, int] = {}
        for r in self.leaves:
            hist[r.discrepancies] = hist.get(r.discrepancies, 0) + 1
        return dict(sorted(hist.items()))


@dataclass
class _Frame:
    id: int
    dec: tuple
    mark: int
    discrepancies: int
    d: float
    children: list = field(default_factory=list)


DecideHook = Callable[["LookaheadEngine", tuple], Optional[int]]


class LookaheadEngine:
    def __init__(self, formula: CnfFormula, mode: Mode = Mode.PURE,
                 config: H.HeuristicConfig = H.DEFAULT_CONFIG,
                 decide_hook: Optional[DecideHook] = None,
                 candidate_limit: int = CANDIDATE_LIMIT):
        n = formula.num_vars
        self.formula = formula
        self.n = n
        self.mode = mode
        self.config = config
        self.decide_hook = decide_hook
        self.clauses = [tuple(c) for c in formula.clauses]
        self.lv = [0] * (2 * n + 1)  # indexed by lit + n: 1 true, -1 false, 0 free
        self.occ: List[List[int]] = [[] for _ in range(2 * n + 1)]
        counts = [0] * (n + 1)
        for i, c in enumerate(self.clauses):
            for lit in c:
                self.occ[lit + n].append(i)
                counts[abs(lit)] += 1
        self.occurrences = counts
        self.candidate_limit = candidate_limit
        self.trail: List[int] = []
        self.propagations = 0
        self._scores: Optional[Dict[int, Tuple[int, int]]] = None
        self._scores_at = -1

        if mode is Mode.CC_CUTOFF:
            self.threshold = config.cc_init_threshold
        else:
            self.threshold = config.ccc_init_threshold
        self.n_free = n
        self.next_id = 0
        self.stack: List[_Frame] = []
        self.path_ids: set = set()
        self._pending: Optional[tuple] = ("enter", None, 0, False)
        self.status = LaStatus.RUNNING
        self.model: Optional[Dict[int, bool]] = None
        self.output = CubePhaseOutput()
        self.tree: Dict[int, list] = {}  # id -> [parent id, literal, status]
        self.predictor_events: list = []
        self._handled_solved: set = set()
        self.steps = 0

    # --- propagation ---------------------------------------------------------

    def value(self, lit: int) -> int:
        return self.lv[lit + self.n]

    def _assign(self, lit: int) -> None:
        self.lv[lit + self.n] = 1
        self.lv[-lit + self.n] = -1
        self.trail.append(lit)

    def _undo(self, mark: int) -> None:
        lv, n, trail = self.lv, self.n, self.trail
        for lit in trail[mark:]:
            lv[lit + n] = 0
            lv[-lit + n] = 0
        del trail[mark:]

    def _propagate(self, qhead: int) -> bool:
        """Unit propagation from trail position ``qhead``.  True on conflict."""
        lv, n, occ, clauses, trail = self.lv, self.n, self.occ, self.clauses, self.trail
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            self.propagations += 1
            for ci in occ[n - p]:
                free = 0
                unit = 0
                for lit in clauses[ci]:
                    x = lv[lit + n]
                    if x == 1:
                        break
                    if x == 0:
                        free += 1
                        unit = lit
                else:
                    if free == 0:
                        return True
                    if free == 1:
                        lv[unit + n] = 1
                        lv[n - unit] = -1
                        trail.append(unit)
        return False

    def _probe(self, lit: int) -> Tuple[bool, int]:
        mark = len(self.trail)
        self._assign(lit)
        conflict = self._propagate(mark)
        implied = len(self.trail) - mark - 1
        self._undo(mark)
        return conflict, implied

    def _fix(self, lit: int) -> bool:
        mark = len(self.trail)
        self._assign(lit)
        return self._propagate(mark)

    def candidates(self) -> List[int]:
        free = [v for v in range(1, self.n + 1) if self.lv[v + self.n] == 0]
        if len(free) > self.candidate_limit:
            occ = self.occurrences
            free = sorted(sorted(free, key=lambda v: (-occ[v], v))[: self.candidate_limit])
        return free

    def simplify(self, qhead: int) -> bool:
        """Propagate from ``qhead`` and probe failed literals to a fixpoint.

        A probe of ``l`` that conflicts fixes ``-l``.  Scores of the final
        clean probing pass are kept for :meth:`decide`.  True on conflict.
        """
        self._scores = None
        if self._propagate(qhead):
            return True
        while True:
            changed = False
            scores: Dict[int, Tuple[int, int]] = {}
            for v in self.candidates():
                if self.lv[v + self.n] != 0:
                    continue
                pos_fail, pos = self._probe(v)
                neg_fail, negs = self._probe(-v)
                if pos_fail or neg_fail:
                    changed = True
                    if self._fix(-v if pos_fail else v):
                        return True
                    continue
                scores[v] = (pos, negs)
            if not changed:
                self._scores = scores
                self._scores_at = len(self.trail)
                return False

    def decide(self) -> Tuple[int, int]:
        """Pick the branching variable and its preferred (left) literal.

        Score per variable is ``s(x)*s(-x) + s(x) + s(-x)`` with ``s`` the
        number of newly implied literals; ties go to the lowest index.  The
        left literal is the branch with the smaller reduction.
        """
        scores = self._scores if self._scores_at == len(self.trail) else None
        if scores is None:
            scores = {}
            for v in self.candidates():
                _, pos = self._probe(v)
                _, negs = self._probe(-v)
                scores[v] = (pos, negs)
        if not scores:
            free = [v for v in range(1, self.n + 1) if self.lv[v + self.n] == 0]
            if not free:
                raise ValueError("no unassigned variable to decide on")
            scores = {free[0]: (0, 0)}
        best_v, best = 0, -1
        for v in sorted(scores):
            p, q = scores[v]
            s = p * q + p + q
            if s > best:
                best_v, best = v, s
        p, q = scores[best_v]
        return best_v, (best_v if p <= q else -best_v)

    def all_satisfied(self) -> bool:
        if len(self.trail) == self.n:
            return True
        lv, n = self.lv, self.n
        return all(any(lv[lit + n] == 1 for lit in c) for c in self.clauses)

    def current_model(self) -> Dict[int, bool]:
        return {v: self.lv[v + self.n] == 1 for v in range(1, self.n + 1)}

    def node_view(self) -> Optional[CubeNode]:
        if not self.stack:
            return None
        top = self.stack[-1]
        dec = set(top.dec)
        imp = frozenset(l for l in self.trail if l not in dec)
        return CubeNode(top.id, top.dec, imp, len(top.dec), top.discrepancies)

    # --- search --------------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.status is not LaStatus.RUNNING

    def _difficulty(self, n_dec: int) -> float:
        if self.n_free <= 0:
            return 0.0
        return H.difficulty(n_dec, max(0, len(self.trail) - n_dec), self.n_free)

    def _check_solved(self, q_solved: Optional[Channel], log) -> Optional[int]:
        """Drain stale solved ids; return the head id if it lies on the current path."""
        if q_solved is None:
            return None
        while q_solved:
            msg = q_solved.head()
            head = msg.cube_id
            if discard_stale(msg, self.path_ids) is Action.PROCESS:
                if head not in self._handled_solved:
                    self._handled_solved.add(head)
                    if log:
                        log("recv", f"solved c{head}")
                    if self.mode is Mode.CCC_CUTOFF:
                        frame = next(f for f in self.stack if f.id == head)
                        self.threshold = H.ccc_update(self.threshold, frame.d, H.Solver.CDCL, self.config)
                return head
            q_solved.pop()
            if log:
                log("discard", f"solved c{head}")
        return None

    def _close_leaf(self, nid: int, cube: tuple, refuter: Refuter, disc: int, log) -> None:
        rec = LeafRecord(nid, cube, refuter, disc)
        self.output.leaves.append(rec)
        if refuter is Refuter.CUTOFF:
            self.output.emitted.append(cube)
        else:
            self.output.refuted.append(cube)
        self.tree[nid][2] = refuter.value
        self.predictor_events.append(H.LeafClosed(disc))
        if refuter is Refuter.LOOKAHEAD:
            self.predictor_events.append(H.LaRefutedCube())
        if log:
            log("close", f"c{nid}", refuter.value, f"disc={disc}")

    def _pop_frame(self) -> _Frame:
        frame = self.stack.pop()
        self.path_ids.discard(frame.id)
        self._undo(frame.mark)
        return frame

    def _unwind(self, log) -> None:
        """The top of the stack has returned UNSAT; continue with the next open branch."""
        while self.stack:
            parent = self.stack[-1]
            if parent.children:
                lit, is_right = parent.children.pop(0)
                self._pending = ("enter", parent, lit, is_right)
                return
            self._pop_frame()
            self.tree[parent.id][2] = "done"
            if log:
                log("close", f"c{parent.id}", "done")
        self._pending = None
        self.status = LaStatus.EXHAUSTED
        if log:
            log("exhausted")

    def step(self, q_decision: Optional[Channel] = None, q_solved: Optional[Channel] = None,
             log=None) -> LaStatus:
        if self.done:
            return self.status
        self.steps += 1
        kind = self._pending[0]
        if kind == "enter":
            _, parent, lit, is_right = self._pending
            self._enter(parent, lit, is_right, q_decision, q_solved, log)
        else:
            self._expand(q_solved, log)
        return self.status

    def _enter(self, parent: Optional[_Frame], lit: int, is_right: bool,
               q_decision: Optional[Channel], q_solved: Optional[Channel], log) -> None:
        self.next_id += 1
        nid = self.next_id
        dec = parent.dec + (lit,) if parent is not None else ()
        disc = (parent.discrepancies if parent is not None else 0) + int(is_right)
        self.tree[nid] = [parent.id if parent is not None else 0, lit, "open"]
        if log:
            log("enter", f"c{nid}", f"lit={lit}", f"depth={len(dec)}", f"disc={disc}")
        if self._check_solved(q_solved, log) is not None:
            self._close_leaf(nid, dec, Refuter.CDCL, disc, log)
            self._unwind(log)
            return
        frame = _Frame(nid, dec, len(self.trail), disc, self._difficulty(len(dec)))
        self.stack.append(frame)
        self.path_ids.add(nid)
        if dec and q_decision is not None:
            q_decision.send(DecisionMsg(nid, len(dec) - 1, lit))
            if log:
                log("send", f"decision c{nid}", f"lit={lit}", f"level={len(dec) - 1}")
        self._pending = ("expand",)

    def _refute_top(self, refuter: Refuter, log) -> None:
        frame = self._pop_frame()
        self._close_leaf(frame.id, frame.dec, refuter, frame.discrepancies, log)
        self._unwind(log)

    def _expand(self, q_solved: Optional[Channel], log) -> None:
        frame = self.stack[-1]
        if self._check_solved(q_solved, log) is not None:
            self._refute_top(Refuter.CDCL, log)
            return
        qhead = len(self.trail)
        conflict = False
        if frame.dec:
            lit = frame.dec[-1]
            val = self.value(lit)
            if val == -1:
                conflict = True
            elif val == 0:
                self._assign(lit)
        if not conflict:
            conflict = self.simplify(qhead)
        if not frame.dec and not conflict:
            self.n_free = self.n - len(self.trail)
        if conflict:
            if self.mode is Mode.CC_CUTOFF:
                self.threshold = H.cc_update(self.threshold, H.CcEvent.LA_SOLVED_CUBE, self.config)
            elif self.mode is Mode.CCC_CUTOFF:
                self.threshold = H.ccc_update(self.threshold, frame.d, H.Solver.LOOKAHEAD, self.config)
            self._refute_top(Refuter.LOOKAHEAD, log)
            return
        if self.all_satisfied():
            self.model = self.current_model()
            self.status = LaStatus.SAT
            self.tree[frame.id][2] = "sat"
            if log:
                log("sat", f"c{frame.id}")
            return
        depth = len(frame.dec)
        frame.d = self._difficulty(depth)
        if self.mode is Mode.CC_CUTOFF and depth > self.config.cc_too_deep:
            self.threshold = H.cc_update(self.threshold, H.CcEvent.TOO_DEEP, self.config)
        if self.mode.cuts and H.should_cut(frame.d, self.threshold):
            if self.mode is Mode.CCC_CUTOFF:
                self.threshold = H.ccc_on_cutoff(self.threshold, self.config)
            self._refute_top(Refuter.CUTOFF, log)
            return
        first = self.decide_hook(self, frame.dec) if self.decide_hook else None
        if first is not None:
            frame.children = [(first, False), (-first, True)]
        else:
            v, left = self.decide()
            right = -left
            if self.mode.right_first:
                frame.children = [(right, True), (left, False)]
            else:
                frame.children = [(left, False), (right, True)]
        if self.mode is Mode.CC_CUTOFF:
            self.threshold = H.cc_update(self.threshold, H.CcEvent.DECISION, self.config)
        lit, is_right = frame.children.pop(0)
        self._pending = ("enter", frame, lit, is_right)

    def run(self, max_steps: Optional[int] = None) -> LaStatus:
        """Run without a CDCL peer until SAT or the tree is exhausted."""
        while not self.done:
            if max_steps is not None and self.steps >= max_steps:
                break
            self.step()
        return self.status

    def dump_tree(self) -> str:
        """One line per node: ``id parent literal status``."""
        return "".join(f"{nid} {p} {lit} {st}\n" for nid, (p, lit, st) in sorted(self.tree.items()))


def maybe_cutoff(d: float, threshold: float, mode: Mode) -> bool:
    """True when the node should be emitted as a cube."""
    return mode.cuts and H.should_cut(d, threshold)


def _engine_at(f: CnfFormula, phi_dec: Sequence[int], phi_imp: Sequence[int] = ()) -> LookaheadEngine:
    eng = LookaheadEngine(f)
    for lit in list(phi_dec) + list(phi_imp):
        if eng.value(lit) == 0:
            eng._assign(lit)
    return eng


def simplify_and_learn(f: CnfFormula, phi_dec: Sequence[int], phi_imp: Sequence[int] = ()):
    """Return ``(implied literals, conflict flag)`` after propagation and probing."""
    eng = _engine_at(f, phi_dec, phi_imp)
    conflict = any(eng.value(l) == -1 for l in phi_dec) or eng.simplify(0)
    dec = set(phi_dec)
    return frozenset(l for l in eng.trail if l not in dec), conflict


def decide(f: CnfFormula, phi_dec: Sequence[int], phi_imp: Sequence[int] = ()) -> Tuple[int, int]:
    return _engine_at(f, phi_dec, phi_imp).decide()


def la_search(f: CnfFormula, mode: Mode = Mode.PURE, config: H.HeuristicConfig = H.DEFAULT_CONFIG):
    """Stand-alone search (no CDCL peer).  Returns the finished engine."""
    eng = LookaheadEngine(f, mode, config)
    eng.run()
    return eng

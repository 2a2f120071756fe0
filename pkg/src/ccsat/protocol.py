"""Two-peer concurrent cube-and-conquer: lookahead and CDCL linked by two queues.

The lookahead peer announces every new cube on the decision queue; the CDCL
peer follows those decisions as assumptions and reports refuted cubes on the
solved queue.  Whichever peer proves the empty cube unsatisfiable or finds a
model ends the run.

Two schedulers drive the peers through the same bounded ``step`` API: a
deterministic one that interleaves steps from a script (round robin by
default) and records a replayable trace, and a threaded one that runs each
peer free on its own thread.
"""
from __future__ import annotations

import enum
import itertools
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence

from . import heuristics as H
from .cdcl import Solver, Status
from .formula import CnfFormula
from .lookahead import CubePhaseOutput, DecideHook, LaStatus, LookaheadEngine, Mode
from .messages import Action, Channel, DecisionMsg, SolvedMsg, discard_stale
from .verify import check_model

__all__ = [
    "Action", "Answer", "CccConfig", "CccOutcome", "CccRun", "Channel", "ConfigError",
    "DecisionMsg", "Peer", "ScheduleExhausted", "SolvedMsg", "discard_stale",
    "deterministic_step", "parse_schedule", "run_ccc",
]


class ConfigError(ValueError):
    pass


class ScheduleExhausted(RuntimeError):
    def __init__(self, trace: List[str]):
        super().__init__(f"schedule ended before termination after {len(trace)} events")
        self.trace = trace


class Peer(enum.Enum):
    LA = "LA"
    CDCL = "CDCL"


class Answer(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    CUBES = "CUBES"  # cube phase finished; emitted cubes go to the conquer phase
    ABORTED = "ABORTED"


@dataclass
class CccConfig:
    mode: Mode = Mode.CCC_INF
    scheduler: str = "deterministic"
    schedule: Optional[Sequence[str]] = None
    predictor: bool = False
    heuristics: H.HeuristicConfig = H.DEFAULT_CONFIG
    seed: int = 0
    decide_hook: Optional[DecideHook] = None

    def validate(self) -> None:
        if self.mode not in (Mode.CCC_INF, Mode.CCC_CUTOFF):
            raise ConfigError(f"concurrent run needs mode ccc_inf or ccc_cutoff, not {self.mode.value}")
        if self.scheduler not in ("deterministic", "threads"):
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.scheduler == "threads" and self.schedule is not None:
            raise ConfigError("a step schedule only applies to the deterministic scheduler")
        if self.schedule is not None:
            bad = [p for p in self.schedule if p not in ("LA", "CDCL")]
            if bad:
                raise ConfigError(f"schedule entries must be LA or CDCL, got {bad[0]!r}")


@dataclass
class CccOutcome:
    answer: Answer
    winner: Optional[Peer] = None
    model: Optional[Dict[int, bool]] = None
    reason: Optional[H.AbortReason] = None
    cubes: CubePhaseOutput = field(default_factory=CubePhaseOutput)
    predictor: Optional[H.PredictorState] = None
    trace: List[str] = field(default_factory=list)
    steps: Dict[str, int] = field(default_factory=dict)
    la_propagations: int = 0
    cdcl_conflicts: int = 0


def parse_schedule(text: str) -> List[str]:
    """Parse a schedule script: tokens ``LA``/``CDCL``, optionally ``TOKEN*N``; ``#`` comments."""
    out: List[str] = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for tok in line.split():
            name, _, rep = tok.partition("*")
            name = name.upper()
            if name not in ("LA", "CDCL"):
                raise ConfigError(f"bad schedule token {tok!r}")
            try:
                count = int(rep) if rep else 1
            except ValueError:
                raise ConfigError(f"bad repetition in {tok!r}") from None
            out.extend([name] * count)
    return out


class _Trace:
    def __init__(self):
        self.lines: List[str] = []
        self._lock = threading.Lock()

    def logger(self, peer: Peer):
        def log(event: str, *args: str) -> None:
            with self._lock:
                parts = [f"SEQ {len(self.lines) + 1}", peer.value, event, *args]
                self.lines.append(" ".join(parts))
        return log


class CccRun:
    """State of one concurrent run: both peers, both channels, abort flag, outcome cell."""

    def __init__(self, f: CnfFormula, config: CccConfig):
        config.validate()
        self.formula = f
        self.config = config
        self.q_decision: Channel = Channel("decision", record=True)
        self.q_solved: Channel = Channel("solved", record=True)
        self.la = LookaheadEngine(f, config.mode, config.heuristics, config.decide_hook)
        self.cdcl = Solver(f, seed=config.seed)
        self.trace = _Trace()
        self._log_la = self.trace.logger(Peer.LA)
        self._log_cdcl = self.trace.logger(Peer.CDCL)
        wall = config.scheduler == "threads"
        self.predictor = H.PredictorState.from_config(config.heuristics, wall) if config.predictor else None
        self.abort = threading.Event()
        self._outcome_lock = threading.Lock()
        self.outcome: Optional[CccOutcome] = None
        self.la_steps = 0
        self.cdcl_steps = 0
        self._start = time.monotonic()

    def _finish(self, outcome: CccOutcome) -> None:
        with self._outcome_lock:
            if self.outcome is not None:
                return
            if outcome.model is not None and not check_model(self.formula, outcome.model):
                raise AssertionError("peer returned a model that does not satisfy the formula")
            outcome.cubes = self.la.output
            outcome.predictor = self.predictor
            outcome.trace = self.trace.lines
            outcome.steps = {"LA": self.la_steps, "CDCL": self.cdcl_steps}
            outcome.la_propagations = self.la.propagations
            outcome.cdcl_conflicts = self.cdcl.conflicts
            self.outcome = outcome
            self.abort.set()

    def step_la(self) -> None:
        self.la_steps += 1
        status = self.la.step(self.q_decision, self.q_solved, self._log_la)
        if status is LaStatus.SAT:
            self._log_la("result", "SAT")
            self._finish(CccOutcome(Answer.SAT, Peer.LA, model=self.la.model))
            return
        if status is LaStatus.EXHAUSTED:
            if self.config.mode is Mode.CCC_CUTOFF and self.la.output.emitted:
                self._log_la("result", "CUBES", str(len(self.la.output.emitted)))
                self._finish(CccOutcome(Answer.CUBES, Peer.LA))
            else:
                self._log_la("result", "UNSAT")
                self._finish(CccOutcome(Answer.UNSAT, Peer.LA))
            return
        if self.predictor is not None:
            self._observe()

    def _observe(self) -> None:
        events = self.la.predictor_events
        self.la.predictor_events = []
        if self.config.scheduler == "threads":
            used = time.monotonic() - self._start
        else:
            used = self.la.propagations
        state = self.predictor
        for ev in events + [H.Tick(used)]:
            state = H.predictor_observe(state, ev)
        self.predictor = state
        if state.verdict is H.Verdict.ABORT_TO_CDCL:
            self._log_la("abort", state.reason.value)
            self._finish(CccOutcome(Answer.ABORTED, reason=state.reason))

    def step_cdcl(self) -> None:
        self.cdcl_steps += 1
        r = self.cdcl.ccc_step(self.q_decision, self.q_solved, self._log_cdcl)
        if r.status is Status.SAT:
            self._log_cdcl("result", "SAT")
            self._finish(CccOutcome(Answer.SAT, Peer.CDCL, model=r.model))
        elif r.status is Status.UNSAT:
            self._log_cdcl("result", "UNSAT")
            self._finish(CccOutcome(Answer.UNSAT, Peer.CDCL))

    def step(self, peer: str) -> None:
        if self.outcome is not None:
            return
        if peer == "LA":
            self.step_la()
        else:
            self.step_cdcl()

    def run_schedule(self, schedule: Optional[Iterable[str]] = None) -> CccOutcome:
        """Interleave peer steps from ``schedule`` (round robin if omitted)."""
        it: Iterator[str] = iter(schedule) if schedule is not None else itertools.cycle(("LA", "CDCL"))
        while self.outcome is None:
            try:
                peer = next(it)
            except StopIteration:
                raise ScheduleExhausted(self.trace.lines) from None
            self.step(peer)
        return self.outcome

    def run_threads(self) -> CccOutcome:
        def loop(step):
            while not self.abort.is_set():
                step()

        threads = [threading.Thread(target=loop, args=(s,), daemon=True)
                   for s in (self.step_la, self.step_cdcl)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        return self.outcome


def run_ccc(f: CnfFormula, config: Optional[CccConfig] = None) -> CccOutcome:
    config = config or CccConfig()
    run = CccRun(f, config)
    if config.scheduler == "threads":
        return run.run_threads()
    return run.run_schedule(config.schedule)


def deterministic_step(f: CnfFormula, schedule: Sequence[str], config: Optional[CccConfig] = None) -> List[str]:
    """Run ``schedule`` and return the event trace.

    Raises :class:`ScheduleExhausted` (carrying the partial trace) when the
    script ends before either peer terminates.
    """
    config = config or CccConfig()
    run = CccRun(f, config)
    return run.run_schedule(schedule).trace

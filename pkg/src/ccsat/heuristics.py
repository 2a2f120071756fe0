"""Cutoff thresholds, the cube difficulty metric and the suitability predictor."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Union


class ZeroFreeVariables(ValueError):
    pass


@dataclass(frozen=True)
class HeuristicConfig:
    cc_init_threshold: float = 1000.0
    cc_decay: float = 0.7
    cc_growth: float = 1.05
    cc_too_deep: int = 50
    ccc_init_threshold: float = 1000.0
    ccc_cdcl_factor: float = 0.4
    ccc_la_factor: float = 3.0
    ccc_filter: float = 0.4
    ccc_cutoff_growth: float = 1.05
    predictor_discrepancy_limit: int = 20
    predictor_min_la_wins: int = 10
    # propagations in deterministic mode, seconds in wall-clock mode
    predictor_budget: float = 2_000_000
    predictor_budget_seconds: float = 5.0


# config key (CLI spelling) -> HeuristicConfig attribute
CONFIG_KEYS = {
    "cc-init-threshold": "cc_init_threshold",
    "cc-decay": "cc_decay",
    "cc-growth": "cc_growth",
    "cc-too-deep": "cc_too_deep",
    "ccc-init-threshold": "ccc_init_threshold",
    "ccc-cdcl-factor": "ccc_cdcl_factor",
    "ccc-la-factor": "ccc_la_factor",
    "ccc-filter": "ccc_filter",
    "ccc-cutoff-growth": "ccc_cutoff_growth",
    "predictor-discrepancy-limit": "predictor_discrepancy_limit",
    "predictor-min-la-wins": "predictor_min_la_wins",
    "predictor-budget": "predictor_budget",
}

DEFAULT_CONFIG = HeuristicConfig()


def difficulty(n_dec: int, n_imp: int, n_free: int) -> float:
    """Cube difficulty ``n_dec**2 * (n_dec + n_imp) / n_free``.

    Large values mean the cube is expected to be easy for CDCL.
    """
    if n_free <= 0:
        raise ZeroFreeVariables("difficulty needs at least one free variable")
    return n_dec * n_dec * (n_dec + n_imp) / n_free


class CcEvent(enum.Enum):
    LA_SOLVED_CUBE = "la-solved-cube"
    TOO_DEEP = "too-deep"
    DECISION = "decision"


def cc_update(t: float, event: CcEvent, config: HeuristicConfig = DEFAULT_CONFIG) -> float:
    if event is CcEvent.DECISION:
        return t * config.cc_growth
    return t * config.cc_decay


class Solver(enum.Enum):
    CDCL = "cdcl"
    LOOKAHEAD = "lookahead"


def ccc_target(d: float, solver: Solver, config: HeuristicConfig = DEFAULT_CONFIG) -> float:
    factor = config.ccc_cdcl_factor if solver is Solver.CDCL else config.ccc_la_factor
    return factor * d


def ccc_update(t: float, d: float, solver: Solver, config: HeuristicConfig = DEFAULT_CONFIG) -> float:
    # low-pass filter towards the target; contraction factor is 1 - ccc_filter
    s = ccc_target(d, solver, config)
    return config.ccc_filter * s + (1.0 - config.ccc_filter) * t


def ccc_on_cutoff(t: float, config: HeuristicConfig = DEFAULT_CONFIG) -> float:
    return t * config.ccc_cutoff_growth


def should_cut(d: float, threshold: float) -> bool:
    return d > threshold


class Verdict(enum.Enum):
    UNDECIDED = "undecided"
    CONTINUE = "continue"
    ABORT_TO_CDCL = "abort-to-cdcl"


class AbortReason(enum.Enum):
    DISCREPANCY_LIMIT = "PredictorDiscrepancyLimit"
    CDCL_DOMINATES = "PredictorCdclDominates"


@dataclass(frozen=True)
class LaRefutedCube:
    pass


@dataclass(frozen=True)
class LeafClosed:
    discrepancies: int


@dataclass(frozen=True)
class Tick:
    """Cumulative budget consumed so far (propagations or seconds)."""

    used: float


PredictorEvent = Union[LaRefutedCube, LeafClosed, Tick]


@dataclass(frozen=True)
class PredictorState:
    budget: float = DEFAULT_CONFIG.predictor_budget
    discrepancy_limit: int = DEFAULT_CONFIG.predictor_discrepancy_limit
    min_la_wins: int = DEFAULT_CONFIG.predictor_min_la_wins
    la_wins: int = 0
    max_leaf_discrepancies: int = 0
    used: float = 0.0
    verdict: Verdict = Verdict.UNDECIDED
    reason: AbortReason = field(default=None)

    @classmethod
    def from_config(cls, config: HeuristicConfig, wall_clock: bool = False) -> "PredictorState":
        budget = config.predictor_budget_seconds if wall_clock else config.predictor_budget
        return cls(budget=budget, discrepancy_limit=config.predictor_discrepancy_limit,
                   min_la_wins=config.predictor_min_la_wins)


def predictor_observe(state: PredictorState, event: PredictorEvent) -> PredictorState:
    """Advance the predictor by one lookahead-side event.

    Once a verdict is reached it never changes; later events are ignored.
    """
    if state.verdict is not Verdict.UNDECIDED:
        return state
    if isinstance(event, LaRefutedCube):
        return replace(state, la_wins=state.la_wins + 1)
    if isinstance(event, LeafClosed):
        state = replace(state, max_leaf_discrepancies=max(state.max_leaf_discrepancies, event.discrepancies))
        if event.discrepancies > state.discrepancy_limit:
            return replace(state, verdict=Verdict.ABORT_TO_CDCL, reason=AbortReason.DISCREPANCY_LIMIT)
        return state
    if isinstance(event, Tick):
        state = replace(state, used=event.used)
        if event.used >= state.budget:
            if state.la_wins <= state.min_la_wins:
                return replace(state, verdict=Verdict.ABORT_TO_CDCL, reason=AbortReason.CDCL_DOMINATES)
            return replace(state, verdict=Verdict.CONTINUE)
        return state
    raise TypeError(f"unknown predictor event {event!r}")

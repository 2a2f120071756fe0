"""Command-line driver.

Prints SAT-competition style output (``s``/``v``/``c`` lines) and exits with
10 (SAT), 20 (UNSAT), 0 (unknown or cubes only) or 1 (usage error).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from . import heuristics as H
from .cdcl import Solver, Status
from .conquer import EmptyCubeList, IcnfDocument, MalformedIcnf, conquer_parallel, conquer_serial, parse_icnf, write_icnf
from .formula import CnfFormula, DimacsError, parse_dimacs
from .lookahead import CubePhaseOutput, LaStatus, Mode, Refuter, la_search
from .protocol import Answer, CccConfig, ConfigError, parse_schedule, run_ccc
from .verify import check_model

MODES = ("cdcl", "lookahead", "ccc-inf", "cube", "conquer", "auto")
SATISFIABLE = "SATISFIABLE"
UNSATISFIABLE = "UNSATISFIABLE"
UNKNOWN = "UNKNOWN"
ABORTED_TO_CDCL = "ABORTED-TO-CDCL"
EXIT_CODES = {SATISFIABLE: 10, UNSATISFIABLE: 20, UNKNOWN: 0, ABORTED_TO_CDCL: 0}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str
    input: str
    icnf_out: Optional[str] = None
    seed: int = 0
    scheduler: str = "deterministic"
    schedule: Optional[List[str]] = None
    cutoff: str = "ccc"
    workers: int = 1
    heuristics: H.HeuristicConfig = H.DEFAULT_CONFIG
    stats_out: Optional[str] = None
    trace_out: Optional[str] = None
    plot_out: Optional[str] = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.mode == "cube" and not self.icnf_out:
            raise UsageError("cube mode needs --icnf-out")
        if self.icnf_out and self.mode != "cube":
            raise UsageError("--icnf-out only applies to cube mode")
        if self.cutoff not in ("ccc", "cc"):
            raise UsageError(f"unknown cutoff {self.cutoff!r}")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.scheduler not in ("deterministic", "threads"):
            raise UsageError(f"unknown scheduler {self.scheduler!r}")
        uses_protocol = self.mode in ("ccc-inf", "auto") or (self.mode == "cube" and self.cutoff == "ccc")
        if self.schedule is not None:
            if not uses_protocol:
                raise UsageError("--schedule only applies to modes that run both peers")
            if self.scheduler != "deterministic":
                raise UsageError("--schedule needs the deterministic scheduler")


@dataclass
class RunReport:
    answer: str
    model: Optional[Dict[int, bool]] = None
    aborted_to_cdcl: bool = False
    stats: Dict[str, object] = field(default_factory=dict)
    trace: List[str] = field(default_factory=list)
    icnf: Optional[bytes] = None
    wall_seconds: float = 0.0

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.answer]

    def stats_text(self) -> str:
        """Flat ``key=value`` document; excludes wall time so reruns compare equal."""
        return "".join(f"{k}={v}\n" for k, v in self.stats.items())

    def output_lines(self) -> List[str]:
        lines = []
        if self.aborted_to_cdcl:
            lines.append(f"c {ABORTED_TO_CDCL} {self.stats.get('predictor_reason', '')}".rstrip())
        for k, v in self.stats.items():
            lines.append(f"c {k}={v}")
        lines.append(f"s {self.answer}")
        if self.model is not None:
            lits = [v if self.model[v] else -v for v in sorted(self.model)]
            for i in range(0, len(lits), 10):
                lines.append("v " + " ".join(map(str, lits[i:i + 10])))
            lines.append("v 0")
        return lines


def _cube_stats(stats: Dict[str, object], out: CubePhaseOutput) -> None:
    stats["cubes_emitted"] = len(out.emitted)
    stats["cubes_refuted_la"] = out.count(Refuter.LOOKAHEAD)
    stats["cubes_refuted_cdcl"] = out.count(Refuter.CDCL)
    stats["leaves"] = len(out.leaves)
    for k, v in out.discrepancy_histogram().items():
        stats[f"disc_hist_{k}"] = v


def _ccc_config(cfg: RunConfig, mode: Mode, predictor: bool) -> CccConfig:
    return CccConfig(mode=mode, scheduler=cfg.scheduler, schedule=cfg.schedule,
                     predictor=predictor, heuristics=cfg.heuristics, seed=cfg.seed)


def _answer_of(status_sat: Optional[bool]) -> str:
    if status_sat is None:
        return UNKNOWN
    return SATISFIABLE if status_sat else UNSATISFIABLE


def _run_cdcl(f: CnfFormula, seed: int, stats: Dict[str, object]):
    solver = Solver(f, seed=seed)
    r = solver.solve()
    stats.update(cdcl_conflicts=solver.conflicts, cdcl_decisions=solver.decisions,
                 cdcl_propagations=solver.propagations, cdcl_restarts=solver.restarts)
    return r.status is Status.SAT, r.model


def _run_protocol(f: CnfFormula, cfg: RunConfig, mode: Mode, predictor: bool, report: RunReport):
    out = run_ccc(f, _ccc_config(cfg, mode, predictor))
    report.trace = out.trace
    s = report.stats
    s["winner"] = out.winner.value if out.winner else "none"
    _cube_stats(s, out.cubes)
    s["la_steps"] = out.steps.get("LA", 0)
    s["cdcl_steps"] = out.steps.get("CDCL", 0)
    s["la_propagations"] = out.la_propagations
    s["cdcl_conflicts"] = out.cdcl_conflicts
    if out.predictor is not None:
        s["predictor_verdict"] = out.predictor.verdict.name
        s["predictor_reason"] = out.predictor.reason.value if out.predictor.reason else "none"
        s["predictor_la_wins"] = out.predictor.la_wins
        s["predictor_max_discrepancies"] = out.predictor.max_leaf_discrepancies
    return out


def _cube_document(f: CnfFormula, emitted: Sequence[tuple]) -> IcnfDocument:
    # with nothing emitted the root itself is the only cube left to conquer
    return IcnfDocument(f, tuple(emitted) if emitted else ((),))


def execute(cfg: RunConfig, data: bytes) -> RunReport:
    """Run one configured job on the raw input bytes (DIMACS, or iCNF in conquer mode)."""
    cfg.validate()
    start = time.monotonic()
    report = RunReport(UNKNOWN)
    s = report.stats
    s["mode"] = cfg.mode

    if cfg.mode == "conquer":
        doc = parse_icnf(data)
        f = doc.formula
        res = conquer_serial(doc) if cfg.workers == 1 else conquer_parallel(doc, cfg.workers)
        s["cubes"] = len(doc.cubes)
        s["cubes_attempted"] = len(res.per_cube)
        s["winning_cube"] = res.winning_cube_index if res.winning_cube_index else "none"
        s["cdcl_conflicts"] = sum(c.conflicts for c in res.per_cube)
        sat: Optional[bool] = res.sat
        model = res.model
        if not res.sat and any(c.status is Status.BUDGET_EXHAUSTED for c in res.per_cube):
            sat = None
    else:
        f = parse_dimacs(data)
        s["vars"] = f.num_vars
        s["clauses"] = f.num_clauses
        sat, model = None, None
        if cfg.mode == "cdcl":
            sat, model = _run_cdcl(f, cfg.seed, s)
        elif cfg.mode == "lookahead":
            eng = la_search(f, Mode.PURE, cfg.heuristics)
            _cube_stats(s, eng.output)
            s["la_propagations"] = eng.propagations
            sat, model = eng.status is LaStatus.SAT, eng.model
        elif cfg.mode == "ccc-inf":
            out = _run_protocol(f, cfg, Mode.CCC_INF, False, report)
            sat, model = out.answer is Answer.SAT, out.model
        elif cfg.mode == "auto":
            out = _run_protocol(f, cfg, Mode.CCC_INF, True, report)
            if out.answer is Answer.ABORTED:
                report.aborted_to_cdcl = True
                sat, model = _run_cdcl(f, cfg.seed, s)
            else:
                sat, model = out.answer is Answer.SAT, out.model
        else:  # cube
            if cfg.cutoff == "cc":
                eng = la_search(f, Mode.CC_CUTOFF, cfg.heuristics)
                _cube_stats(s, eng.output)
                s["la_propagations"] = eng.propagations
                emitted = eng.output.emitted
                if eng.status is LaStatus.SAT:
                    sat, model = True, eng.model
                elif not emitted:
                    sat = False
            else:
                out = _run_protocol(f, cfg, Mode.CCC_CUTOFF, False, report)
                emitted = out.cubes.emitted
                if out.answer is Answer.SAT:
                    sat, model = True, out.model
                elif out.answer is Answer.UNSAT:
                    sat = False
            report.icnf = write_icnf(_cube_document(f, emitted))

    if model is not None and not check_model(f, model):
        raise AssertionError("model failed verification")
    report.answer = _answer_of(sat)
    report.model = model if sat else None
    s["answer"] = ABORTED_TO_CDCL if report.aborted_to_cdcl and sat is None else report.answer
    report.wall_seconds = time.monotonic() - start
    return report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _field_type(name: str):
    default = getattr(H.DEFAULT_CONFIG, name)
    return int if isinstance(default, int) and not isinstance(default, bool) else float


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccsat", description="Concurrent cube-and-conquer SAT solver.")
    p.add_argument("input", help="DIMACS file (iCNF in conquer mode); '-' reads stdin")
    p.add_argument("--mode", choices=MODES, default="auto")
    p.add_argument("--cutoff", choices=("ccc", "cc"), default="ccc",
                   help="cutoff heuristic for cube mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheduler", choices=("deterministic", "threads"), default="deterministic")
    p.add_argument("--schedule", metavar="FILE", help="step script for the deterministic scheduler")
    p.add_argument("--workers", type=int, default=1, help="conquer workers")
    p.add_argument("--budget-propagations", type=float,
                   help="predictor budget in lookahead propagations (deterministic scheduler)")
    p.add_argument("--budget-seconds", type=float,
                   help="predictor budget in seconds (threaded scheduler)")
    p.add_argument("--icnf-out", metavar="FILE")
    p.add_argument("--stats-out", metavar="FILE", help="write key=value statistics")
    p.add_argument("--trace-out", metavar="FILE", help="write the protocol event trace")
    p.add_argument("--plot-out", metavar="PREFIX", help="render report figures to PREFIX_*.png")
    for key, name in H.CONFIG_KEYS.items():
        p.add_argument(f"--{key}", dest=f"h_{name}", type=_field_type(name), metavar="X")
    return p


def config_from_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    overrides = {name: getattr(ns, f"h_{name}") for name in H.CONFIG_KEYS.values()
                 if getattr(ns, f"h_{name}") is not None}
    if ns.budget_propagations is not None:
        overrides["predictor_budget"] = ns.budget_propagations
    if ns.budget_seconds is not None:
        overrides["predictor_budget_seconds"] = ns.budget_seconds
    schedule = None
    if ns.schedule:
        try:
            with open(ns.schedule) as fh:
                schedule = parse_schedule(fh.read())
        except OSError as e:
            raise UsageError(f"cannot read schedule: {e}") from None
    cfg = RunConfig(mode=ns.mode, input=ns.input, icnf_out=ns.icnf_out, seed=ns.seed,
                    scheduler=ns.scheduler, schedule=schedule, cutoff=ns.cutoff,
                    workers=ns.workers, heuristics=dataclasses.replace(H.DEFAULT_CONFIG, **overrides),
                    stats_out=ns.stats_out, trace_out=ns.trace_out, plot_out=ns.plot_out)
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = config_from_args(argv)
        if cfg.input == "-":
            data = sys.stdin.buffer.read()
        else:
            with open(cfg.input, "rb") as fh:
                data = fh.read()
        report = execute(cfg, data)
    except (UsageError, ConfigError, DimacsError, MalformedIcnf, EmptyCubeList, OSError) as e:
        print(f"c error: {e}", file=sys.stderr)
        return 1

    if report.icnf is not None:
        with open(cfg.icnf_out, "wb") as fh:
            fh.write(report.icnf)
    if cfg.stats_out:
        with open(cfg.stats_out, "w") as fh:
            fh.write(report.stats_text())
    if cfg.trace_out:
        with open(cfg.trace_out, "w") as fh:
            fh.write("".join(line + "\n" for line in report.trace))
    if cfg.plot_out:
        from .report import render_figures
        for path in render_figures(report.stats, cfg.plot_out):
            print(f"c figure {path}")
    print(f"c wall_seconds={report.wall_seconds:.3f}")
    for line in report.output_lines():
        print(line)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())

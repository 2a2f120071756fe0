"""Acceptance gate: one test per criterion, summarised as PASS/FAIL lines at the end of the run."""
import dataclasses
import random
import time

import pytest

from ccsat import heuristics as H
from ccsat.cdcl import Solver, Status
from ccsat.cli import RunConfig, execute
from ccsat.conquer import IcnfDocument, conquer_parallel, conquer_serial, parse_icnf, write_icnf
from ccsat.formula import CnfFormula, dnf_is_tautology, serialize_dimacs
from ccsat.lookahead import LaStatus, Mode, la_search
from ccsat.protocol import Answer, CccConfig, CccRun, parse_schedule, run_ccc
from ccsat.verify import brute_force_solve, check_model, check_tree_cover, random_3sat

from scenarios import (
    contradicting_parities, full_split, guarded_cores, instance_suite, pigeonhole, replay_trace,
    unsat_instances,
)
from test_protocol import GOLDEN

# cube phases on instances this small only cut with a tiny threshold
PIPELINE_CONFIG = dataclasses.replace(H.DEFAULT_CONFIG, ccc_init_threshold=1, cc_init_threshold=1)


def _verdict(answer, model, f, problems, label):
    if model is not None and not check_model(f, model):
        problems.append(f"{label}: bad model")
    return answer


def _pipeline(f, cutoff):
    """Cube phase then serial conquer.  Returns (sat or None, model, conquered cube count)."""
    if cutoff == "ccc":
        out = run_ccc(f, CccConfig(mode=Mode.CCC_CUTOFF, heuristics=PIPELINE_CONFIG))
        if out.answer is Answer.SAT:
            return True, out.model, 0
        if out.answer is Answer.UNSAT:
            return False, None, 0
        cubes = out.cubes.emitted
    else:
        eng = la_search(f, Mode.CC_CUTOFF, PIPELINE_CONFIG)
        if eng.status is LaStatus.SAT:
            return True, eng.model, 0
        cubes = eng.output.emitted
        if not cubes:
            return False, None, 0
    doc = parse_icnf(write_icnf(IcnfDocument(f, tuple(cubes))))
    res = conquer_serial(doc)
    return res.sat, res.model, len(cubes)


@pytest.mark.criterion("oracle-equivalence")
def test_oracle_equivalence(record_property):
    start = time.monotonic()
    instances = instance_suite(510)
    problems = []
    conquered = 0
    for i, f in enumerate(instances):
        truth = brute_force_solve(f).sat
        got = {}
        r = Solver(f).solve()
        got["cdcl"] = _verdict(r.status is Status.SAT, r.model, f, problems, "cdcl")
        eng = la_search(f)
        got["lookahead"] = _verdict(eng.status is LaStatus.SAT, eng.model, f, problems, "lookahead")
        out = run_ccc(f)
        got["ccc-inf"] = _verdict(out.answer is Answer.SAT, out.model, f, problems, "ccc-inf")
        sat, model, n = _pipeline(f, "ccc" if i % 2 else "cc")
        conquered += n > 0
        got["cube+conquer"] = _verdict(sat, model, f, problems, "cube+conquer")
        rep = execute(RunConfig(mode="auto", input="-"), serialize_dimacs(f).encode())
        got["auto"] = _verdict(rep.answer == "SATISFIABLE", rep.model, f, problems, "auto")
        for mode, sat in got.items():
            if sat != truth:
                problems.append(f"instance {i} {mode}: {sat} vs oracle {truth}")
    elapsed = time.monotonic() - start
    record_property("detail", f"{len(instances)} instances x 5 modes, {len(problems)} disagreements, "
                              f"{conquered} conquered via cubes, {elapsed:.1f}s")
    assert problems == []
    assert elapsed < 120


@pytest.mark.criterion("replay-golden-trace")
def test_replay_golden(record_property):
    got = "".join(line + "\n" for line in replay_trace())
    lines = got.splitlines()
    order = ["CDCL send solved c3", "LA close c6 ", "LA close c7 ", "LA close c5 ", "LA close c3 ",
             "LA send decision c8 lit=3 level=1"]
    idx = [next((i for i, l in enumerate(lines) if key in l), -1) for key in order]
    record_property("detail", f"{len(lines)} events, key events at {idx}")
    assert got == GOLDEN.read_text()
    assert -1 not in idx and idx == sorted(idx)


@pytest.mark.criterion("heuristic-arithmetic")
def test_heuristic_arithmetic(record_property):
    checks = [
        (H.difficulty(10, 90, 1000), 10.0),
        (H.cc_update(1000, H.CcEvent.LA_SOLVED_CUBE), 700),
        (H.cc_update(1000, H.CcEvent.DECISION), 1050),
        (H.ccc_update(100, 50, H.Solver.LOOKAHEAD), 120),
        (H.ccc_update(100, 50, H.Solver.CDCL), 68),
    ]
    worst = max(abs(a - b) for a, b in checks)
    record_property("detail", f"max abs error {worst:.1e}")
    assert worst <= 1e-9


def _auto(f, **overrides):
    cfg = RunConfig(mode="auto", input="-", heuristics=dataclasses.replace(H.DEFAULT_CONFIG, **overrides))
    return execute(cfg, serialize_dimacs(f).encode())


@pytest.mark.criterion("predictor-boundaries")
def test_predictor_boundaries(record_property):
    def wins(k):
        s = H.PredictorState(budget=1)
        for _ in range(k):
            s = H.predictor_observe(s, H.LaRefutedCube())
        return H.predictor_observe(s, H.Tick(1))

    deep = H.predictor_observe(H.PredictorState(), H.LeafClosed(21))
    assert deep.verdict is H.Verdict.ABORT_TO_CDCL
    assert wins(10).verdict is H.Verdict.ABORT_TO_CDCL
    assert wins(11).verdict is H.Verdict.CONTINUE

    dominated = _auto(guarded_cores(6), predictor_budget=3000)
    assert dominated.aborted_to_cdcl and dominated.stats["predictor_reason"] == "PredictorCdclDominates"
    assert dominated.answer == "SATISFIABLE" and check_model(guarded_cores(6), dominated.model)

    parity = _auto(contradicting_parities(24))
    assert parity.aborted_to_cdcl and parity.stats["predictor_reason"] == "PredictorDiscrepancyLimit"
    assert parity.answer == "UNSATISFIABLE"

    cont = _auto(pigeonhole(6, 5), predictor_budget=5000)
    assert not cont.aborted_to_cdcl and cont.stats["predictor_verdict"] == "CONTINUE"
    assert cont.answer == "UNSATISFIABLE"
    record_property("detail", "unit boundaries ok; auto runs: cdcl-dominates, discrepancy-limit, continue")


@pytest.mark.criterion("cube-cover")
def test_cube_cover(record_property):
    runs = nontrivial = 0
    failures = []
    seed = 0
    while runs < 240:
        n = 10 + seed % 7
        f = random_3sat(n, round(n * (4.26, 5.0, 5.5)[seed % 3]), 7000 + seed)
        kind = seed % 4
        if kind == 0:
            out = run_ccc(f, CccConfig(mode=Mode.CCC_CUTOFF, heuristics=PIPELINE_CONFIG))
            done = out.answer in (Answer.CUBES, Answer.UNSAT) and out.winner is not None
            done = done and out.winner.value == "LA"
            cubes = out.cubes
        else:
            mode = (Mode.CC_CUTOFF, Mode.PURE, Mode.CCC_INF)[kind - 1]
            eng = la_search(f, mode, PIPELINE_CONFIG)
            done = eng.status is LaStatus.EXHAUSTED
            cubes = eng.output
        seed += 1
        if not done:
            continue  # a model ended the phase early; there is no finished tree to check
        runs += 1
        leaves = cubes.emitted + cubes.refuted
        nontrivial += len(leaves) > 1
        if not (check_tree_cover(cubes.emitted, cubes.refuted) and dnf_is_tautology(leaves, n)):
            failures.append(seed - 1)
    record_property("detail", f"{runs} finished cube phases ({nontrivial} with >1 leaf), "
                              f"{len(failures)} failures")
    assert runs >= 200 and failures == []


@pytest.mark.criterion("icnf-round-trip")
def test_icnf_round_trip(record_property):
    rng = random.Random(2024)
    bad = 0
    for _ in range(100):
        n = rng.randint(3, 30)
        f = random_3sat(n, rng.randint(1, 5 * n), rng.randrange(10**9))
        top = max(abs(l) for c in f.clauses for l in c)
        f = CnfFormula(top, f.clauses)
        cubes = tuple(
            tuple(v if rng.random() < 0.5 else -v for v in rng.sample(range(1, top + 1), rng.randint(0, min(6, top))))
            for _ in range(rng.randint(0, 12)))
        doc = IcnfDocument(f, cubes)
        data = write_icnf(doc)
        back = parse_icnf(data)
        bad += not (back == doc and write_icnf(back) == data)
    record_property("detail", f"100 documents, {bad} mismatches")
    assert bad == 0


@pytest.mark.criterion("multijob-uniqueness")
def test_multijob(record_property):
    rng = random.Random(11)
    bad = []
    for i, f in enumerate(unsat_instances(50, 16)):
        split = sorted(rng.sample(range(1, 17), rng.randint(2, 4)))
        doc = IcnfDocument(f, full_split(split))
        serial = conquer_serial(doc)
        for k in (2, 4):
            res = conquer_parallel(doc, k)
            claimed = sorted(c for ids in res.claims_by_worker().values() for c in ids)
            if claimed != list(range(1, len(doc.cubes) + 1)) or res.sat != serial.sat:
                bad.append((i, k))
    record_property("detail", f"50 UNSAT documents x k in {{2,4}}, {len(bad)} violations")
    assert bad == []


@pytest.mark.criterion("cdcl-soundness")
def test_cdcl_soundness(record_property):
    rng = random.Random(5)
    unsound = violations = restarts = sampled = 0
    for i, f in enumerate(instance_suite(100, 8, 16, base_seed=3000)):
        s = Solver(f, record_learned=True, restart_unit=3)
        s.solve()
        log = s.learned_log
        for c in rng.sample(log, min(5, len(log))):
            sampled += 1
            unsound += brute_force_solve(f.with_clauses([(-l,) for l in c])).sat
        restarts += s.restarts
        violations += s.restart_floor_violations
        # the same instance in the concurrent loop, where restarts keep the cube levels
        run = CccRun(f, CccConfig(seed=i))
        run.cdcl.restart_unit = 2
        run.run_schedule(parse_schedule("LA CDCL*3") * 10_000)
        restarts += run.cdcl.restarts
        violations += run.cdcl.restart_floor_violations
    record_property("detail", f"{sampled} learned clauses checked, {unsound} unsound; "
                              f"{restarts} restarts, {violations} floor violations")
    assert unsound == 0 and violations == 0 and sampled > 0 and restarts > 0


@pytest.mark.criterion("determinism")
def test_determinism(record_property):
    pairs = [("LA CDCL", 0), ("LA*3 CDCL", 1), ("CDCL*4 LA*2", 7), ("LA*11 CDCL*20 LA*3", 3)]
    instances = [random_3sat(40, 170, 8), random_3sat(60, 256, 9), pigeonhole(5, 4)]
    mismatches = 0
    for text, seed in pairs:
        sched = parse_schedule(text) * 20_000
        for f in instances:
            data = serialize_dimacs(f).encode()
            seen = set()
            for _ in range(3):
                rep = execute(RunConfig(mode="ccc-inf", input="-", schedule=sched, seed=seed), data)
                seen.add(("\n".join(rep.trace), rep.stats_text(), tuple(rep.output_lines())))
            mismatches += len(seen) != 1
    record_property("detail", f"{len(pairs) * len(instances)} (schedule, seed, instance) triples x 3 runs, "
                              f"{mismatches} mismatches")
    assert mismatches == 0

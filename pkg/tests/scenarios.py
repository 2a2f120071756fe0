"""Hand-built instances shared by several test modules."""
from __future__ import annotations

from ccsat.formula import CnfFormula
from ccsat.protocol import CccConfig, CccRun, ScheduleExhausted, parse_schedule
from ccsat.verify import random_3sat

# Scripted replay tree: c1 root, c2 = x2, c3 = -x3, c4 = x7 (refuted
# by lookahead probing), c5 = -x7, c6 = -x4, c7 = x4.  Every clause carries the
# guard (-x2 or x3), so only the cube (x2, -x3) matters; under it the pigeons
# 4 -> holes 3 are an UNSAT core that CDCL finds and lookahead cannot see.
GUARD = (-2, 3)
REPLAY_SCHEDULE = "LA*11 CDCL*20 LA*3"
REPLAY_SCRIPT = {(): 2, (2,): -3, (2, -3): 7, (2, -3, 7): None, (2, -3, -7): -4}


def _pigeon(i: int, j: int) -> int:
    return 8 + (i - 1) * 3 + j


def replay_formula() -> CnfFormula:
    clauses = [GUARD + (-7, -5, 6), GUARD + (-7, -5, -6), GUARD + (-7, 5, 8), GUARD + (-7, 5, -8)]
    for i in range(1, 5):
        clauses.append(GUARD + tuple(_pigeon(i, j) for j in (1, 2, 3)))
    for j in (1, 2, 3):
        for i in range(1, 5):
            for k in range(i + 1, 5):
                clauses.append(GUARD + (-_pigeon(i, j), -_pigeon(k, j)))
    return CnfFormula(20, tuple(clauses))


def replay_hook(engine, dec):
    return REPLAY_SCRIPT.get(tuple(dec))


def replay_run() -> CccRun:
    return CccRun(replay_formula(), CccConfig(decide_hook=replay_hook))


def replay_trace() -> list:
    run = replay_run()
    try:
        run.run_schedule(parse_schedule(REPLAY_SCHEDULE))
    except ScheduleExhausted as e:
        return e.trace
    raise AssertionError("replay schedule was expected to stop mid-search")


def pigeonhole(pigeons: int, holes: int) -> CnfFormula:
    p = lambda i, j: (i - 1) * holes + j
    clauses = [tuple(p(i, j) for j in range(1, holes + 1)) for i in range(1, pigeons + 1)]
    for j in range(1, holes + 1):
        for i in range(1, pigeons + 1):
            for k in range(i + 1, pigeons + 1):
                clauses.append((-p(i, j), -p(k, j)))
    return CnfFormula(pigeons * holes, tuple(clauses))


def parity_chain(n: int, parity: int = 1) -> CnfFormula:
    """x1 xor ... xor xn = parity, Tseitin-encoded with auxiliary sums."""
    clauses = []
    nxt = n + 1
    acc = 1
    for v in range(2, n + 1):
        s = nxt
        nxt += 1
        # s <-> acc xor v
        clauses += [(-s, acc, v), (-s, -acc, -v), (s, -acc, v), (s, acc, -v)]
        acc = s
    clauses.append((acc,) if parity else (-acc,))
    return CnfFormula(nxt - 1, tuple(clauses))


RATIOS = (3.5, 4.26, 5.0)


def instance_suite(count: int, lo: int = 8, hi: int = 20, base_seed: int = 0):
    """Random 3-SAT instances cycling through sizes lo..hi and the three ratios."""
    out = []
    span = hi - lo + 1
    for i in range(count):
        n = lo + i % span
        ratio = RATIOS[(i // span) % len(RATIOS)]
        out.append(random_3sat(n, round(n * ratio), base_seed + i))
    return out


def contradicting_parities(n: int) -> CnfFormula:
    """Two parity chains over x1..xn asking for both parities: UNSAT, and deep for lookahead."""
    even = parity_chain(n, 0)
    odd = parity_chain(n, 1)
    off = even.num_vars - n
    shift = lambda l: l if abs(l) <= n else (abs(l) + off) * (1 if l > 0 else -1)
    clauses = list(even.clauses) + [tuple(shift(l) for l in c) for c in odd.clauses]
    return CnfFormula(even.num_vars + off, tuple(clauses))


def guarded_cores(k: int) -> CnfFormula:
    """k pigeonhole(4,3) cores, each switched off unless (x_g and not x_g+1).

    Satisfiable, but every cube entering a core's guard is refuted by CDCL
    long before lookahead can see the conflict.
    """
    clauses = []
    base = 0
    for _ in range(k):
        guard = (-(base + 1), base + 2)
        p = lambda i, j, b=base: b + 2 + (i - 1) * 3 + j
        for i in range(1, 5):
            clauses.append(guard + tuple(p(i, j) for j in (1, 2, 3)))
        for j in (1, 2, 3):
            for i in range(1, 5):
                for m in range(i + 1, 5):
                    clauses.append(guard + (-p(i, j), -p(m, j)))
        base += 14
    return CnfFormula(base, tuple(clauses))


def full_split(variables) -> tuple:
    """All 2^k cubes over ``variables``, in lexicographic sign order."""
    cubes = [()]
    for v in variables:
        cubes = [c + (l,) for c in cubes for l in (v, -v)]
    return tuple(cubes)


def unsat_instances(count: int, num_vars: int = 16, ratio: float = 5.0, base_seed: int = 0):
    """The first ``count`` oracle-UNSAT random instances from consecutive seeds."""
    from ccsat.verify import brute_force_solve
    out = []
    seed = base_seed
    while len(out) < count:
        f = random_3sat(num_vars, round(num_vars * ratio), seed)
        if not brute_force_solve(f).sat:
            out.append(f)
        seed += 1
    return out

import pytest

from ccsat.cdcl import Status, solve_incremental
from ccsat.formula import CnfFormula, TooManyVariables
from ccsat.verify import PartialModel, brute_force_solve, check_model, check_tree_cover, random_3sat


def test_oracle_examples():
    assert not brute_force_solve(CnfFormula(1, ((1,), (-1,)))).sat
    v = brute_force_solve(CnfFormula(2, ((1, 2),)))
    assert v.sat and v.model == {1: True, 2: False}
    assert v.assignments_enumerated == 4


def test_oracle_cap():
    with pytest.raises(TooManyVariables):
        brute_force_solve(CnfFormula(25, ()))


def test_oracle_first_in_counting_order():
    # satisfying assignments: k = 3 (x1,x2) and k = 7; the smaller one wins
    f = CnfFormula(3, ((1,), (2,)))
    assert brute_force_solve(f).model == {1: True, 2: True, 3: False}


def test_oracle_matches_cdcl():
    for seed in range(20):
        f = random_3sat(12, 52, seed)
        r = solve_incremental(f)
        assert (r.status is Status.SAT) == brute_force_solve(f).sat


def test_check_model():
    f = CnfFormula(2, ((1, 2),))
    assert check_model(f, {1: False, 2: True})
    assert not check_model(CnfFormula(1, ((1,),)), {1: False})
    with pytest.raises(PartialModel):
        check_model(f, {1: True})


def test_tree_cover():
    assert check_tree_cover([(1,)], [(-1,)])
    assert not check_tree_cover([(1, 2)], [(-1,)])
    assert check_tree_cover([], [()])
    assert not check_tree_cover([], [])
    assert not check_tree_cover([(1,), (1,)], [(-1,)])
    assert check_tree_cover([(1, 2), (-1, 3)], [(1, -2), (-1, -3)])
    # overlapping cubes are not a tree even though they cover everything
    assert not check_tree_cover([(1,), (-1,), ()], [])


def test_random_3sat():
    assert random_3sat(10, 42, 1) == random_3sat(10, 42, 1)
    f = random_3sat(3, 1, 5)
    assert f.num_clauses == 1 and len({abs(l) for l in f.clauses[0]}) == 3
    for c in random_3sat(20, 200, 3).clauses:
        assert len({abs(l) for l in c}) == 3


def test_phase_transition_population_is_mixed():
    sat = sum(brute_force_solve(random_3sat(12, 51, s)).sat for s in range(100))
    assert 10 < sat < 90

import random

import pytest

from conftest import assignments
from dpms.add import NEG_INF, AddManager
from dpms.constraints import Formula, card, clause, objective_add, objective_value, xor
from dpms.formula_io import gen_hybrid, random_partition, with_partition
from dpms.oracle import (OracleTooLarge, all_values, brute_max, brute_maxmin, brute_min,
                         brute_minmax)

HYBRID = Formula(2, (clause([1, 2], 2), xor([1, 2], 3), card([1, 2], 2, 1)))


def test_brute_max_examples():
    r = brute_max(Formula(0))
    assert r.value == 0 and r.witnesses == [frozenset()]
    r = brute_max(Formula(1, (clause([1]), clause([-1]))))
    assert r.value == 1 and r.witnesses == [frozenset(), frozenset({1})]
    r = brute_max(HYBRID)
    assert r.value == 5 and r.witnesses == [frozenset({1}), frozenset({2})]


def test_brute_max_hard_excluded():
    f = Formula(2, (clause([1], hard=True), clause([-1], 5), clause([2], 1)))
    r = brute_max(f)
    assert r.value == 1 and r.witnesses == [frozenset({1, 2})]
    g = Formula(1, (clause([1], hard=True), clause([-1], hard=True)))
    assert brute_max(g).value == NEG_INF


def test_minmax_examples():
    f = with_partition(Formula(2, (clause([1, 2]), clause([-1, -2]))), {1})
    assert brute_minmax(f).value == 2
    g = with_partition(Formula(2, (xor([1, 2]),)), {1})
    r = brute_minmax(g)
    assert r.value == 1
    assert r.responses == {frozenset(): frozenset({2}), frozenset({1}): frozenset()}


def test_empty_outer_level():
    f = gen_hybrid(7, 9, 3)
    assert brute_minmax(with_partition(f, set())).value == brute_max(f).value


def test_minsat_via_minmax():
    f = gen_hybrid(7, 9, 5)
    g = with_partition(f, set(f.variables))
    assert brute_minmax(g).value == brute_min(f).value
    assert brute_min(f).value == min(objective_value(f, b) for b in assignments(f.variables))


def test_guards():
    with pytest.raises(OracleTooLarge):
        brute_max(Formula(27))
    with pytest.raises(ValueError):
        brute_minmax(HYBRID)
    with pytest.raises(ValueError):
        brute_maxmin(HYBRID)


def test_all_values_order():
    vals = all_values(HYBRID)
    assert list(vals) == [objective_value(HYBRID, b) for b in (set(), {1}, {2}, {1, 2})]


@pytest.mark.parametrize("seed", range(30))
def test_agrees_with_objective_add(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 10)
    f = gen_hybrid(n, rng.randint(1, 12), seed)
    m = AddManager(f.variables)
    assert objective_add(f, m).max_terminal() == brute_max(f).value
    assert objective_add(f, m).min_terminal() == brute_min(f).value


@pytest.mark.parametrize("seed", range(10))
def test_two_level_by_hand(seed):
    f = random_partition(gen_hybrid(6, 7, seed), seed)
    X, Y = sorted(f.min_vars), sorted(f.max_vars)
    best = {b1: max(objective_value(f, b1 | b2) for b2 in assignments(Y)) for b1 in assignments(X)}
    r = brute_minmax(f)
    assert r.value == min(best.values())
    assert r.branch_values == best
    worst = {b2: min(objective_value(f, b1 | b2) for b1 in assignments(X)) for b2 in assignments(Y)}
    assert brute_maxmin(f).value == max(worst.values())


def test_big_weights_do_not_overflow():
    f = Formula(2, (clause([1], 2 ** 62), clause([2], 2 ** 62 - 5)))
    assert brute_max(f).value == 2 ** 63 - 5

import itertools
import random

import pytest

from dpms.add import MAX, NEG_INF, AddManager
from dpms.bounds import local_search_bound
from dpms.constraints import Formula, card, clause, objective_value, xor
from dpms.executor import (BASIC, COFACTOR, COMPOSE, HARD_UNSAT, MAXMIN, MAXSAT, MINMAX,
                           MINSAT, OPTIMUM, ExecContext, MaximizerTrace, NodeCapExceeded,
                           compute_valuation, compute_valuation_basic, construct_maximizer,
                           evaluate_strategy, plan, prune_floor, resolve_mode, solve)
from dpms.formula_io import gen_chain, gen_hybrid, gen_random, random_partition, with_partition
from dpms.oracle import brute_max, brute_maxmin, brute_min, brute_minmax

HYBRID = Formula(2, (clause([1, 2], 2), xor([1, 2], 3), card([1, 2], 2, 1)))
CONFIGS = list(itertools.product((None, BASIC), (COFACTOR, COMPOSE)))


def _ctx(f, t, **kw):
    m = AddManager(t.elimination_order())
    return ExecContext(m, f, {v: MAX for v in f.variables}, **kw)


def test_leaf_valuation():
    f = Formula(2, (clause([1, 2], 4),))
    t = plan(f)
    ctx = _ctx(f, t)
    a = compute_valuation(t, 0, ctx)
    assert a.evaluate(set()) == 0 and a.evaluate({2}) == 4


def test_root_valuations():
    f = Formula(1, (clause([1]), clause([-1])))
    t = plan(f)
    assert compute_valuation(t, t.root, _ctx(f, t)).value == 1
    t = plan(HYBRID)
    assert compute_valuation(t, t.root, _ctx(HYBRID, t)).value == 5
    members = compute_valuation_basic(t, t.root, _ctx(HYBRID, t))
    m = members[0].manager
    total = m.zero
    for a in members:
        total = m.sum(total, a)
    assert total.value == 5


def test_basic_single_leaf():
    f = Formula(2, (clause([1, 2]),))
    t = plan(f)
    members = compute_valuation_basic(t, 0, _ctx(f, t))
    assert len(members) == 1 and members[0].evaluate({1}) == 1


def test_solve_examples():
    r = solve(Formula(0))
    assert r.optimum == 0 and r.cost == 0 and r.status == OPTIMUM
    r = solve(HYBRID)
    assert r.optimum == 5 and r.cost == 1
    assert r.assignment in ({1}, {2})
    assert objective_value(HYBRID, r.assignment) == 5
    g = with_partition(Formula(2, (clause([1, 2]), clause([-1, -2]))), {1})
    assert solve(g).optimum == 2


def test_maximizer_examples():
    assert solve(Formula(1, (clause([1]),))).assignment == {1}
    r = solve(Formula(1, (clause([1]), clause([-1], 2))))
    assert r.assignment == frozenset() and r.optimum == 2
    trace = MaximizerTrace()
    m = AddManager([1])
    trace.push(1, m.make_terminal(1))
    assert construct_maximizer(trace) == {1}


def test_hard_unsat():
    f = Formula(1, (clause([1], hard=True), clause([-1], hard=True), clause([1], 3)))
    r = solve(f)
    assert r.status == HARD_UNSAT and r.cost is None and r.assignment is None


def test_strategy_examples():
    f = with_partition(Formula(2, (xor([1, 2]),)), {1})
    r = solve(f, mode=MINMAX)
    assert r.optimum == 1
    assert evaluate_strategy(r.trace, set()) == {2}
    assert evaluate_strategy(r.trace, {1}) == frozenset()
    assert evaluate_strategy(r.trace, {1: True}) == frozenset()
    with pytest.raises(ValueError):
        evaluate_strategy(r.trace, {})
    with pytest.raises(ValueError):
        evaluate_strategy(r.trace, {2})


def test_strategy_degenerates_to_maximizer():
    f = gen_hybrid(8, 10, 4)
    g = with_partition(f, set())
    assert solve(g, mode=MINMAX).strategy(set()) == solve(f).assignment


def test_strategy_total_over_max_vars():
    f = random_partition(gen_hybrid(14, 16, 9), 9)
    r = solve(f, mode=MINMAX)
    o = brute_minmax(f)
    X = sorted(f.min_vars)
    assert len(X) <= 12
    for bits in itertools.product((0, 1), repeat=len(X)):
        b1 = frozenset(v for v, b in zip(X, bits) if b)
        b2 = r.strategy(b1)
        assert b2 <= f.max_vars
        assert objective_value(f, b1 | b2) == o.branch_values[b1]


def test_prune_floor():
    assert prune_floor(7, 7) == 0
    assert prune_floor(2, 1) == 1
    with pytest.raises(ValueError):
        prune_floor(3, -1)


def test_trivial_bound_prunes_nothing():
    f = gen_hybrid(10, 12, 5, hard_ratio=0)
    a = solve(f, maximizer=False)
    b = solve(f, maximizer=False, bound=f.total_soft_weight)
    assert a.optimum == b.optimum
    assert a.stats.peak_nodes == b.stats.peak_nodes


def test_two_units_root_floor():
    f = Formula(1, (clause([1]), clause([-1])))
    r = solve(f, bound=1)
    assert r.optimum == 1 and r.assignment is not None


def test_pruning_on_chain():
    f = gen_chain(40, 5, 3)
    u = solve(f, maximizer=False)
    b = local_search_bound(f, budget_ms=None, max_flips=2000, seed=1)
    p = solve(f, bound=b.U)
    assert p.optimum == u.optimum
    assert objective_value(f, p.assignment) == p.optimum
    assert p.stats.peak_nodes <= u.stats.peak_nodes


def test_modes():
    f = gen_hybrid(5, 6, 1)
    assert resolve_mode(f, "auto") == MAXSAT
    g = random_partition(f, 1)
    assert resolve_mode(g, "auto") == MINMAX
    h = random_partition(f, 1, prefix=("max", "min"))
    assert resolve_mode(h, "auto") == MAXMIN
    with pytest.raises(ValueError):
        resolve_mode(f, MINMAX)
    with pytest.raises(ValueError):
        solve(g, mode=MINMAX, executor=BASIC)
    with pytest.raises(ValueError):
        solve(g, mode=MINMAX, bound=3)
    with pytest.raises(ValueError):
        solve(f, executor="fancy")


def test_node_cap():
    with pytest.raises(NodeCapExceeded):
        solve(gen_chain(30, 6, 1), node_cap=20)


def test_invariants_hold_on_chain():
    f = gen_chain(60, 6, 2)
    r = solve(f, check_invariants=True)
    assert r.stats.max_support <= r.stats.width <= 12
    r = solve(f, executor=BASIC, check_invariants=True)
    assert r.stats.max_support <= r.stats.width


@pytest.mark.parametrize("seed", range(40))
def test_oracle_agreement_all_configs(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 12)
    f = gen_hybrid(n, rng.randint(2, n + 4), seed)
    o = brute_max(f).value
    U = local_search_bound(f, budget_ms=None, max_flips=300, seed=seed).U
    for ex, impl in CONFIGS:
        for bound in (None, U):
            r = solve(f, executor=ex or "standard", max_impl=impl, bound=bound,
                      check_invariants=True)
            assert r.optimum == o
            if r.assignment is not None:
                assert objective_value(f, r.assignment) == o
                assert r.assignment in brute_max(f).witnesses


@pytest.mark.parametrize("seed", range(30))
def test_two_level_agreement(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 12)
    f = random_partition(gen_hybrid(n, rng.randint(1, n + 3), seed), seed)
    assert solve(f, mode=MINMAX).optimum == brute_minmax(f).value
    assert solve(f, mode=MAXMIN).optimum == brute_maxmin(f).value
    assert solve(f, mode=MINSAT).optimum == brute_min(f).value


def test_maxmin_outer_choice_is_optimal():
    for seed in range(15):
        f = random_partition(gen_hybrid(8, 8, seed, hard_ratio=0), seed, prefix=("max", "min"))
        r = solve(f)
        assert r.mode == MAXMIN
        y = construct_maximizer(r.trace)
        X = sorted(f.min_vars)
        worst = min(objective_value(f, y | frozenset(v for v, b in zip(X, bits) if b))
                    for bits in itertools.product((0, 1), repeat=len(X)))
        assert worst == r.optimum


def test_basic_matches_standard_per_node():
    f = gen_random(14, 0.7, 0.5, 4, "card", 3)
    t = plan(f)
    m = AddManager(t.elimination_order())
    s = solve(f, tree=t, manager=m, record_valuations=True)
    b = solve(f, tree=t, manager=m, executor=BASIC, record_valuations=True)
    for u, a in s.valuations.items():
        total = m.zero
        for member in b.valuations[u]:
            total = m.sum(total, member)
        assert total == a


def test_minsat_with_hard_constraint_is_neg_inf():
    f = Formula(1, (clause([1], hard=True), clause([1], 2)))
    assert solve(f, mode=MINSAT).optimum == NEG_INF == brute_min(f).value

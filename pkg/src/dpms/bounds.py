"""Cost upper bounds for pruning."""
import random
import time
from dataclasses import dataclass

from .constraints import CARD, CLAUSE, PB, XOR

WALK_PROB = 0.1
RESTART_FACTOR = 50


@dataclass(frozen=True)
class BoundReport:
    U: int
    witness: frozenset = None
    elapsed: float = 0.0
    flips: int = 0


def fallback_bound(f):
    """Total soft weight: every assignment costs at most this much."""
    return BoundReport(f.total_soft_weight)


def _sat(c, s):
    if c.kind == CLAUSE:
        return s >= 1
    if c.kind == XOR:
        return s % 2 == c.parity
    if c.kind == CARD:
        return s >= c.k
    if c.cmp == ">=":
        return s >= c.rhs
    if c.cmp == "<=":
        return s <= c.rhs
    return s == c.rhs


class _Search:
    def __init__(self, f):
        self.f = f
        self.n = f.num_vars
        hard_w = f.total_soft_weight + 1
        self.cons = f.constraints
        self.w = [hard_w if c.hard else c.weight for c in self.cons]
        # occ[v] = [(constraint index, coefficient, positive literal?)]
        self.occ = [[] for _ in range(self.n + 1)]
        for j, c in enumerate(self.cons):
            coefs = c.coefs if c.kind == PB else (1,) * c.arity
            for a, l in zip(coefs, c.lits):
                self.occ[abs(l)].append((j, a, l > 0))

    def reset(self, bits):
        self.bits = bits
        self.s = [0] * len(self.cons)
        for v in range(1, self.n + 1):
            for j, a, pos in self.occ[v]:
                if bits[v] == pos:
                    self.s[j] += a
        self.ok = [_sat(c, s) for c, s in zip(self.cons, self.s)]
        self.penalty = sum(w for w, ok in zip(self.w, self.ok) if not ok)

    def _shift(self, v, j, a, pos):
        # literal currently true loses its coefficient, false gains it
        return -a if self.bits[v] == pos else a

    def gain(self, v):
        g = 0
        for j, a, pos in self.occ[v]:
            now = self.ok[j]
            after = _sat(self.cons[j], self.s[j] + self._shift(v, j, a, pos))
            if now != after:
                g += self.w[j] if after else -self.w[j]
        return g

    def flip(self, v):
        for j, a, pos in self.occ[v]:
            self.s[j] += self._shift(v, j, a, pos)
            ok = _sat(self.cons[j], self.s[j])
            if ok != self.ok[j]:
                self.penalty += -self.w[j] if ok else self.w[j]
                self.ok[j] = ok
        self.bits[v] = not self.bits[v]

    def cost(self):
        """Soft cost, or None when a hard constraint is violated."""
        total = 0
        for c, w, ok in zip(self.cons, self.w, self.ok):
            if not ok:
                if c.hard:
                    return None
                total += w
        return total


def local_search_bound(f, budget_ms=100, seed=0, max_flips=None):
    """Hill climbing with random walk and restarts.

    Stops after `budget_ms` milliseconds or `max_flips` flips, whichever
    comes first.  A run capped only by `max_flips` is deterministic in
    `seed`.  Without a hard-feasible assignment the fallback bound is
    returned with no witness.
    """
    start = time.perf_counter()
    best = fallback_bound(f)
    if not f.constraints:
        return BoundReport(0, frozenset(), 0.0)
    if budget_ms is None and max_flips is None:
        raise ValueError("local search needs a time budget or a flip cap")
    if budget_ms is not None and budget_ms <= 0 and max_flips is None:
        return best
    rng = random.Random(seed)
    deadline = None if budget_ms is None else start + budget_ms / 1000
    search = _Search(f)
    n = f.num_vars
    vars_ = range(1, n + 1)
    best_U, witness = best.U, None
    flips = 0

    def record():
        nonlocal best_U, witness
        c = search.cost()
        if c is not None and (witness is None or c < best_U):
            best_U = c
            witness = frozenset(v for v in vars_ if search.bits[v])

    done = n == 0
    if done:
        search.reset([False])
        record()
    while not done:
        search.reset([False] + [rng.random() < 0.5 for _ in vars_])
        record()
        local_best = search.penalty
        stale = 0
        while stale < RESTART_FACTOR * n:
            if max_flips is not None and flips >= max_flips:
                done = True
                break
            if deadline is not None and flips % 32 == 0 and time.perf_counter() >= deadline:
                done = True
                break
            if witness is not None and best_U == 0:
                done = True
                break
            broken = [j for j, ok in enumerate(search.ok) if not ok and search.cons[j].lits]
            if not broken:
                done = True
                break
            if rng.random() < WALK_PROB:
                c = search.cons[rng.choice(broken)]
                v = abs(rng.choice(c.lits))
            else:
                gains = [(search.gain(v), -v) for v in vars_]
                v = -max(gains)[1]
            search.flip(v)
            flips += 1
            record()
            if search.penalty < local_best:
                local_best = search.penalty
                stale = 0
            else:
                stale += 1
    elapsed = (time.perf_counter() - start) * 1000
    if witness is None:
        return BoundReport(best.U, None, elapsed, flips)
    return BoundReport(best_U, witness, elapsed, flips)

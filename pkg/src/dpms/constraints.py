"""Hybrid constraints, formulas, and their indicator diagrams.

Literals use DIMACS signs: ``3`` is x3, ``-3`` is its negation.
Assignments are sets of true variables or ``{var: bool}`` mappings.
"""
from dataclasses import dataclass, field

from .add import NEG_INF, check_weight, ext_add

CLAUSE = "clause"
XOR = "xor"
CARD = "card"
PB = "pb"
KINDS = (CLAUSE, XOR, CARD, PB)
COMPARATORS = (">=", "<=", "=")

MAX_OBJECTIVE_VARS = 26


@dataclass(frozen=True)
class Constraint:
    """One weighted or hard constraint.

    Field use by kind:

    - CLAUSE: `lits`, true iff some literal holds.
    - XOR: `lits` are positive variables; true iff the number of true
      variables has parity `parity`.
    - CARD: `lits`, true iff at least `k` of them hold.
    - PB: ``sum(coefs[i] * lits[i]) <cmp> rhs`` with literals valued 0/1.

    Hard constraints carry weight 0.
    """

    kind: str
    lits: tuple
    weight: int = 1
    hard: bool = False
    k: int = 0
    parity: int = 1
    coefs: tuple = ()
    cmp: str = ">="
    rhs: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if any(not isinstance(l, int) or l == 0 for l in self.lits):
            raise ValueError(f"bad literal in {self.lits!r}")
        vs = [abs(l) for l in self.lits]
        if len(set(vs)) != len(vs):
            raise ValueError(f"repeated variable in constraint {self.lits!r}")
        if self.hard:
            if self.weight != 0:
                raise ValueError("hard constraints carry no weight")
        else:
            if self.weight <= 0:
                raise ValueError(f"soft weight must be positive, got {self.weight}")
            check_weight(self.weight)
        if self.kind == XOR:
            if any(l < 0 for l in self.lits):
                raise ValueError("XOR constraints list positive variables; fold signs into parity")
            if self.parity not in (0, 1):
                raise ValueError("XOR parity must be 0 or 1")
        if self.kind == CARD and not 0 <= self.k <= len(self.lits) + 1:
            raise ValueError(f"cardinality bound {self.k} out of range")
        if self.kind == PB:
            if len(self.coefs) != len(self.lits):
                raise ValueError("PB needs one coefficient per literal")
            if self.cmp not in COMPARATORS:
                raise ValueError(f"unknown comparator {self.cmp!r}")

    @property
    def variables(self):
        return tuple(abs(l) for l in self.lits)

    @property
    def arity(self):
        return len(self.lits)


def clause(lits, weight=1, hard=False):
    return Constraint(CLAUSE, tuple(lits), 0 if hard else weight, hard)


def xor(lits, weight=1, hard=False, parity=1):
    """XOR over `lits`; negative literals flip the required parity."""
    lits = tuple(lits)
    flips = sum(1 for l in lits if l < 0)
    return Constraint(XOR, tuple(abs(l) for l in lits), 0 if hard else weight, hard,
                      parity=(parity + flips) % 2)


def card(lits, k, weight=1, hard=False):
    """At least `k` of `lits`; out-of-range `k` becomes trivially true/false."""
    lits = tuple(lits)
    k = min(max(k, 0), len(lits) + 1)
    return Constraint(CARD, lits, 0 if hard else weight, hard, k=k)


def pb(terms, rhs, cmp=">=", weight=1, hard=False):
    """Pseudo-Boolean constraint from ``(coef, lit)`` pairs.

    ``<=`` is stored as ``>=`` over negated coefficients.
    """
    terms = tuple(terms)
    if cmp == "<=":
        terms = tuple((-a, l) for a, l in terms)
        rhs, cmp = -rhs, ">="
    return Constraint(PB, tuple(l for _, l in terms), 0 if hard else weight, hard,
                      coefs=tuple(c for c, _ in terms), cmp=cmp, rhs=rhs)


@dataclass(frozen=True)
class Formula:
    """Conjunction of constraints over variables ``1..num_vars``.

    `min_vars`/`max_vars` hold the quantifier partition of a two-level
    problem; `prefix` records the block order as read from the file,
    e.g. ``("min", "max")`` for min-max.  `scale` is the factor applied to
    decimal weights at parse time.
    """

    num_vars: int
    constraints: tuple = ()
    min_vars: frozenset = None
    max_vars: frozenset = None
    prefix: tuple = None
    scale: int = 1
    total_soft_weight: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.num_vars < 0:
            raise ValueError("negative variable count")
        for i, c in enumerate(self.constraints):
            for v in c.variables:
                if not 1 <= v <= self.num_vars:
                    raise ValueError(f"constraint {i} uses x{v} outside 1..{self.num_vars}")
        if (self.min_vars is None) != (self.max_vars is None):
            raise ValueError("partition needs both min_vars and max_vars")
        if self.min_vars is not None:
            object.__setattr__(self, "min_vars", frozenset(self.min_vars))
            object.__setattr__(self, "max_vars", frozenset(self.max_vars))
            if self.min_vars & self.max_vars:
                raise ValueError("min and max variables overlap")
            if self.min_vars | self.max_vars != frozenset(range(1, self.num_vars + 1)):
                raise ValueError("min and max variables must cover 1..n")
            if self.prefix is None:
                object.__setattr__(self, "prefix", ("min", "max"))
        total = 0
        for c in self.constraints:
            if not c.hard:
                total = ext_add(total, c.weight)
        object.__setattr__(self, "total_soft_weight", total)

    @property
    def has_partition(self):
        return self.min_vars is not None

    @property
    def variables(self):
        return range(1, self.num_vars + 1)


def lit_value(lit, assignment):
    v = abs(lit)
    if hasattr(assignment, "keys"):
        try:
            bit = bool(assignment[v])
        except KeyError:
            raise KeyError(f"x{v} is unassigned") from None
    else:
        bit = v in assignment
    return bit if lit > 0 else not bit


def satisfies(c, assignment):
    """Truth of constraint `c` under `assignment`."""
    vals = [lit_value(l, assignment) for l in c.lits]
    if c.kind == CLAUSE:
        return any(vals)
    if c.kind == XOR:
        return sum(vals) % 2 == c.parity
    if c.kind == CARD:
        return sum(vals) >= c.k
    s = sum(a for a, t in zip(c.coefs, vals) if t)
    if c.cmp == ">=":
        return s >= c.rhs
    if c.cmp == "<=":
        return s <= c.rhs
    return s == c.rhs


def indicator(c, assignment):
    """Weight if satisfied, 0 (soft) or NEG_INF (hard) if violated."""
    if satisfies(c, assignment):
        return 0 if c.hard else c.weight
    return NEG_INF if c.hard else 0


def objective_value(f, assignment):
    """Total satisfied soft weight, NEG_INF if a hard constraint fails."""
    total = 0
    for c in f.constraints:
        total = ext_add(total, indicator(c, assignment))
    return total


def soft_cost(f, assignment):
    """Weight of violated soft constraints (ignores hard ones)."""
    return sum(c.weight for c in f.constraints if not c.hard and not satisfies(c, assignment))


# -- compilation -------------------------------------------------------------

def _outcomes(c, m):
    if c.hard:
        return m._term(0), m._neg_inf
    return m._term(c.weight), m._zero


def node_bound(c):
    """Node-count ceiling for the compiled indicator of `c`."""
    l = c.arity
    if c.kind in (CLAUSE, XOR):
        return 2 * l + 2
    if c.kind == CARD:
        return l * (c.k + 1) + 2
    return l * (sum(abs(a) for a in c.coefs) + 1) + 2


def compile_add(c, m):
    """Indicator diagram of `c` in manager `m`, built level by level."""
    for v in c.variables:
        if v not in m:
            raise ValueError(f"x{v} is not in the manager order")
    sat, unsat = _outcomes(c, m)
    # position order: top of the diagram first
    idx = sorted(range(c.arity), key=lambda i: m.level(abs(c.lits[i])))
    lits = [c.lits[i] for i in idx]
    levels = [m.level(abs(l)) for l in lits]
    mk = m._mk

    if c.kind == CLAUSE:
        r = unsat
        for lit, lv in zip(reversed(lits), reversed(levels)):
            r = mk(lv, r, sat) if lit > 0 else mk(lv, sat, r)
    elif c.kind == XOR:
        # state = parity of the true variables seen so far
        nxt = [sat if c.parity == 0 else unsat, sat if c.parity == 1 else unsat]
        for lv in reversed(levels):
            nxt = [mk(lv, nxt[0], nxt[1]), mk(lv, nxt[1], nxt[0])]
        r = nxt[0]
    elif c.kind == CARD:
        k = c.k
        # state = number of true literals so far, saturated at k
        nxt = [sat if s >= k else unsat for s in range(k + 1)]
        for lit, lv in zip(reversed(lits), reversed(levels)):
            up = [nxt[min(s + 1, k)] for s in range(k + 1)]
            nxt = [mk(lv, nxt[s], up[s]) if lit > 0 else mk(lv, up[s], nxt[s])
                   for s in range(k + 1)]
        r = nxt[0]
    else:
        r = _compile_pb(c, idx, lits, levels, sat, unsat, mk)
    a = m._wrap(r)
    assert m.node_count(a) <= node_bound(c), "indicator exceeds its size ceiling"
    return a


def _compile_pb(c, idx, lits, levels, sat, unsat, mk):
    coefs = [c.coefs[i] for i in idx]
    l = len(lits)
    # remaining-contribution range after position i
    lo_rest = [0] * (l + 1)
    hi_rest = [0] * (l + 1)
    for i in range(l - 1, -1, -1):
        lo_rest[i] = lo_rest[i + 1] + min(coefs[i], 0)
        hi_rest[i] = hi_rest[i + 1] + max(coefs[i], 0)
    cmp, rhs = c.cmp, c.rhs

    def decided(i, s):
        lo, hi = s + lo_rest[i], s + hi_rest[i]
        if cmp == ">=":
            if lo >= rhs:
                return sat
            if hi < rhs:
                return unsat
        elif cmp == "<=":
            if hi <= rhs:
                return sat
            if lo > rhs:
                return unsat
        else:
            if lo == hi:
                return sat if lo == rhs else unsat
            if rhs < lo or rhs > hi:
                return unsat
        return None

    # reachable running sums per level, then bottom-up construction
    layers = [{0}]
    for i in range(l):
        layers.append({s + d for s in layers[i] for d in (0, coefs[i])})
    below = {}
    for i in range(l, -1, -1):
        here = {}
        for s in layers[i]:
            r = decided(i, s)
            if r is None:
                a = coefs[i]
                on = below[s + a]
                off = below[s]
                r = mk(levels[i], off, on) if lits[i] > 0 else mk(levels[i], on, off)
            here[s] = r
        below = here
    return below[0]


def objective_add(f, m):
    """Monolithic sum of every indicator; small formulas only."""
    used = {v for c in f.constraints for v in c.variables}
    if len(used) > MAX_OBJECTIVE_VARS:
        raise ValueError(f"objective over {len(used)} variables is too large to build")
    total = m.zero
    for c in f.constraints:
        total = m.sum(total, compile_add(c, m))
    return total

"""Execution of project-join trees on decision diagrams.

`solve` plans, evaluates the root valuation, and rebuilds an optimal
assignment (MaxSAT) or a response strategy (min-max) from the recorded
trace of argmax diagrams.
"""
import logging
import time
from dataclasses import dataclass, field

from .add import MAX, MIN, NEG_INF, AddError, AddManager
from .constraints import compile_add
from .planner import build_graded_tree, build_tree, soft_weight_below

logger = logging.getLogger(__name__)

MAXSAT = "maxsat"
MINSAT = "minsat"
MINMAX = "minmax"
MAXMIN = "maxmin"
MODES = (MAXSAT, MINSAT, MINMAX, MAXMIN)

STANDARD = "standard"
BASIC = "basic"
COFACTOR = "cofactor"
COMPOSE = "compose"

OPTIMUM = "OPTIMUM"
HARD_UNSAT = "HARD_UNSAT"


class NodeCapExceeded(AddError, MemoryError):
    """Live diagram nodes passed the configured cap."""


class InvariantError(AssertionError):
    """An execution invariant checked under `check_invariants` failed."""


@dataclass
class TraceEntry:
    var: int
    g: object
    quantifier: str = MAX


class MaximizerTrace:
    """Stack of ``(variable, argmax diagram)`` pairs in elimination order.

    `outer_vars` lists variables eliminated without an entry (the min
    block of a min-max problem); strategies are evaluated on them.
    """

    def __init__(self, outer_vars=()):
        self.entries = []
        self.outer_vars = frozenset(outer_vars)

    def push(self, var, g, quantifier=MAX):
        self.entries.append(TraceEntry(var, g, quantifier))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def variables(self):
        return [e.var for e in self.entries]


@dataclass
class SolveStats:
    width: int = 0
    peak_nodes: int = 0
    max_support: int = 0
    valuation_sizes: dict = field(default_factory=dict)
    plan_ms: float = 0.0
    solve_ms: float = 0.0
    manager_nodes: int = 0


@dataclass
class SolveResult:
    """Outcome of `solve`.

    `optimum` is the best satisfied weight (the min-max value for
    two-level modes); `cost` is total soft weight minus `optimum`, or
    None when the hard constraints cannot be met.
    """

    optimum: int
    cost: int
    status: str
    mode: str
    assignment: frozenset = None
    trace: MaximizerTrace = None
    tree: object = None
    manager: AddManager = None
    stats: SolveStats = field(default_factory=SolveStats)
    valuations: dict = None

    def strategy(self, b1):
        """Optimal max-variable response to a min-variable assignment."""
        return evaluate_strategy(self.trace, b1)


@dataclass
class ExecContext:
    """Per-run state shared by the valuation routines.

    `quantifier` maps variables to MAX or MIN.  `floors` maps tree nodes to
    pruning floors (None disables pruning).  `record_trace` controls argmax
    bookkeeping; `max_impl` picks cofactor max or argmax substitution.
    """

    manager: AddManager
    formula: object
    quantifier: dict
    trace: MaximizerTrace = None
    record_trace: bool = True
    max_impl: str = COFACTOR
    floors: dict = None
    node_cap: int = None
    check_invariants: bool = False
    width: int = None
    record: dict = None
    stats: SolveStats = field(default_factory=SolveStats)
    live_nodes: int = 0

    def __post_init__(self):
        if self.trace is None:
            self.trace = MaximizerTrace()
        if self.max_impl not in (COFACTOR, COMPOSE):
            raise ValueError(f"unknown max implementation {self.max_impl!r}")


def _checkpoint(ctx, adds):
    """Account live nodes and, optionally, the width-based size bound."""
    m = ctx.manager
    here = 0
    for a in adds:
        count, supp = m.profile(a)
        here += count
        ctx.stats.max_support = max(ctx.stats.max_support, supp)
        if ctx.check_invariants and ctx.width is not None:
            if supp > ctx.width:
                raise InvariantError(f"valuation support {supp} exceeds width {ctx.width}")
            if count > 2 ** (ctx.width + 1) + 1:
                raise InvariantError(f"valuation of {count} nodes exceeds 2^(width+1)+1")
    live = ctx.live_nodes + here
    ctx.stats.peak_nodes = max(ctx.stats.peak_nodes, live)
    if ctx.node_cap is not None and live > ctx.node_cap:
        raise NodeCapExceeded(f"{live} live nodes exceed the cap of {ctx.node_cap}")
    return here


def _leaf(tree, u, ctx):
    c = ctx.formula.constraints[tree.nodes[u].constraint]
    a = compile_add(c, ctx.manager)
    if ctx.floors is not None:
        a = ctx.manager.prune(a, ctx.floors[u])
    return a


def _eliminate(ctx, a, x):
    m = ctx.manager
    if ctx.quantifier.get(x, MAX) == MIN:
        return m.project(a, x, MIN)
    need_g = ctx.record_trace or ctx.max_impl == COMPOSE
    if not need_g:
        return m.project(a, x, MAX)
    g = m.sign(m.derivative(a, x))
    if ctx.record_trace:
        ctx.trace.push(x, g, MAX)
    if ctx.max_impl == COMPOSE:
        return m.compose(a, x, g)
    return m.project(a, x, MAX)


def compute_valuation(tree, v, ctx):
    """Valuation of node `v`: children summed, then its variables projected."""
    m = ctx.manager
    done = {}
    sizes = {}
    for u in tree.post_order(v):
        node = tree.nodes[u]
        if node.is_leaf:
            a = _leaf(tree, u, ctx)
        else:
            a = m.zero
            for c in node.children:
                a = m.sum(a, done.pop(c))
                ctx.live_nodes -= sizes.pop(c)
            if ctx.floors is not None:
                a = m.prune(a, ctx.floors[u])
            _checkpoint(ctx, [a])
            for x in sorted(node.elim):
                a = _eliminate(ctx, a, x)
                _checkpoint(ctx, [a])
            m.maybe_clear_caches()
        size = _checkpoint(ctx, [a])
        ctx.stats.valuation_sizes[u] = size
        if ctx.record is not None:
            ctx.record[u] = a
        done[u] = a
        sizes[u] = size
        ctx.live_nodes += size
    ctx.live_nodes -= sizes.pop(v)
    return done[v]


def compute_valuation_basic(tree, v, ctx):
    """Valuation of `v` as a list of diagrams whose sum is the valuation.

    Each variable is eliminated by substituting its argmax, the sign of
    the summed derivatives, into every member.  MAX variables only.
    """
    m = ctx.manager
    done = {}
    sizes = {}
    for u in tree.post_order(v):
        node = tree.nodes[u]
        if node.is_leaf:
            members = [_leaf(tree, u, ctx)]
        else:
            members = []
            for c in node.children:
                members.extend(done.pop(c))
                ctx.live_nodes -= sizes.pop(c)
            _checkpoint(ctx, members)
            for x in sorted(node.elim):
                if ctx.quantifier.get(x, MAX) != MAX:
                    raise ValueError("the additive-decomposition executor handles MAX variables only")
                if ctx.check_invariants:
                    for other in done.values():
                        for a in other:
                            if x in a.support():
                                raise InvariantError(f"x{x} occurs outside the node eliminating it")
                d = m.zero
                for a in members:
                    d = m.sum(d, m.derivative(a, x))
                g = m.sign(d)
                if ctx.record_trace:
                    ctx.trace.push(x, g, MAX)
                members = [m.compose(a, x, g) for a in members]
                _checkpoint(ctx, members)
            m.maybe_clear_caches()
        size = _checkpoint(ctx, members)
        ctx.stats.valuation_sizes[u] = size
        if ctx.record is not None:
            ctx.record[u] = list(members)
        done[u] = members
        sizes[u] = size
        ctx.live_nodes += size
    ctx.live_nodes -= sizes.pop(v)
    return done[v]


def construct_maximizer(trace, fixed=None):
    """Replay `trace` from the last elimination back to the first.

    `fixed` pre-assigns variables that carry no trace entry.  Returns the
    set of true traced variables.
    """
    assigned = dict(fixed or {})
    for e in reversed(trace.entries):
        try:
            bit = e.g.evaluate(assigned)
        except KeyError as err:
            raise InvariantError(f"argmax of x{e.var} needs unassigned {err}") from None
        assigned[e.var] = bit == 1
    traced = set(trace.variables())
    return frozenset(v for v, b in assigned.items() if b and v in traced)


def evaluate_strategy(trace, b1):
    """Best max-variable response to the min-variable assignment `b1`.

    `b1` is a set of true min variables or a complete mapping over them.
    """
    outer = trace.outer_vars
    if hasattr(b1, "keys"):
        missing = outer - set(b1)
        if missing:
            raise ValueError(f"min assignment leaves {sorted(missing)[:10]} unassigned")
        fixed = {v: bool(b1[v]) for v in outer}
    else:
        b1 = set(b1)
        if not b1 <= outer:
            raise ValueError(f"{sorted(b1 - outer)[:10]} are not min variables")
        fixed = {v: v in b1 for v in outer}
    return construct_maximizer(trace, fixed)


def prune_floor(W, bound):
    """Floor for a scope of soft weight `W` under cost bound `bound`.

    A partial assignment whose value is below ``W - bound`` already
    violates more than `bound` weight inside the scope.
    """
    if bound < 0:
        raise ValueError("cost bound must be nonnegative")
    return W - bound


def resolve_mode(f, mode):
    if mode in (None, "auto"):
        if not f.has_partition:
            return MAXSAT
        # a max block listed before a min block reads as max-min
        return MAXMIN if tuple(f.prefix or ()) == ("max", "min") else MINMAX
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode in (MINMAX, MAXMIN) and not f.has_partition:
        raise ValueError(f"mode {mode} needs a min/max partition")
    return mode


def _quantifiers(f, mode):
    if mode == MAXSAT:
        return {v: MAX for v in f.variables}
    if mode == MINSAT:
        return {v: MIN for v in f.variables}
    q = {v: MAX for v in f.max_vars}
    q.update((v, MIN) for v in f.min_vars)
    return q


def plan(f, mode=MAXSAT, heuristic="min_fill", seed=None):
    if mode == MINMAX:
        return build_graded_tree(f, heuristic, seed, inner=f.max_vars, outer=f.min_vars)
    if mode == MAXMIN:
        return build_graded_tree(f, heuristic, seed, inner=f.min_vars, outer=f.max_vars)
    return build_tree(f, heuristic, seed)


def solve(f, mode="auto", heuristic="min_fill", seed=None, executor=STANDARD,
          max_impl=None, maximizer=True, bound=None, node_cap=None,
          check_invariants=False, record_valuations=False, manager=None,
          tree=None, cache_cap=None):
    """Solve `f` and return a `SolveResult`.

    `bound` is a cost upper bound (scaled units) that enables pruning;
    it must be at least the optimal cost for the answer to stay exact.
    `max_impl` defaults to cofactor max without a maximizer and to
    argmax substitution with one.
    """
    mode = resolve_mode(f, mode)
    if executor not in (STANDARD, BASIC):
        raise ValueError(f"unknown executor {executor!r}")
    if executor == BASIC and mode != MAXSAT:
        raise ValueError("the additive-decomposition executor supports MaxSAT only")
    if bound is not None and mode != MAXSAT:
        raise ValueError("bound-based pruning applies to MaxSAT only")
    if max_impl is None:
        max_impl = COMPOSE if maximizer else COFACTOR
    stats = SolveStats()
    outer = f.min_vars if mode == MINMAX else ()
    trace = MaximizerTrace(outer)
    record_trace = maximizer and mode in (MAXSAT, MINMAX, MAXMIN)

    if not f.constraints:
        value = 0
        return SolveResult(value, f.total_soft_weight - value, OPTIMUM, mode,
                           assignment=frozenset() if mode == MAXSAT and maximizer else None,
                           trace=trace, stats=stats)

    t0 = time.perf_counter()
    if tree is None:
        tree = plan(f, mode, heuristic, seed)
    stats.plan_ms = (time.perf_counter() - t0) * 1000
    stats.width = tree.width
    t1 = time.perf_counter()
    if manager is None:
        order = list(tree.elimination_order())
        rest = sorted(set(f.variables) - set(order))
        manager = AddManager(order + rest, cache_cap=cache_cap)
    floors = None
    if bound is not None:
        W = soft_weight_below(tree, f)
        floors = {u: prune_floor(W[u], bound) for u in range(len(tree.nodes))}
    ctx = ExecContext(manager, f, _quantifiers(f, mode), trace=trace,
                      record_trace=record_trace, max_impl=max_impl, floors=floors,
                      node_cap=node_cap, check_invariants=check_invariants,
                      width=tree.width, record={} if record_valuations else None,
                      stats=stats)
    if executor == BASIC:
        members = compute_valuation_basic(tree, tree.root, ctx)
        root = manager.zero
        for a in members:
            root = manager.sum(root, a)
    else:
        root = compute_valuation(tree, tree.root, ctx)
    if not root.is_terminal:
        raise InvariantError("root valuation still depends on variables")
    value = root.value
    status = HARD_UNSAT if value == NEG_INF else OPTIMUM
    assignment = None
    if mode == MAXSAT and record_trace and status == OPTIMUM:
        assignment = construct_maximizer(trace)
    stats.solve_ms = (time.perf_counter() - t1) * 1000
    stats.manager_nodes = len(manager)
    cost = None if status == HARD_UNSAT else f.total_soft_weight - value
    return SolveResult(value, cost, status, mode, assignment=assignment, trace=trace,
                       tree=tree, manager=manager, stats=stats, valuations=ctx.record)

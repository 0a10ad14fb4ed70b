"""Reduced, ordered, hash-consed algebraic decision diagrams.

Terminals carry extended integers: signed 64-bit weights plus the two
reserved encodings `NEG_INF` and `POS_INF`.  `NEG_INF` marks infeasible
(pruned or hard-violating) assignments; `POS_INF` only arises from
derivatives whose low cofactor is `NEG_INF`.

Nodes are plain integers indexing parallel arrays inside an
`AddManager`.  User code holds `Add` handles, which pair a node with its
owning manager.  Two handles of the same manager are equal iff they
denote the same function.
"""
import logging
import sys

logger = logging.getLogger(__name__)

NEG_INF = -(2 ** 63)
POS_INF = 2 ** 63 - 1
MIN_WEIGHT = NEG_INF + 1
MAX_WEIGHT = POS_INF - 1

MAX = "max"
MIN = "min"

_TERM = sys.maxsize  # level of terminal nodes


class AddError(Exception):
    """Base class for decision-diagram errors."""


class AddOverflowError(AddError, OverflowError):
    """Arithmetic left the representable weight range."""


class ManagerMismatchError(AddError, ValueError):
    """Operands belong to different managers."""


class OrderViolationError(AddError, ValueError):
    """A node would break the fixed variable order."""


class UnassignedVariableError(AddError, KeyError):
    """Evaluation hit a variable the assignment does not define."""


def check_weight(v):
    if v == NEG_INF or v == POS_INF:
        return v
    if not isinstance(v, int):
        raise TypeError(f"terminal values must be integers, got {v!r}")
    if v < MIN_WEIGHT or v > MAX_WEIGHT:
        raise AddOverflowError(f"value {v} outside the 64-bit weight range")
    return v


def ext_add(a, b):
    """Extended addition; `NEG_INF` absorbs everything."""
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    if a == POS_INF or b == POS_INF:
        return POS_INF
    r = a + b
    if r < MIN_WEIGHT or r > MAX_WEIGHT:
        raise AddOverflowError(f"{a} + {b} overflows")
    return r


def ext_sub(a, b):
    """Extended difference ``a - b``; equal operands give 0."""
    if a == b:
        return 0
    if a == NEG_INF or b == POS_INF:
        return NEG_INF
    if a == POS_INF or b == NEG_INF:
        return POS_INF
    r = a - b
    if r < MIN_WEIGHT or r > MAX_WEIGHT:
        raise AddOverflowError(f"{a} - {b} overflows")
    return r


def format_value(v):
    if v == NEG_INF:
        return "-inf"
    if v == POS_INF:
        return "+inf"
    return str(v)


class Add:
    """Handle to a function stored in an `AddManager`."""

    __slots__ = ("manager", "node")

    def __init__(self, manager, node):
        self.manager = manager
        self.node = node

    def __eq__(self, other):
        if not isinstance(other, Add):
            return NotImplemented
        return self.manager is other.manager and self.node == other.node

    def __hash__(self):
        return hash((id(self.manager), self.node))

    def __repr__(self):
        if self.is_terminal:
            return f"Add(T({format_value(self.value)}))"
        return f"Add(node={self.node}, top=x{self.top_var})"

    def __add__(self, other):
        return self.manager.sum(self, other)

    @property
    def is_terminal(self):
        return self.manager._lev[self.node] == _TERM

    @property
    def value(self):
        """Terminal value; raises for internal nodes."""
        v = self.manager._val[self.node]
        if v is None:
            raise ValueError("not a terminal")
        return v

    @property
    def top_var(self):
        return self.manager._top_var(self.node)

    def evaluate(self, assignment):
        return self.manager.evaluate(self, assignment)

    def support(self):
        return self.manager.support(self)

    def node_count(self):
        return self.manager.node_count(self)

    def max_terminal(self):
        return self.manager.max_terminal(self)

    def min_terminal(self):
        return self.manager.min_terminal(self)


class AddManager:
    """Unique table, apply caches and node storage for one variable order.

    `order` lists variables from the top of the diagram to the bottom and
    is fixed for the lifetime of the manager.  `cache_cap` bounds the total
    number of memoized operation results; `maybe_clear_caches` drops them
    once the bound is exceeded.
    """

    def __init__(self, order=(), cache_cap=None):
        order = tuple(order)
        if len(set(order)) != len(order):
            raise ValueError("variable order contains duplicates")
        self.order = order
        self._level_of = {v: i for i, v in enumerate(order)}
        self.cache_cap = cache_cap
        self._lev = []
        self._lo = []
        self._hi = []
        self._val = []
        self._unique = {}
        self._terms = {}
        self._c_sum = {}
        self._c_max = {}
        self._c_min = {}
        self._c_sub = {}
        self._c_proj = {}
        self._c_deriv = {}
        self._c_restrict = {}
        self._c_ite = {}
        self._c_unary = {}
        self._zero = self._term(0)
        self._neg_inf = self._term(NEG_INF)

    # -- bookkeeping ---------------------------------------------------------

    def __len__(self):
        """Total number of nodes ever allocated."""
        return len(self._lev)

    def __contains__(self, var):
        return var in self._level_of

    def level(self, var):
        try:
            return self._level_of[var]
        except KeyError:
            raise ValueError(f"variable {var} is not in the manager order") from None

    def cache_size(self):
        return (len(self._c_sum) + len(self._c_max) + len(self._c_min)
                + len(self._c_sub) + len(self._c_proj) + len(self._c_deriv)
                + len(self._c_restrict) + len(self._c_ite)
                + sum(len(c) for c in self._c_unary.values()))

    def clear_caches(self):
        for c in (self._c_sum, self._c_max, self._c_min, self._c_sub,
                  self._c_proj, self._c_deriv, self._c_restrict, self._c_ite):
            c.clear()
        self._c_unary.clear()

    def maybe_clear_caches(self):
        if self.cache_cap is not None and self.cache_size() > self.cache_cap:
            logger.debug("clearing apply caches (%d entries)", self.cache_size())
            self.clear_caches()

    def _wrap(self, u):
        return Add(self, u)

    def _node(self, a):
        if not isinstance(a, Add):
            raise TypeError(f"expected Add, got {type(a).__name__}")
        if a.manager is not self:
            raise ManagerMismatchError("Add belongs to a different manager")
        return a.node

    def _top_var(self, u):
        lv = self._lev[u]
        return None if lv == _TERM else self.order[lv]

    # -- node construction ---------------------------------------------------

    def _term(self, v):
        u = self._terms.get(v)
        if u is None:
            u = len(self._lev)
            self._lev.append(_TERM)
            self._lo.append(-1)
            self._hi.append(-1)
            self._val.append(v)
            self._terms[v] = u
        return u

    def _mk(self, lv, lo, hi):
        if lo == hi:
            return lo
        key = (lv, lo, hi)
        u = self._unique.get(key)
        if u is None:
            u = len(self._lev)
            self._lev.append(lv)
            self._lo.append(lo)
            self._hi.append(hi)
            self._val.append(None)
            self._unique[key] = u
        return u

    def make_terminal(self, v):
        """Constant function `v`; equal values share one handle."""
        return self._wrap(self._term(check_weight(v)))

    terminal = make_terminal

    @property
    def zero(self):
        return self._wrap(self._zero)

    @property
    def neg_inf(self):
        return self._wrap(self._neg_inf)

    def ite_node(self, x, high, low):
        """Node testing `x`: `high` where x is true, `low` otherwise."""
        lv = self.level(x)
        h = self._node(high)
        l_ = self._node(low)
        if self._lev[h] <= lv or self._lev[l_] <= lv:
            raise OrderViolationError(
                f"x{x} must precede every variable of its children")
        return self._wrap(self._mk(lv, l_, h))

    def var(self, x, high=1, low=0):
        """Two-terminal diagram of a single variable."""
        return self.ite_node(x, self.make_terminal(high), self.make_terminal(low))

    # -- binary apply --------------------------------------------------------

    def _sum(self, f, g):
        if f > g:
            f, g = g, f
        key = (f, g)
        r = self._c_sum.get(key)
        if r is not None:
            return r
        lev = self._lev
        lf, lg = lev[f], lev[g]
        if f == self._zero:
            r = g
        elif g == self._zero:
            r = f
        elif f == self._neg_inf or g == self._neg_inf:
            r = self._neg_inf
        elif lf == _TERM and lg == _TERM:
            r = self._term(ext_add(self._val[f], self._val[g]))
        elif lf == lg:
            r = self._mk(lf, self._sum(self._lo[f], self._lo[g]),
                         self._sum(self._hi[f], self._hi[g]))
        elif lf < lg:
            r = self._mk(lf, self._sum(self._lo[f], g), self._sum(self._hi[f], g))
        else:
            r = self._mk(lg, self._sum(f, self._lo[g]), self._sum(f, self._hi[g]))
        self._c_sum[key] = r
        return r

    def _extremum(self, f, g, cache, pick):
        if f == g:
            return f
        if f > g:
            f, g = g, f
        key = (f, g)
        r = cache.get(key)
        if r is not None:
            return r
        lev = self._lev
        lf, lg = lev[f], lev[g]
        if lf == _TERM and lg == _TERM:
            r = self._term(pick(self._val[f], self._val[g]))
        elif lf == lg:
            r = self._mk(lf, self._extremum(self._lo[f], self._lo[g], cache, pick),
                         self._extremum(self._hi[f], self._hi[g], cache, pick))
        elif lf < lg:
            r = self._mk(lf, self._extremum(self._lo[f], g, cache, pick),
                         self._extremum(self._hi[f], g, cache, pick))
        else:
            r = self._mk(lg, self._extremum(f, self._lo[g], cache, pick),
                         self._extremum(f, self._hi[g], cache, pick))
        cache[key] = r
        return r

    def _max(self, f, g):
        return self._extremum(f, g, self._c_max, max)

    def _min(self, f, g):
        return self._extremum(f, g, self._c_min, min)

    def _sub(self, f, g):
        key = (f, g)
        r = self._c_sub.get(key)
        if r is not None:
            return r
        lev = self._lev
        lf, lg = lev[f], lev[g]
        if f == g:
            r = self._zero
        elif g == self._zero:
            r = f
        elif lf == _TERM and lg == _TERM:
            r = self._term(ext_sub(self._val[f], self._val[g]))
        elif lf == lg:
            r = self._mk(lf, self._sub(self._lo[f], self._lo[g]),
                         self._sub(self._hi[f], self._hi[g]))
        elif lf < lg:
            r = self._mk(lf, self._sub(self._lo[f], g), self._sub(self._hi[f], g))
        else:
            r = self._mk(lg, self._sub(f, self._lo[g]), self._sub(f, self._hi[g]))
        self._c_sub[key] = r
        return r

    def sum(self, a, b):
        """Pointwise sum."""
        return self._wrap(self._sum(self._node(a), self._node(b)))

    def maximum(self, a, b):
        return self._wrap(self._max(self._node(a), self._node(b)))

    def minimum(self, a, b):
        return self._wrap(self._min(self._node(a), self._node(b)))

    def difference(self, a, b):
        return self._wrap(self._sub(self._node(a), self._node(b)))

    # -- single-variable operators -------------------------------------------

    def _project(self, f, lv, mode):
        lf = self._lev[f]
        if lf > lv:
            return f
        key = (f, lv, mode)
        r = self._c_proj.get(key)
        if r is not None:
            return r
        if lf == lv:
            if mode is MAX:
                r = self._max(self._lo[f], self._hi[f])
            else:
                r = self._min(self._lo[f], self._hi[f])
        else:
            r = self._mk(lf, self._project(self._lo[f], lv, mode),
                         self._project(self._hi[f], lv, mode))
        self._c_proj[key] = r
        return r

    def project(self, a, x, mode=MAX):
        """Eliminate `x` by max (or min) of its two cofactors."""
        if mode == MAX:
            mode = MAX
        elif mode == MIN:
            mode = MIN
        else:
            raise ValueError(f"unknown projection mode {mode!r}")
        return self._wrap(self._project(self._node(a), self.level(x), mode))

    def _derivative(self, f, lv):
        lf = self._lev[f]
        if lf > lv:
            return self._zero
        key = (f, lv)
        r = self._c_deriv.get(key)
        if r is not None:
            return r
        if lf == lv:
            r = self._sub(self._hi[f], self._lo[f])
        else:
            r = self._mk(lf, self._derivative(self._lo[f], lv),
                         self._derivative(self._hi[f], lv))
        self._c_deriv[key] = r
        return r

    def derivative(self, a, x):
        """Difference between the x=1 and x=0 cofactors."""
        return self._wrap(self._derivative(self._node(a), self.level(x)))

    def _restrict(self, f, lv, bit):
        lf = self._lev[f]
        if lf > lv:
            return f
        if lf == lv:
            return self._hi[f] if bit else self._lo[f]
        key = (f, lv, bit)
        r = self._c_restrict.get(key)
        if r is None:
            r = self._mk(lf, self._restrict(self._lo[f], lv, bit),
                         self._restrict(self._hi[f], lv, bit))
            self._c_restrict[key] = r
        return r

    def restrict(self, a, x, bit):
        """Cofactor of `a` with `x` fixed to `bit`."""
        return self._wrap(self._restrict(self._node(a), self.level(x), 1 if bit else 0))

    def _ite01(self, g, f1, f0):
        if f1 == f0:
            return f1
        lev = self._lev
        lg = lev[g]
        if lg == _TERM:
            return f1 if self._val[g] else f0
        key = (g, f1, f0)
        r = self._c_ite.get(key)
        if r is not None:
            return r
        top = min(lg, lev[f1], lev[f0])
        g0, g1 = (self._lo[g], self._hi[g]) if lg == top else (g, g)
        a0, a1 = (self._lo[f1], self._hi[f1]) if lev[f1] == top else (f1, f1)
        b0, b1 = (self._lo[f0], self._hi[f0]) if lev[f0] == top else (f0, f0)
        r = self._mk(top, self._ite01(g0, a0, b0), self._ite01(g1, a1, b1))
        self._c_ite[key] = r
        return r

    def compose(self, a, x, g):
        """Substitute the 0/1 function `g` for `x` in `a`."""
        f = self._node(a)
        gn = self._node(g)
        vals = self._terminal_values(gn)
        if not vals <= {0, 1}:
            raise ValueError("compose needs a 0/1-valued substitute")
        lv = self.level(x)
        if lv in self._support_levels(gn):
            raise ValueError(f"substitute depends on x{x}")
        f1 = self._restrict(f, lv, 1)
        f0 = self._restrict(f, lv, 0)
        return self._wrap(self._ite01(gn, f1, f0))

    # -- terminal maps -------------------------------------------------------

    def _map(self, f, fn, cache):
        r = cache.get(f)
        if r is not None:
            return r
        if self._lev[f] == _TERM:
            r = self._term(fn(self._val[f]))
        else:
            r = self._mk(self._lev[f], self._map(self._lo[f], fn, cache),
                         self._map(self._hi[f], fn, cache))
        cache[f] = r
        return r

    def _unary_cache(self, tag):
        c = self._c_unary.get(tag)
        if c is None:
            c = self._c_unary[tag] = {}
        return c

    def sign(self, a):
        """1 where `a` is nonnegative, 0 elsewhere (including `NEG_INF`)."""
        return self._wrap(self._map(self._node(a), _sign, self._unary_cache("sign")))

    def negate(self, a):
        return self._wrap(self._map(self._node(a), _negate, self._unary_cache("neg")))

    def prune(self, a, floor):
        """Replace every terminal below `floor` by `NEG_INF`."""
        if floor == NEG_INF or floor == POS_INF:
            raise ValueError("prune floor must be finite")
        check_weight(floor)

        def cut(v):
            return NEG_INF if v < floor else v

        return self._wrap(self._map(self._node(a), cut, self._unary_cache(("prune", floor))))

    # -- inspection ----------------------------------------------------------

    def _reachable(self, roots):
        seen = set()
        stack = list(roots)
        lev, lo, hi = self._lev, self._lo, self._hi
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if lev[u] != _TERM:
                stack.append(lo[u])
                stack.append(hi[u])
        return seen

    def _support_levels(self, u):
        lev = self._lev
        return {lev[v] for v in self._reachable([u]) if lev[v] != _TERM}

    def _terminal_values(self, u):
        val = self._val
        return {val[v] for v in self._reachable([u]) if val[v] is not None}

    def support(self, a):
        """Set of variables `a` depends on."""
        return {self.order[lv] for lv in self._support_levels(self._node(a))}

    def node_count(self, a):
        """Internal plus terminal nodes reachable from `a`."""
        return len(self._reachable([self._node(a)]))

    def shared_node_count(self, adds):
        """Distinct nodes reachable from any of `adds`."""
        return len(self._reachable([self._node(a) for a in adds]))

    def profile(self, a):
        """`(node_count, support_size)` in one traversal."""
        nodes = self._reachable([self._node(a)])
        lev = self._lev
        return len(nodes), len({lev[u] for u in nodes if lev[u] != _TERM})

    def max_terminal(self, a):
        return max(self._terminal_values(self._node(a)))

    def min_terminal(self, a):
        return min(self._terminal_values(self._node(a)))

    def terminal_values(self, a):
        return self._terminal_values(self._node(a))

    def evaluate(self, a, assignment):
        """Value of `a` under `assignment`.

        `assignment` is either a set of true variables (everything else is
        false) or a mapping from variables to truth values, in which case
        every variable on the evaluated path must be present.
        """
        u = self._node(a)
        lev, lo, hi, order = self._lev, self._lo, self._hi, self.order
        strict = hasattr(assignment, "keys")
        while lev[u] != _TERM:
            x = order[lev[u]]
            if strict:
                try:
                    bit = assignment[x]
                except KeyError:
                    raise UnassignedVariableError(x) from None
            else:
                bit = x in assignment
            u = hi[u] if bit else lo[u]
        return self._val[u]

    def to_dot(self, a, name="add"):
        """Graphviz rendering of `a`."""
        root = self._node(a)
        nodes = sorted(self._reachable([root]))
        lines = [f"digraph {name} {{"]
        for u in nodes:
            if self._lev[u] == _TERM:
                lines.append(f'  n{u} [shape=box, label="{format_value(self._val[u])}"];')
            else:
                lines.append(f'  n{u} [label="x{self.order[self._lev[u]]}"];')
                lines.append(f"  n{u} -> n{self._lo[u]} [style=dashed];")
                lines.append(f"  n{u} -> n{self._hi[u]};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _sign(v):
    return 1 if v >= 0 and v != NEG_INF else 0


def _negate(v):
    if v == NEG_INF:
        return POS_INF
    if v == POS_INF:
        return NEG_INF
    return -v

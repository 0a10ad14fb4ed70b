"""Project-join trees built by bucket elimination over the primal graph.

Leaves are numbered ``0..m-1`` and leaf ``i`` holds constraint ``i``.
Internal nodes eliminate one variable each; variables that occur in no
constraint are eliminated at the root.  Builder output always lists
children before parents, so ascending node id is a post-order.
"""
import heapq
import random
from dataclasses import dataclass, field

MIN_FILL = "min_fill"
MIN_DEGREE = "min_degree"
HEURISTICS = (MIN_FILL, MIN_DEGREE)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class PjtNode:
    id: int
    constraint: int = None
    children: tuple = ()
    elim: frozenset = frozenset()

    @property
    def is_leaf(self):
        return self.constraint is not None


@dataclass
class ProjectJoinTree:
    """Rooted tree with a leaf per constraint and elimination labels.

    When graded, `i_x` holds the internal nodes eliminating outer
    variables and `i_y` those eliminating inner variables.
    """

    nodes: list
    root: int
    graded: bool = False
    i_x: frozenset = frozenset()
    i_y: frozenset = frozenset()
    width: int = None
    order: list = field(default_factory=list)

    def __len__(self):
        return len(self.nodes)

    def internal(self):
        return [v for v in self.nodes if not v.is_leaf]

    def post_order(self, start=None):
        """Node ids of the subtree at `start` (default root), children first."""
        start = self.root if start is None else start
        out = []
        stack = [(start, False)]
        while stack:
            u, done = stack.pop()
            if done:
                out.append(u)
                continue
            stack.append((u, True))
            for c in reversed(self.nodes[u].children):
                stack.append((c, False))
        return out

    def elimination_order(self):
        """Variables in the order a post-order walk eliminates them."""
        order = []
        for u in self.post_order():
            order.extend(sorted(self.nodes[u].elim))
        return order


class _Graph:
    """Primal graph with incremental min-fill / min-degree scores."""

    def __init__(self, var_sets, heuristic):
        self.adj = {}
        for vs in var_sets:
            for v in vs:
                self.adj.setdefault(v, set()).update(u for u in vs if u != v)
        self.heuristic = heuristic
        self.score = {v: self._score(v) for v in self.adj}

    def _score(self, v):
        nb = self.adj[v]
        if self.heuristic == MIN_DEGREE:
            return len(nb)
        adj = self.adj
        missing = 0
        for u in nb:
            missing += len(nb - adj[u]) - 1
        return missing // 2

    def start_phase(self, candidates):
        self.phase = {v for v in candidates if v in self.adj}
        self.heap = [(self.score[v], v) for v in self.phase]
        heapq.heapify(self.heap)

    def _valid(self, s, v):
        return v in self.phase and self.score.get(v) == s

    def pick(self, rng):
        """Best-scoring phase variable; ties go to the lowest index or to `rng`."""
        heap = self.heap
        while not self._valid(*heap[0]):
            heapq.heappop(heap)
        s, v = heap[0]
        if rng is None:
            return v
        ties = set()
        while heap and heap[0][0] == s:
            _, u = heapq.heappop(heap)
            if self._valid(s, u):
                ties.add(u)
        for u in ties:
            heapq.heappush(heap, (s, u))
        return rng.choice(sorted(ties))

    def eliminate(self, v):
        nb = self.adj.pop(v)
        del self.score[v]
        self.phase.discard(v)
        for u in nb:
            au = self.adj[u]
            au.discard(v)
            au.update(w for w in nb if w != u)
        touched = set(nb)
        if self.heuristic == MIN_FILL:
            for u in nb:
                touched |= self.adj[u]
        for u in touched:
            sc = self._score(u)
            if sc != self.score[u]:
                self.score[u] = sc
                if u in self.phase:
                    heapq.heappush(self.heap, (sc, u))


def _check_heuristic(h):
    h = h.replace("-", "_").lower()
    if h not in HEURISTICS:
        raise PlanError(f"unknown heuristic {h!r}; use one of {HEURISTICS}")
    return h


class _Builder:
    def __init__(self, f, heuristic, seed):
        if not f.constraints:
            raise PlanError("cannot plan an empty formula")
        self.f = f
        self.rng = None if seed is None else random.Random(seed)
        self.nodes = [PjtNode(i, constraint=i) for i in range(len(f.constraints))]
        var_sets = [frozenset(c.variables) for c in f.constraints]
        self.items = dict(enumerate(var_sets))  # pending subtree -> its variables
        self.holders = {}
        for i, vs in self.items.items():
            for v in vs:
                self.holders.setdefault(v, set()).add(i)
        self.graph = _Graph(var_sets, _check_heuristic(heuristic))

    def _new(self, children, elim, varset):
        u = len(self.nodes)
        self.nodes.append(PjtNode(u, children=tuple(sorted(children)), elim=frozenset(elim)))
        for c in children:
            for v in self.items.pop(c):
                if v not in elim:
                    self.holders[v].discard(c)
        self.items[u] = varset
        for v in varset:
            self.holders[v].add(u)
        return u

    def run_phase(self, phase_vars):
        """Eliminate every constrained variable of `phase_vars`; return new node ids."""
        made = []
        g = self.graph
        g.start_phase(phase_vars)
        while g.phase:
            v = g.pick(self.rng)
            g.eliminate(v)
            bucket = self.holders.pop(v)
            varset = frozenset().union(*(self.items[c] for c in bucket)) - {v}
            made.append(self._new(bucket, {v}, varset))
        return made

    def free_vars(self, phase_vars):
        used = {v for c in self.f.constraints for v in c.variables}
        return {v for v in phase_vars if v not in used}

    def finish(self, root_elim):
        if len(self.items) == 1 and not root_elim:
            (root,) = self.items
            return root
        return self._new(list(self.items), root_elim, frozenset())


def build_tree(f, heuristic=MIN_FILL, seed=None):
    """Plan `f` by bucket elimination; ties go to the lowest variable
    unless `seed` is given, in which case they are broken at random."""
    b = _Builder(f, heuristic, seed)
    all_vars = set(f.variables)
    b.run_phase(all_vars)
    root = b.finish(b.free_vars(all_vars))
    t = ProjectJoinTree(b.nodes, root)
    t.width = width(t, f)
    t.order = t.elimination_order()
    return t


def build_graded_tree(f, heuristic=MIN_FILL, seed=None, inner=None, outer=None):
    """Plan with every `inner` variable eliminated before any `outer` one.

    Defaults follow min-max: inner = max variables, outer = min variables.
    Swap them for max-min.
    """
    if inner is None and outer is None:
        if not f.has_partition:
            raise PlanError("graded planning needs a min/max partition")
        inner, outer = f.max_vars, f.min_vars
    inner, outer = frozenset(inner), frozenset(outer)
    if inner & outer or inner | outer != frozenset(f.variables):
        raise PlanError("inner and outer variables must partition 1..n")
    b = _Builder(f, heuristic, seed)
    i_y = set(b.run_phase(inner))
    free_inner = b.free_vars(inner)
    if free_inner:
        # hang unconstrained inner variables above one pending subtree
        first = min(b.items)
        i_y.add(b._new([first], free_inner, b.items[first]))
    i_x = set(b.run_phase(outer))
    root = b.finish(b.free_vars(outer))
    if not b.nodes[root].is_leaf and root not in i_y:
        i_x.add(root)
    t = ProjectJoinTree(b.nodes, root, graded=True, i_x=frozenset(i_x), i_y=frozenset(i_y))
    t.width = width(t, f)
    t.order = t.elimination_order()
    return t


# -- validation --------------------------------------------------------------

def _structure(t):
    """Euler-tour intervals plus structural violations."""
    problems = []
    n = len(t.nodes)
    if not 0 <= t.root < n:
        return None, None, [f"root {t.root} is not a node"]
    tin = [-1] * n
    tout = [-1] * n
    clock = 0
    stack = [(t.root, False)]
    while stack:
        u, done = stack.pop()
        if done:
            tout[u] = clock
            continue
        if tin[u] != -1:
            problems.append(f"node {u} reached twice (not a tree)")
            continue
        tin[u] = clock
        clock += 1
        stack.append((u, True))
        node = t.nodes[u]
        if node.id != u:
            problems.append(f"node at index {u} carries id {node.id}")
        if node.is_leaf and (node.children or node.elim):
            problems.append(f"leaf {u} has children or eliminated variables")
        if not node.is_leaf and not node.children:
            problems.append(f"internal node {u} has no children")
        for c in node.children:
            if not 0 <= c < n:
                problems.append(f"node {u} has unknown child {c}")
            else:
                stack.append((c, False))
    unreached = [u for u in range(n) if tin[u] == -1]
    if unreached:
        problems.append(f"nodes unreachable from root: {unreached[:10]}")
    return tin, tout, problems


def validate_tree(t, f):
    """List of violated project-join tree conditions (empty when valid)."""
    tin, tout, problems = _structure(t)
    if tin is None:
        return problems
    m = len(f.constraints)
    leaf_of = {}
    for node in t.nodes:
        if node.is_leaf:
            if not 0 <= node.constraint < m:
                problems.append(f"leaf {node.id} maps to unknown constraint {node.constraint}")
            elif node.constraint in leaf_of:
                problems.append(f"constraint {node.constraint} has two leaves")
            else:
                leaf_of[node.constraint] = node.id
    missing = set(range(m)) - set(leaf_of)
    if missing:
        problems.append(f"constraints without a leaf: {sorted(missing)[:10]}")
    seen = {}
    for node in t.nodes:
        for x in node.elim:
            if x in seen:
                problems.append(f"x{x} eliminated at both {seen[x]} and {node.id}")
            seen[x] = node.id
    if set(seen) != set(f.variables):
        lost = sorted(set(f.variables) - set(seen))
        extra = sorted(set(seen) - set(f.variables))
        if lost:
            problems.append(f"variables never eliminated: {lost[:10]}")
        if extra:
            problems.append(f"unknown variables eliminated: {extra[:10]}")
    occurs = {}
    for i, c in enumerate(f.constraints):
        for v in c.variables:
            occurs.setdefault(v, []).append(i)
    for node in t.nodes:
        if node.is_leaf or tin[node.id] == -1:
            continue
        lo, hi = tin[node.id], tout[node.id]
        for x in node.elim:
            for i in occurs.get(x, ()):
                leaf = leaf_of.get(i)
                if leaf is not None and not lo <= tin[leaf] < hi:
                    problems.append(
                        f"x{x} eliminated at {node.id} but constraint {i} lies outside its subtree")
    return problems


def validate_graded(t, f, outer=None, inner=None):
    """Project-join conditions plus the grading conditions.

    `outer` defaults to the min variables and `inner` to the max
    variables of `f`.
    """
    problems = validate_tree(t, f)
    if outer is None and inner is None:
        if not f.has_partition:
            return problems + ["formula has no min/max partition"]
        outer, inner = f.min_vars, f.max_vars
    outer, inner = frozenset(outer), frozenset(inner)
    internal = {v.id for v in t.nodes if not v.is_leaf}
    i_x, i_y = set(t.i_x), set(t.i_y)
    if i_x & i_y or (i_x | i_y) != internal:
        problems.append("I_X and I_Y do not partition the internal nodes")
    for u in i_x:
        if not t.nodes[u].elim <= outer:
            problems.append(f"node {u} in I_X eliminates inner variables")
    for u in i_y:
        if not t.nodes[u].elim <= inner:
            problems.append(f"node {u} in I_Y eliminates outer variables")
    tin, tout, structural = _structure(t)
    if structural:
        return problems
    for v in i_y:
        for u in i_x:
            if u != v and tin[v] < tin[u] < tout[v]:
                problems.append(f"I_X node {u} lies below I_Y node {v}")
    return problems


def node_vars(t, f):
    """``Vars(v)`` for every node: variables still present in its valuation."""
    vs = [None] * len(t.nodes)
    for u in t.post_order():
        node = t.nodes[u]
        if node.is_leaf:
            vs[u] = frozenset(f.constraints[node.constraint].variables)
        else:
            vs[u] = frozenset().union(*(vs[c] for c in node.children)) - node.elim
    return vs


def width(t, f):
    """Largest node size: |Vars| at leaves, |Vars ∪ elim| at internal nodes."""
    if any(n is None for n in t.nodes):
        raise PlanError("tree has holes")
    _, _, problems = _structure(t)
    if problems:
        raise PlanError("; ".join(problems))
    vs = node_vars(t, f)
    best = 0
    for node in t.nodes:
        size = len(vs[node.id] | node.elim)
        best = max(best, size)
    return best


def subtree_sets(t):
    """Projected variables P(v) and constraint sets Phi(v) per node."""
    P = [None] * len(t.nodes)
    Phi = [None] * len(t.nodes)
    for u in t.post_order():
        node = t.nodes[u]
        if node.is_leaf:
            P[u] = frozenset()
            Phi[u] = frozenset([node.constraint])
        else:
            P[u] = frozenset().union(node.elim, *(P[c] for c in node.children))
            Phi[u] = frozenset().union(*(Phi[c] for c in node.children))
    return P, Phi


def soft_weight_below(t, f):
    """Total soft weight of the constraints under each node."""
    W = [0] * len(t.nodes)
    for u in t.post_order():
        node = t.nodes[u]
        if node.is_leaf:
            c = f.constraints[node.constraint]
            W[u] = 0 if c.hard else c.weight
        else:
            W[u] = sum(W[c] for c in node.children)
    return W


# -- plan dump ---------------------------------------------------------------

def dump_plan(t, f=None):
    lines = []
    for u in t.post_order():
        node = t.nodes[u]
        if node.is_leaf:
            lines.append(f"leaf {u} constraint {node.constraint}")
        else:
            kids = " ".join(map(str, node.children))
            elim = " ".join(map(str, sorted(node.elim)))
            lines.append(f"node {u} children {kids} elim {elim}".rstrip())
    lines.append(f"root {t.root}")
    w = t.width if f is None else width(t, f)
    if w is not None:
        lines.append(f"width {w}")
    return "\n".join(lines) + "\n"


def read_plan(text):
    """Inverse of `dump_plan` (grading is not part of the format)."""
    found = {}
    root = None
    w = None
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        try:
            if toks[0] == "leaf" and toks[2] == "constraint":
                u = int(toks[1])
                found[u] = PjtNode(u, constraint=int(toks[3]))
            elif toks[0] == "node" and toks[2] == "children":
                u = int(toks[1])
                k = toks.index("elim")
                kids = tuple(int(x) for x in toks[3:k])
                elim = frozenset(int(x) for x in toks[k + 1:])
                found[u] = PjtNode(u, children=kids, elim=elim)
            elif toks[0] == "root":
                root = int(toks[1])
            elif toks[0] == "width":
                w = int(toks[1])
            else:
                raise ValueError(line)
        except (ValueError, IndexError):
            raise PlanError(f"line {lineno}: cannot read {line!r}") from None
    if root is None:
        raise PlanError("plan has no root line")
    n = max(found) + 1 if found else 0
    if set(found) != set(range(n)):
        raise PlanError("plan node ids must be 0..N-1")
    t = ProjectJoinTree([found[u] for u in range(n)], root, width=w)
    return t

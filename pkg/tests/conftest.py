import itertools
import random

from hypothesis import strategies as st

from dpms.add import NEG_INF


def assignments(vs):
    """Every assignment of `vs` as a frozenset of true variables."""
    vs = list(vs)
    for bits in itertools.product((0, 1), repeat=len(vs)):
        yield frozenset(v for v, b in zip(vs, bits) if b)


def table_add(m, vs, values):
    """Diagram whose value on assignment i of `vs` is ``values[i]``.

    Assignment i sets ``vs[j]`` true iff bit j of i is set.
    """
    vs = list(vs)
    pos = {v: j for j, v in enumerate(vs)}
    top_down = sorted(vs, key=m.level)

    def build(depth, idx):
        if depth == len(top_down):
            return m.make_terminal(values[idx])
        x = top_down[depth]
        lo = build(depth + 1, idx)
        hi = build(depth + 1, idx | (1 << pos[x]))
        return m.ite_node(x, hi, lo)

    return build(0, 0)


def table_value(vs, values, b):
    return values[sum(1 << j for j, v in enumerate(vs) if v in b)]


def random_values(rng, k, lo=-6, hi=6, neg_inf=0.1):
    return [NEG_INF if rng.random() < neg_inf else rng.randint(lo, hi) for _ in range(1 << k)]


def random_table(rng, vs, **kw):
    k = rng.randint(0, len(vs))
    sub = sorted(rng.sample(list(vs), k))
    return sub, random_values(rng, k, **kw)


terminal_values = st.one_of(st.integers(-8, 8), st.just(NEG_INF))


@st.composite
def tables(draw, universe=6, max_vars=4):
    """A `(vars, values)` truth table over a subset of ``1..universe``."""
    k = draw(st.integers(0, max_vars))
    vs = sorted(draw(st.sets(st.integers(1, universe), min_size=k, max_size=k)))
    values = draw(st.lists(terminal_values, min_size=1 << k, max_size=1 << k))
    return vs, values


def seeded(seed):
    return random.Random(seed)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

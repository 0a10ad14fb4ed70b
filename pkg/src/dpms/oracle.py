"""Exhaustive ground truth for small formulas.

Assignments are enumerated in binary counting order with x1 as the least
significant bit.  Only constraint fields are shared with the rest of the
package; evaluation is done here from scratch with numpy.
"""
from dataclasses import dataclass, field

import numpy as np

from .constraints import CARD, CLAUSE, PB, XOR

NEG_INF = -(2 ** 63)
MAX_VARS = 26
CHUNK_BITS = 20


class OracleTooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    """`value` plus witnesses.

    For MaxSAT `witnesses` lists every optimal assignment as a frozenset
    of true variables.  For two-level problems `responses` maps each
    outer assignment (frozenset of true outer variables) to one best
    inner response and `branch_values` to that branch's value.
    """

    value: int
    witnesses: list = field(default_factory=list)
    responses: dict = field(default_factory=dict)
    branch_values: dict = field(default_factory=dict)


def _bits(start, stop, n):
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def _holds(c, bits):
    cols = []
    for l in c.lits:
        col = bits[:, abs(l) - 1]
        cols.append(col if l > 0 else ~col)
    if not cols:
        s = np.zeros(bits.shape[0], dtype=np.int64)
    elif c.kind == PB:
        s = sum(a * col.astype(np.int64) for a, col in zip(c.coefs, cols))
    else:
        s = np.sum(np.stack(cols, axis=1), axis=1, dtype=np.int64)
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


def _values(f, start, stop):
    """Objective on assignments ``start..stop-1``; NEG_INF if hard fails."""
    bits = _bits(start, stop, f.num_vars)
    big = sum(c.weight for c in f.constraints if not c.hard) >= 2 ** 62
    total = np.zeros(stop - start, dtype=object if big else np.int64)
    ok = np.ones(stop - start, dtype=bool)
    for c in f.constraints:
        h = _holds(c, bits)
        if c.hard:
            ok &= h
        else:
            total = total + np.where(h, c.weight, 0)
    return np.where(ok, total, NEG_INF)


def _check_size(n):
    if n > MAX_VARS:
        raise OracleTooLarge(f"{n} variables exceed the oracle limit of {MAX_VARS}")


def _chunks(n):
    size = 1 << n
    step = 1 << CHUNK_BITS
    for start in range(0, size, step):
        yield start, min(size, start + step)


def _as_set(i, n):
    return frozenset(v for v in range(1, n + 1) if (i >> (v - 1)) & 1)


def all_values(f):
    """Objective for every assignment, indexed by binary counting."""
    _check_size(f.num_vars)
    return np.concatenate([_values(f, a, b) for a, b in _chunks(f.num_vars)])


def _extreme(f, largest):
    _check_size(f.num_vars)
    n = f.num_vars
    best = None
    hits = []
    for a, b in _chunks(n):
        vals = _values(f, a, b)
        m = vals.max() if largest else vals.min()
        if best is None or (m > best if largest else m < best):
            best = m
            hits = []
        if m == best:
            hits.extend(a + int(i) for i in np.flatnonzero(vals == best))
    return OracleResult(int(best), [_as_set(i, n) for i in hits])


def brute_max(f):
    """Maximum satisfied weight and all assignments attaining it."""
    return _extreme(f, True)


def brute_min(f):
    """Minimum of the objective and all assignments attaining it."""
    return _extreme(f, False)


def _index_map(vs, n):
    """Full-assignment index contributed by each assignment of `vs`."""
    vs = sorted(vs)
    k = len(vs)
    sub = np.arange(1 << k, dtype=np.int64)
    out = np.zeros(1 << k, dtype=np.int64)
    for pos, v in enumerate(vs):
        out |= ((sub >> pos) & 1) << (v - 1)
    return out, vs


def _two_level(f, outer, inner, outer_pick, inner_pick):
    if not f.has_partition:
        raise ValueError("two-level oracle needs a min/max partition")
    n = f.num_vars
    _check_size(n)
    vals = all_values(f)
    o_idx, o_vars = _index_map(outer, n)
    i_idx, _ = _index_map(inner, n)
    table = vals[o_idx[:, None] + i_idx[None, :]]
    arg = (np.argmax if inner_pick == "max" else np.argmin)(table, axis=1)
    branch = table[np.arange(table.shape[0]), arg]
    value = branch.max() if outer_pick == "max" else branch.min()
    responses = {}
    branch_values = {}
    for r in range(table.shape[0]):
        key = frozenset(v for p, v in enumerate(o_vars) if (r >> p) & 1)
        responses[key] = _as_set(int(i_idx[arg[r]]), n)
        branch_values[key] = int(branch[r])
    return OracleResult(int(value), responses=responses, branch_values=branch_values)


def brute_minmax(f):
    """min over min-variable assignments of max over max-variable ones."""
    if not f.has_partition:
        raise ValueError("two-level oracle needs a min/max partition")
    return _two_level(f, f.min_vars, f.max_vars, "min", "max")


def brute_maxmin(f):
    """max over max-variable assignments of min over min-variable ones."""
    if not f.has_partition:
        raise ValueError("two-level oracle needs a min/max partition")
    return _two_level(f, f.max_vars, f.min_vars, "max", "min")

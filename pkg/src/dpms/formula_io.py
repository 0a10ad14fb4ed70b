"""Reading and writing problem files, and synthetic instance generators.

Hybrid files (``.hwcnf``)::

    c comment
    p hwcnf <n> <m> <top>
    a <var>... 0                       min-quantified block
    e <var>... 0                       max-quantified block
    <w> <lit>... 0                     clause
    x <w> <lit>... 0                   XOR, odd number of literals true
    d <w> <k> <lit>... 0               at least k literals true
    g <w> <rhs> (<coef> <lit>)... 0    sum of coef*lit >= rhs

A weight equal to (or above) `top` marks a hard constraint.  Weights may
be decimals; all weights of a file are scaled by the least common
denominator so the solver works on exact integers.
"""
import math
import random
from fractions import Fraction

from .add import MAX_WEIGHT
from .constraints import CARD, CLAUSE, PB, XOR, Formula, card, clause, pb, xor


class ParseError(ValueError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _weight(tok, lineno):
    try:
        w = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad weight {tok!r}", lineno) from None
    if w <= 0:
        raise ParseError(f"weight must be positive, got {tok}", lineno)
    return w


def _ints(toks, lineno):
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(toks)!r}", lineno) from None


def _terminated(toks, lineno):
    if not toks or toks[-1] != "0":
        raise ParseError("line must end with 0", lineno)
    return toks[:-1]


def _scale_for(weights):
    scale = 1
    for w in weights:
        scale = scale * w.denominator // math.gcd(scale, w.denominator)
    return scale


def _scaled(w, scale, lineno):
    v = w * scale
    assert v.denominator == 1
    v = int(v)
    if v > MAX_WEIGHT:
        raise ParseError(f"weight {w} overflows after scaling by {scale}", lineno)
    return v


def _build(raw, top, num_vars, **kw):
    """Turn ``(kind, weight, payload, lineno)`` records into a Formula."""
    soft = [w for _, w, _, _ in raw if top is None or w < top]
    scale = _scale_for(soft)
    constraints = []
    total = 0
    for kind, w, payload, lineno in raw:
        hard = top is not None and w >= top
        sw = 0 if hard else _scaled(w, scale, lineno)
        total += sw
        if total > MAX_WEIGHT:
            raise ParseError("total soft weight overflows", lineno)
        for v in _payload_vars(kind, payload):
            if not 1 <= v <= num_vars:
                raise ParseError(f"variable {v} outside 1..{num_vars}", lineno)
        try:
            if kind == CLAUSE:
                c = clause(payload, sw, hard)
            elif kind == XOR:
                c = xor(payload, sw, hard)
            elif kind == CARD:
                k, lits = payload
                c = card(lits, k, sw, hard)
            else:
                rhs, terms = payload
                c = pb(terms, rhs, ">=", sw, hard)
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        constraints.append(c)
    return Formula(num_vars, tuple(constraints), scale=scale, **kw)


def _payload_vars(kind, payload):
    if kind in (CLAUSE, XOR):
        return [abs(l) for l in payload]
    if kind == CARD:
        return [abs(l) for l in payload[1]]
    return [abs(l) for _, l in payload[1]]


def parse_hwcnf(text):
    """Parse hybrid weighted CNF text into a `Formula`."""
    header = None
    raw = []
    blocks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        head = toks[0]
        if head == "p":
            if header is not None:
                raise ParseError("duplicate header", lineno)
            if len(toks) != 5 or toks[1] != "hwcnf":
                raise ParseError("expected 'p hwcnf <n> <m> <top>'", lineno)
            n, m = _ints(toks[2:4], lineno)
            if n < 0 or m < 0:
                raise ParseError("negative counts in header", lineno)
            header = (n, m, _weight(toks[4], lineno), lineno)
            continue
        if header is None:
            raise ParseError("constraint before header", lineno)
        if head in ("a", "e"):
            vs = _ints(_terminated(toks[1:], lineno), lineno)
            if any(v <= 0 for v in vs):
                raise ParseError("quantifier blocks list positive variables", lineno)
            q = "min" if head == "a" else "max"
            if blocks and blocks[-1][0] == q:
                blocks[-1][1].extend(vs)
            elif len(blocks) == 2:
                raise ParseError("more than one quantifier alternation", lineno)
            else:
                blocks.append((q, list(vs)))
            continue
        if head == "x":
            if len(toks) < 3:
                raise ParseError("truncated XOR line", lineno)
            w = _weight(toks[1], lineno)
            raw.append((XOR, w, _lits(toks[2:], lineno), lineno))
        elif head == "d":
            if len(toks) < 4:
                raise ParseError("truncated cardinality line", lineno)
            w = _weight(toks[1], lineno)
            (k,) = _ints(toks[2:3], lineno)
            raw.append((CARD, w, (k, _lits(toks[3:], lineno)), lineno))
        elif head == "g":
            if len(toks) < 4:
                raise ParseError("truncated PB line", lineno)
            w = _weight(toks[1], lineno)
            (rhs,) = _ints(toks[2:3], lineno)
            body = _ints(_terminated(toks[3:], lineno), lineno)
            if len(body) % 2:
                raise ParseError("PB terms come in (coef, lit) pairs", lineno)
            terms = list(zip(body[0::2], body[1::2]))
            if any(l == 0 for _, l in terms):
                raise ParseError("literal 0 inside PB terms", lineno)
            _check_distinct([l for _, l in terms], lineno)
            raw.append((PB, w, (rhs, terms), lineno))
        else:
            w = _weight(head, lineno)
            raw.append((CLAUSE, w, _lits(toks[1:], lineno), lineno))
    if header is None:
        raise ParseError("missing 'p hwcnf' header")
    n, m, top, hline = header
    if len(raw) != m:
        raise ParseError(f"header declares {m} constraints, found {len(raw)}", hline)
    kw = {}
    if blocks:
        quant = {}
        for q, vs in blocks:
            for v in vs:
                if v > n:
                    raise ParseError(f"quantified variable {v} outside 1..{n}")
                if v in quant:
                    raise ParseError(f"variable {v} quantified twice")
                quant[v] = q
        # unlisted variables join the max block
        min_vars = frozenset(v for v, q in quant.items() if q == "min")
        kw = dict(min_vars=min_vars,
                  max_vars=frozenset(range(1, n + 1)) - min_vars,
                  prefix=tuple(q for q, _ in blocks))
    return _build(raw, top, n, **kw)


def _lits(toks, lineno):
    lits = _ints(_terminated(toks, lineno), lineno)
    if any(l == 0 for l in lits):
        raise ParseError("literal 0 before end of line", lineno)
    _check_distinct(lits, lineno)
    return lits


def _check_distinct(lits, lineno):
    vs = [abs(l) for l in lits]
    if len(set(vs)) != len(vs):
        raise ParseError("duplicate variable in constraint", lineno)


def parse_wcnf(text):
    """Parse classic (``p wcnf``) or 2022-style (``h`` lines) weighted CNF."""
    header = None
    raw = []
    hard_lines = []
    max_var = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        if toks[0] == "p":
            if len(toks) not in (4, 5) or toks[1] != "wcnf":
                raise ParseError("expected 'p wcnf <n> <m> [<top>]'", lineno)
            n, m = _ints(toks[2:4], lineno)
            top = _weight(toks[4], lineno) if len(toks) == 5 else None
            header = (n, m, top, lineno)
            continue
        if toks[0] == "h":
            lits = _lits(toks[1:], lineno)
            hard_lines.append(len(raw))
            raw.append((CLAUSE, None, lits, lineno))
        else:
            w = _weight(toks[0], lineno)
            lits = _lits(toks[1:], lineno)
            raw.append((CLAUSE, w, lits, lineno))
        max_var = max([max_var] + [abs(l) for l in raw[-1][2]])
    if header is not None:
        n, m, top, hline = header
        if len(raw) != m:
            raise ParseError(f"header declares {m} clauses, found {len(raw)}", hline)
        if max_var > n:
            raise ParseError(f"variable {max_var} exceeds declared {n}")
    else:
        n, top = max_var, None
    if hard_lines:
        # a top weight strictly above every soft weight marks 'h' clauses hard
        softs = [w for _, w, _, _ in raw if w is not None]
        top = max(softs + [top or 0]) + 1 if top is None else top
        raw = [(k, top if w is None else w, p, ln) for k, w, p, ln in raw]
    return _build(raw, top, n)


def read_formula(text):
    """Dispatch on the header: ``p wcnf`` / ``h`` lines go to the WCNF reader."""
    for line in text.splitlines():
        toks = line.split()
        if not toks or toks[0] == "c":
            continue
        if toks[0] == "p":
            return parse_wcnf(text) if toks[1:2] == ["wcnf"] else parse_hwcnf(text)
        return parse_wcnf(text)
    return parse_wcnf(text)


def format_weight(w):
    if w.denominator == 1:
        return str(w.numerator)
    # scales come from decimal inputs, so the expansion terminates
    s = f"{w.numerator / w.denominator!r}"
    if Fraction(s) == w:
        return s
    return f"{w.numerator}/{w.denominator}"


def write_hwcnf(f):
    """Render `f` in the hybrid format; inverse of `parse_hwcnf`."""
    top = Fraction(f.total_soft_weight, f.scale) + 1
    out = [f"p hwcnf {f.num_vars} {len(f.constraints)} {format_weight(top)}"]
    if f.has_partition:
        for q in f.prefix:
            vs = sorted(f.min_vars if q == "min" else f.max_vars)
            out.append(("a " if q == "min" else "e ") + " ".join(map(str, vs + [0])))
    for c in f.constraints:
        w = format_weight(top if c.hard else Fraction(c.weight, f.scale))
        if c.kind == CLAUSE:
            out.append(" ".join([w] + [str(l) for l in c.lits] + ["0"]))
        elif c.kind == XOR:
            lits = list(c.lits)
            if c.parity == 0:
                if not lits:
                    raise ValueError("an even-parity XOR over no variables has no hwcnf form")
                lits[0] = -lits[0]
            out.append(" ".join(["x", w] + [str(l) for l in lits] + ["0"]))
        elif c.kind == CARD:
            out.append(" ".join(["d", w, str(c.k)] + [str(l) for l in c.lits] + ["0"]))
        else:
            coefs, rhs = list(c.coefs), c.rhs
            if c.cmp == "<=":
                coefs, rhs = [-a for a in coefs], -rhs
            elif c.cmp == "=":
                raise ValueError("PB equalities have no hwcnf form")
            body = [f"{a} {l}" for a, l in zip(coefs, c.lits)]
            out.append(" ".join(["g", w, str(rhs)] + body + ["0"]))
    return "\n".join(out) + "\n"


def write_wcnf(f):
    """Classic WCNF; clauses only."""
    top = Fraction(f.total_soft_weight, f.scale) + 1
    out = [f"p wcnf {f.num_vars} {len(f.constraints)} {format_weight(top)}"]
    for c in f.constraints:
        if c.kind != CLAUSE:
            raise ValueError("WCNF holds clauses only")
        w = format_weight(top if c.hard else Fraction(c.weight, f.scale))
        out.append(" ".join([w] + [str(l) for l in c.lits] + ["0"]))
    return "\n".join(out) + "\n"


# -- generators --------------------------------------------------------------

def gen_chain(n, k, seed=0):
    """Chain formula: constraint i covers x_i..x_{i+k-1}, XOR or CARD at random."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = random.Random(seed)
    cs = []
    for i in range(1, n - k + 2):
        vs = list(range(i, i + k))
        if rng.random() < 0.5:
            cs.append(xor(vs, parity=rng.randint(0, 1)))
        else:
            cs.append(card(vs, rng.randint(1, k)))
    return Formula(n, tuple(cs))


def _count(alpha, n):
    return int(math.floor(alpha * n + 1e-9))


def gen_random(n, alpha_c, alpha_x, k, family="card", seed=0):
    """Random CARD-XOR or PB-XOR formula with `k` variables per constraint."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if alpha_c < 0 or alpha_x < 0:
        raise ValueError("densities must be nonnegative")
    family = family.lower()
    if family not in ("card", "pb"):
        raise ValueError(f"family must be 'card' or 'pb', got {family!r}")
    rng = random.Random(seed)
    cs = []
    for _ in range(_count(alpha_c, n)):
        vs = rng.sample(range(1, n + 1), k)
        if family == "card":
            cs.append(card(vs, rng.randint(1, k)))
        else:
            coefs = [rng.choice((-1, 1)) * rng.randint(1, 5) for _ in vs]
            lo = sum(a for a in coefs if a < 0)
            hi = sum(a for a in coefs if a > 0)
            rhs = rng.randint(lo + 1, hi) if lo + 1 <= hi else hi
            cs.append(pb(zip(coefs, vs), rhs))
    for _ in range(_count(alpha_x, n)):
        vs = rng.sample(range(1, n + 1), k)
        cs.append(xor(vs, parity=rng.randint(0, 1)))
    return Formula(n, tuple(cs))


def gen_hybrid(n, m, seed=0, max_arity=4, max_weight=8, hard_ratio=0.1,
               kinds=(CLAUSE, XOR, CARD, PB)):
    """Small mixed formula with random weights, used for oracle checks."""
    rng = random.Random(seed)
    cs = []
    for _ in range(m):
        kind = rng.choice(kinds)
        l = rng.randint(1, min(max_arity, n))
        vs = rng.sample(range(1, n + 1), l)
        lits = [v if rng.random() < 0.5 else -v for v in vs]
        hard = rng.random() < hard_ratio
        w = rng.randint(1, max_weight)
        if kind == CLAUSE:
            cs.append(clause(lits, w, hard))
        elif kind == XOR:
            cs.append(xor(vs, w, hard, parity=rng.randint(0, 1)))
        elif kind == CARD:
            cs.append(card(lits, rng.randint(1, l), w, hard))
        else:
            coefs = [rng.choice((-1, 1)) * rng.randint(1, 4) for _ in lits]
            rhs = rng.randint(sum(a for a in coefs if a < 0), sum(a for a in coefs if a > 0))
            cs.append(pb(zip(coefs, lits), rhs, rng.choice((">=", "<=")), w, hard))
    return Formula(n, tuple(cs))


def with_partition(f, min_vars, prefix=("min", "max")):
    """Copy of `f` with the given min-quantified variables."""
    min_vars = frozenset(min_vars)
    return Formula(f.num_vars, f.constraints, min_vars=min_vars,
                   max_vars=frozenset(f.variables) - min_vars, prefix=prefix,
                   scale=f.scale)


def random_partition(f, seed=0, min_fraction=0.5, prefix=("min", "max")):
    rng = random.Random(seed)
    min_vars = {v for v in f.variables if rng.random() < min_fraction}
    return with_partition(f, min_vars, prefix)

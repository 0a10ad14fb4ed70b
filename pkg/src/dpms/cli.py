"""Command-line interface: solve, gen, plan, verify."""
import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import bounds, executor, formula_io, oracle
from .add import AddError
from .constraints import objective_value
from .planner import HEURISTICS, MIN_FILL, PlanError, dump_plan

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RESOURCE = 2
EXIT_MISMATCH = 3

NODE_CAP_ENV = "DPMS_NODE_CAP"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bound_spec(text):
    if text in ("none", "fallback"):
        return (text, None)
    kind, _, arg = text.partition(":")
    try:
        if kind == "ls":
            ms = int(arg)
            if ms < 0:
                raise ValueError
            return ("ls", ms)
        if kind == "fixed":
            u = Fraction(arg)
            if u < 0:
                raise ValueError
            return ("fixed", u)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad bound {text!r}; use none, fallback, ls:<ms> or fixed:<U>")


def _solver_flags(p):
    p.add_argument("--mode", default="auto", choices=("auto",) + executor.MODES)
    p.add_argument("--heuristic", default=MIN_FILL, choices=HEURISTICS)
    p.add_argument("--seed", type=int, default=None, help="planner tie-breaking seed")


def build_parser():
    p = _Parser(prog="dpms", description="Decision-diagram solver for hybrid MaxSAT and Min-MaxSAT.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one or more formula files")
    s.add_argument("inputs", nargs="+")
    _solver_flags(s)
    s.add_argument("--bound", type=_bound_spec, default=("none", None),
                   help="cost bound for pruning: none, fallback, ls:<ms>, fixed:<U>")
    s.add_argument("--executor", default=executor.STANDARD, choices=(executor.STANDARD, executor.BASIC))
    s.add_argument("--max-impl", default=None, choices=(executor.COFACTOR, executor.COMPOSE))
    s.add_argument("--emit-assignment", action="store_true")
    s.add_argument("--oracle-check", action="store_true")
    s.add_argument("--stats", action="store_true")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--dump-add", type=int, default=None, metavar="NODE",
                   help="write the DOT of a tree node's valuation to stderr")

    g = sub.add_parser("gen", help="generate a formula")
    g.add_argument("family", choices=("chain", "random", "hybrid"))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--m", type=int, default=None, help="constraint count (hybrid)")
    g.add_argument("--alpha-c", type=float, default=1.0)
    g.add_argument("--alpha-x", type=float, default=1.0)
    g.add_argument("--pb", action="store_true", help="PB-XOR instead of CARD-XOR (random)")
    g.add_argument("--minmax", type=float, default=None, metavar="FRACTION",
                   help="add a min/max prefix with this share of min variables")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default=None)

    pl = sub.add_parser("plan", help="print the project-join tree")
    pl.add_argument("input")
    _solver_flags(pl)

    v = sub.add_parser("verify", help="compare the solver with brute force")
    v.add_argument("input")
    _solver_flags(v)
    v.add_argument("--executor", default=executor.STANDARD, choices=(executor.STANDARD, executor.BASIC))
    v.add_argument("--max-impl", default=None, choices=(executor.COFACTOR, executor.COMPOSE))
    return p


def _read(path):
    with open(path) as fh:
        return formula_io.read_formula(fh.read())


def _node_cap():
    raw = os.environ.get(NODE_CAP_ENV)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{NODE_CAP_ENV} must be an integer, got {raw!r}") from None


def _cost_text(cost, scale):
    return formula_io.format_weight(Fraction(cost, scale))


def _bound(f, spec, seed):
    """Scaled cost bound, its report text, and local search milliseconds."""
    kind, arg = spec
    if kind == "none":
        return None, "none", 0.0
    if kind == "fallback":
        r = bounds.fallback_bound(f)
        return r.U, _cost_text(r.U, f.scale), 0.0
    if kind == "fixed":
        u = math.ceil(arg * f.scale)
        return u, _cost_text(u, f.scale), 0.0
    r = bounds.local_search_bound(f, budget_ms=arg, seed=seed or 0)
    return r.U, _cost_text(r.U, f.scale), r.elapsed


def _oracle_lines(f, res):
    """Cross-check `res` against brute force; returns (lines, agrees)."""
    if f.num_vars > oracle.MAX_VARS:
        return [f"c oracle skipped: {f.num_vars} variables"], True
    if res.mode == executor.MAXSAT:
        expect = oracle.brute_max(f).value
    elif res.mode == executor.MINSAT:
        expect = oracle.brute_min(f).value
    elif res.mode == executor.MINMAX:
        expect = oracle.brute_minmax(f).value
    else:
        expect = oracle.brute_maxmin(f).value
    ok = expect == res.optimum
    lines = [f"c oracle {'agrees' if ok else 'MISMATCH'} value {expect}"]
    if res.assignment is not None:
        got = objective_value(f, res.assignment)
        if got != res.optimum:
            ok = False
            lines.append(f"c assignment MISMATCH value {got}")
    return lines, ok


def run_solve(path, args):
    """Solve one file; returns ``(exit code, stdout text, stderr text)``."""
    out, err = [], []
    try:
        f = _read(path)
        mode = executor.resolve_mode(f, args.mode)
        cap = _node_cap()
        t0 = time.perf_counter()
        U, u_text, ls_ms = _bound(f, args.bound, args.seed) if mode == executor.MAXSAT else (None, "none", 0.0)
        if args.bound[0] != "none" and mode != executor.MAXSAT:
            err.append("c bound ignored: pruning applies to MaxSAT only")
        res = executor.solve(f, mode=mode, heuristic=args.heuristic, seed=args.seed,
                             executor=args.executor, max_impl=args.max_impl,
                             maximizer=args.emit_assignment or args.oracle_check or mode != executor.MAXSAT,
                             bound=U, node_cap=cap, record_valuations=args.dump_add is not None)
        total_ms = (time.perf_counter() - t0) * 1000
    except (formula_io.ParseError, PlanError, ValueError, UsageError, OSError) as e:
        return EXIT_USAGE, "", f"c error: {e}\n"
    except (executor.NodeCapExceeded, MemoryError, RecursionError, AddError, OverflowError) as e:
        return EXIT_RESOURCE, "s UNKNOWN\n", f"c resource limit: {e}\n"

    code = EXIT_OK
    if res.status == executor.HARD_UNSAT:
        out.append("s HARD UNSATISFIABLE")
    else:
        out.append("s OPTIMUM FOUND")
        out.append(f"o {_cost_text(res.cost, f.scale)}")
        if mode != executor.MAXSAT:
            out.append(f"c value {_cost_text(res.optimum, f.scale)}")
        if args.emit_assignment and res.assignment is not None:
            lits = [v if v in res.assignment else -v for v in f.variables]
            out.append("v " + " ".join(map(str, lits)))
    if args.stats:
        st = res.stats
        out += [f"c width {st.width}", f"c peak-nodes {st.peak_nodes}",
                f"c plan-ms {st.plan_ms:.1f}", f"c solve-ms {st.solve_ms:.1f}",
                f"c ls-ms {ls_ms:.1f}", f"c total-ms {total_ms:.1f}", f"c bound {u_text}"]
    if args.oracle_check:
        lines, ok = _oracle_lines(f, res)
        out += lines
        if not ok:
            code = EXIT_MISMATCH
    if args.dump_add is not None:
        vals = res.valuations or {}
        if args.dump_add not in vals:
            err.append(f"c no valuation for node {args.dump_add}")
        else:
            a = vals[args.dump_add]
            for i, member in enumerate(a if isinstance(a, list) else [a]):
                err.append(res.manager.to_dot(member, name=f"node{args.dump_add}_{i}").rstrip())
    return code, "\n".join(out) + "\n", "\n".join(err) + ("\n" if err else "")


def _solve_job(item):
    path, args = item
    return run_solve(path, args)


def cmd_solve(args):
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    items = [(p, args) for p in args.inputs]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_solve_job, items))
    else:
        results = [_solve_job(it) for it in items]
    code = EXIT_OK
    many = len(items) > 1
    for (path, _), (rc, out, err) in zip(items, results):
        if many:
            sys.stdout.write(f"c file {path}\n")
        sys.stdout.write(out)
        sys.stdout.flush()
        sys.stderr.write(err)
        code = max(code, rc)
    return code


def cmd_gen(args):
    if args.family == "chain":
        f = formula_io.gen_chain(args.n, args.k, args.seed)
    elif args.family == "random":
        f = formula_io.gen_random(args.n, args.alpha_c, args.alpha_x, args.k,
                                  "pb" if args.pb else "card", args.seed)
    else:
        m = args.m if args.m is not None else args.n
        f = formula_io.gen_hybrid(args.n, m, args.seed)
    if args.minmax is not None:
        f = formula_io.random_partition(f, args.seed, args.minmax)
    text = formula_io.write_hwcnf(f)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plan(args):
    f = _read(args.input)
    mode = executor.resolve_mode(f, args.mode)
    t = executor.plan(f, mode, args.heuristic, args.seed)
    sys.stdout.write(dump_plan(t, f))
    return EXIT_OK


def cmd_verify(args):
    f = _read(args.input)
    mode = executor.resolve_mode(f, args.mode)
    res = executor.solve(f, mode=mode, heuristic=args.heuristic, seed=args.seed,
                         executor=args.executor, max_impl=args.max_impl, node_cap=_node_cap())
    lines, ok = _oracle_lines(f, res)
    sys.stdout.write(f"c solver value {res.optimum}\n" + "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_MISMATCH


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "gen": cmd_gen, "plan": cmd_plan, "verify": cmd_verify}[args.subcommand]
    try:
        return handler(args)
    except (formula_io.ParseError, PlanError, UsageError, ValueError, OSError) as e:
        sys.stderr.write(f"c error: {e}\n")
        return EXIT_USAGE
    except (executor.NodeCapExceeded, MemoryError, RecursionError, AddError, OverflowError) as e:
        sys.stderr.write(f"c resource limit: {e}\n")
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())

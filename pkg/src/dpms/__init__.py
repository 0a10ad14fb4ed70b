"""Dynamic-programming MaxSAT over algebraic decision diagrams."""
from .add import NEG_INF, POS_INF, Add, AddManager
from .constraints import Constraint, Formula, card, clause, pb, xor
from .executor import SolveResult, construct_maximizer, evaluate_strategy, solve
from .formula_io import parse_hwcnf, parse_wcnf, read_formula, write_hwcnf

__all__ = [
    "NEG_INF", "POS_INF", "Add", "AddManager",
    "Constraint", "Formula", "card", "clause", "pb", "xor",
    "SolveResult", "construct_maximizer", "evaluate_strategy", "solve",
    "parse_hwcnf", "parse_wcnf", "read_formula", "write_hwcnf",
]

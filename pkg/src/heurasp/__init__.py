"""Lazy-grounding answer set solving with declarative domain-specific heuristics."""

from .parser import ParseError, parse_program, pretty_print
from .solver import SolveConfig, SolveResult, solve, solve_text
from .transform import SafetyError, TransformError, canonicalize
from .heuristics import HeuristicError

__all__ = [
    "ParseError", "parse_program", "pretty_print",
    "SolveConfig", "SolveResult", "solve", "solve_text",
    "SafetyError", "TransformError", "canonicalize", "HeuristicError",
]

__version__ = "0.1.0"

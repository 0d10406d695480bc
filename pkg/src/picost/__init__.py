"""Span and work analysis for a tick-instrumented pi-calculus.

Modules:

- :mod:`picost.syntax` processes, substitution, congruence, canonical forms
- :mod:`picost.parser` / :mod:`picost.pretty` concrete syntax
- :mod:`picost.index` index expressions, constraints and entailment
- :mod:`picost.sem` reduction, time steps, span and work runners
- :mod:`picost.iotypes` input/output types
- :mod:`picost.spantypes` sized types with time (span bounds)
- :mod:`picost.worktypes` sized types without time (work bounds)
- :mod:`picost.program` / :mod:`picost.cli` program files and the command line
"""

from .parser import ParseError, parse_expr, parse_process, parse_program, parse_type
from .pretty import pretty
from .program import check, load, run
from .sem import Deterministic, Exhaustive, RandomPolicy, RunReport, run_span, run_work

__all__ = [
    "ParseError", "parse_expr", "parse_process", "parse_program", "parse_type", "pretty",
    "check", "load", "run", "Deterministic", "Exhaustive", "RandomPolicy", "RunReport", "run_span", "run_work",
]

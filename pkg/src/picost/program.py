"""Program files: loading, checking in each mode, binding parameters, running.

The bundled example programs live in ``picost/corpus`` and are reachable by
short name through :func:`corpus_path` and :func:`load`.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal, Mapping

from . import index as ix
from .index import EntailmentConfig
from .iotypes import SimpleTypeError, from_syntax as simple_from_syntax, typecheck_simple
from .parser import Program, parse_expr, parse_program
from .sem import Exhaustive, RunReport, SchedulePolicy, run_span, run_work
from .spantypes import DeclarationVerdict, check_span_declaration
from .syntax import Expr, Name, Process, expr_names, free_names, par, substitute
from .worktypes import check_work_declaration

Mode = Literal["io", "span", "work"]

CORPUS = ("mergesort", "mergesort-comm", "merge-wrong-bound", "mergesort-wrong-bound", "alt-merge", "tick-race", "empty")


def corpus_path(name: str) -> Path:
    """Path of a bundled program, by short name (``"mergesort"``) or file name."""
    fname = name if name.endswith(".pi") else f"{name}.pi"
    return Path(str(resources.files("picost") / "corpus" / fname))


def load(name_or_path: str | Path) -> Program:
    p = Path(name_or_path)
    if not p.exists():
        p = corpus_path(str(name_or_path))
    return parse_program(p.read_text())


def check_io(program: Program) -> list[DeclarationVerdict]:
    ctx = {}
    for d in program.definitions:
        sig = d.span_sig or d.work_sig
        if sig is not None:
            ctx[Name(d.name)] = simple_from_syntax(sig)
    for prm in program.params:
        ctx[Name(prm.name)] = simple_from_syntax(prm.span_sig)
    verdicts = []
    bodies = [(d.name, d.body) for d in program.definitions]
    if program.main is not None:
        bodies.append(("main", program.main))
    for name, body in bodies:
        try:
            typecheck_simple(ctx, body)
            verdicts.append(DeclarationVerdict(name, True))
        except SimpleTypeError as err:
            verdicts.append(DeclarationVerdict(name, False, message=str(err)))
    return verdicts


def check(program: Program, mode: Mode, cfg: EntailmentConfig | None = None) -> list[DeclarationVerdict]:
    """Per-declaration verdicts for ``mode``; also reports names nobody declared."""
    match mode:
        case "io":
            verdicts = check_io(program)
        case "span":
            verdicts = check_span_declaration(program, cfg)
        case "work":
            verdicts = check_work_declaration(program, cfg)
        case _:
            raise ValueError(f"unknown mode {mode!r}")
    declared = {d.name for d in program.definitions} | {p.name for p in program.params}
    undeclared = sorted(n.ident for n in free_names(program.whole()) if n.ident not in declared)
    if undeclared:
        verdicts.append(DeclarationVerdict("<names>", False, message=f"undeclared names: {', '.join(undeclared)}"))
    return verdicts


class BindingError(ValueError):
    pass


def bind(program: Program, bindings: Mapping[str, str | Expr]) -> Process:
    """Definitions in parallel with ``main``, parameters replaced by the bound values."""
    if program.main is None:
        raise BindingError("the program has no main process")
    params = {p.name for p in program.params}
    formals, actuals = [], []
    free = {n.ident: n for n in free_names(program.main)}
    for key, value in bindings.items():
        if key not in params:
            raise BindingError(f"{key} is not a parameter of this program")
        e = parse_expr(value) if isinstance(value, str) else value
        if expr_names(e):
            raise BindingError(f"value for {key} must be closed, found names {sorted(n.ident for n in expr_names(e))}")
        if key in free:
            formals.append(free[key])
            actuals.append(e)
    main = substitute(program.main, formals, actuals)
    whole = par(*(d.body for d in program.definitions), main)
    defined = {d.name for d in program.definitions}
    missing = sorted(n.ident for n in free_names(whole) if n.ident not in defined)
    if missing:
        raise BindingError(f"unbound parameters: {', '.join(missing)}; pass --bind NAME=VALUE")
    return whole


def run(program: Program, mode: Literal["span", "work"], policy: SchedulePolicy,
        max_steps: int = 100_000, bindings: Mapping[str, str | Expr] | None = None,
        tick_last: bool = True) -> RunReport:
    p = bind(program, bindings or {})
    if mode == "span":
        return run_span(p, policy, max_steps, tick_last=tick_last if isinstance(policy, Exhaustive) else True)
    if mode == "work":
        return run_work(p, policy, max_steps)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Bound:
    """A declared complexity together with the program's index environment, ready to evaluate."""

    expr: ix.IndexExpr
    program: Program

    def at(self, valuation: Mapping[str, int]) -> int:
        return ix.eval_index(self.expr, valuation, self.program.functions or None)


def main_bound(program: Program, mode: Literal["span", "work"]) -> Bound | None:
    e = program.main_bound if mode == "span" else program.main_work_bound
    return None if e is None else Bound(e, program)

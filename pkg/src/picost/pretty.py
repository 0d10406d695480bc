"""Rendering of processes and expressions in the concrete syntax.

The output is accepted by :mod:`picost.parser`, so ``parse(pretty(p))`` gives
back ``p`` up to renaming of bound names.
"""

from __future__ import annotations

from .syntax import (
    Cons, Expr, FalseE, If, Inp, MatchList, MatchNat, New, Nil, Out, Par, PNil, Process,
    Serv, Succ, Tick, TrueE, Var, Zero, as_int, as_list,
)


def pretty_expr(e: Expr) -> str:
    n = as_int(e)
    if n is not None:
        return str(n)
    items = as_list(e)
    if items is not None and items:
        return "[" + ", ".join(pretty_expr(x) for x in items) + "]"
    match e:
        case Var(name):
            return name.ident
        case Nil():
            return "[]"
        case Succ(a):
            return f"s({pretty_expr(a)})"
        case Cons(h, t):
            head = pretty_expr(h)
            if isinstance(h, Cons) and as_list(h) is None:
                head = f"({head})"
            return f"{head}::{pretty_expr(t)}"
        case TrueE():
            return "true"
        case FalseE():
            return "false"
    raise TypeError(e)


def _names(ns) -> str:
    return ", ".join(n.ident for n in ns)


def _tight(p: Process, annotate: bool) -> str:
    s = pretty(p, annotate)
    return f"({s})" if isinstance(p, Par) else s


def pretty(p: Process, annotate: bool = True) -> str:
    """Concrete syntax for ``p``; ``annotate=False`` drops types and instantiations."""
    match p:
        case PNil():
            return "0"
        case Par(l, r):
            return f"{_tight(l, annotate)} | {pretty(r, annotate)}"
        case Serv(a, vs, body):
            return f"!{a.ident}({_names(vs)}).{_tight(body, annotate)}"
        case Inp(a, vs, body):
            return f"{a.ident}({_names(vs)}).{_tight(body, annotate)}"
        case Out(a, args, inst):
            s = f"{a.ident}<{', '.join(pretty_expr(e) for e in args)}>"
            if annotate and inst is not None:
                s += "@[" + ", ".join(str(i) for i in inst) + "]"
            return s
        case New(a, body, ann):
            t = f" : {ann}" if annotate and ann is not None else ""
            return f"new {a.ident}{t} in {_tight(body, annotate)}"
        case MatchNat(e, z, x, s):
            return f"match {pretty_expr(e)} {{ 0 -> {pretty(z, annotate)}; s({x.ident}) -> {pretty(s, annotate)} }}"
        case MatchList(e, n, x, y, c):
            return (
                f"match {pretty_expr(e)} {{ [] -> {pretty(n, annotate)}; "
                f"{x.ident}::{y.ident} -> {pretty(c, annotate)} }}"
            )
        case If(e, t, f):
            return f"if {pretty_expr(e)} then {pretty(t, annotate)} else {_tight(f, annotate)}"
        case Tick(body):
            return f"tick.{_tight(body, annotate)}"
    raise TypeError(p)

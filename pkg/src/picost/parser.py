"""Concrete syntax: processes, expressions, indices, types and program files.

Parsing is followed by two passes. Bound names that clash with another binder
or with a free name are renamed apart, and every name gets its kind (base or
channel) by a small unification over channel arities and argument positions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable

from . import index as ix
from .index import Constraint, IndexExpr
from .syntax import (
    Cons, Expr, FalseE, If, Inp, Kind, MatchList, MatchNat, Name, New, Nil, Out, Par, PNil,
    Process, Serv, Succ, Tick, TrueE, Var, Zero, expr_names, free_names, fresh, nat,
)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line, self.col = line, col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>::|->|<=|>=|!=|[()\[\]{}<>,;.|!@:^=+*\-/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    toks, pos, line, start = [], 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            toks.append(Tok(kind, text, line, pos - start + 1))
        for k, ch in enumerate(text):
            if ch == "\n":
                line, start = line + 1, pos + k + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - start + 1))
    return toks


KEYWORDS = {"new", "in", "match", "if", "then", "else", "tick", "true", "false", "def", "main", "vars", "assume", "param", "func"}
TYPE_HEADS = {"Nat", "Bool", "List", "ch", "in", "out", "serv", "iserv", "oserv"}


@dataclass(frozen=True)
class TypeSyntax:
    """Type as written; each type system converts it to its own grammar."""

    head: str
    lo: IndexExpr | None = None
    hi: IndexExpr | None = None
    time: IndexExpr | None = None
    binders: tuple[str, ...] = ()
    cost: IndexExpr | None = None
    args: tuple["TypeSyntax", ...] = ()

    def __str__(self) -> str:
        match self.head:
            case "Bool":
                return "Bool"
            case "Nat":
                return "Nat" if self.lo is None else f"Nat[{self.lo}, {self.hi}]"
            case "List":
                size = "" if self.lo is None else f"[{self.lo}, {self.hi}]"
                return f"List{size}({self.args[0]})"
        t = "" if self.time is None else f"^{_atomic(self.time)}"
        args = ", ".join(map(str, self.args))
        if self.head in ("ch", "in", "out"):
            return f"{self.head}{t}({args})"
        bs = f"[{', '.join(self.binders)}]" if self.binders else ""
        return f"{self.head}{t}{bs}({self.cost}; {args})"


def _atomic(i: IndexExpr) -> str:
    s = str(i)
    return s if isinstance(i, (ix.IVar, ix.ILit)) or (isinstance(i, ix.IApp) and i.fn not in ix.INFIX) else f"({s})"


class _Parser:
    def __init__(self, src: str, functions: set[str] | None = None):
        self.toks = tokenize(src)
        self.pos = 0
        self.functions = {"max", "pow2"} | set(functions or ())

    # token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.text in texts and self.tok.kind != "eof"

    def take(self) -> Tok:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Tok:
        if self.tok.text != text:
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.take()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def fail(self, msg: str):
        raise ParseError(msg, self.tok.line, self.tok.col)

    def ident(self) -> str:
        if self.tok.kind != "id" or self.tok.text in KEYWORDS:
            self.fail(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.take().text

    def names(self, close: str) -> tuple[Name, ...]:
        out = []
        if not self.at(close):
            out.append(Name(self.ident()))
            while self.accept(","):
                out.append(Name(self.ident()))
        return tuple(out)

    # processes
    def process(self) -> Process:
        left = self.prefix()
        if self.accept("|"):
            return Par(left, self.process())
        return left

    def prefix(self) -> Process:
        t = self.tok
        if t.text == "0" and t.kind == "num":
            self.take()
            return PNil()
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if self.accept("!"):
            a = Name(self.ident())
            self.expect("(")
            vs = self.names(")")
            self.expect(")")
            self.expect(".")
            return Serv(a, vs, self.prefix())
        if self.accept("tick"):
            self.expect(".")
            return Tick(self.prefix())
        if self.accept("new"):
            ns = [Name(self.ident())]
            while self.accept(","):
                ns.append(Name(self.ident()))
            ann = self.type_() if self.accept(":") else None
            self.expect("in")
            body = self.prefix()
            for n in reversed(ns):
                body = New(n, body, ann)
            return body
        if self.accept("match"):
            return self.match_()
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            th = self.process()
            self.expect("else")
            return If(c, th, self.prefix())
        if t.kind == "id" and t.text not in KEYWORDS:
            a = Name(self.take().text)
            if self.accept("("):
                vs = self.names(")")
                self.expect(")")
                self.expect(".")
                return Inp(a, vs, self.prefix())
            if self.accept("<"):
                args = []
                if not self.at(">"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(">")
                inst = None
                if self.accept("@"):
                    self.expect("[")
                    inst = tuple(self.index_list("]"))
                    self.expect("]")
                return Out(a, tuple(args), inst)
            self.fail(f"expected '(' or '<' after {a.ident}")
        self.fail(f"expected a process, found {t.text or 'end of input'!r}")

    def match_(self) -> Process:
        e = self.expr()
        self.expect("{")
        if self.tok.kind == "num" and self.tok.text == "0":
            self.take()
            self.expect("->")
            z = self.process()
            self.expect(";")
            if self.tok.text != "s":
                self.fail("expected 's(' branch")
            self.take()
            self.expect("(")
            x = Name(self.ident())
            self.expect(")")
            self.expect("->")
            s = self.process()
            self.accept(";")
            self.expect("}")
            return MatchNat(e, z, x, s)
        self.expect("[")
        self.expect("]")
        self.expect("->")
        n = self.process()
        self.expect(";")
        x = Name(self.ident())
        self.expect("::")
        y = Name(self.ident())
        self.expect("->")
        c = self.process()
        self.accept(";")
        self.expect("}")
        return MatchList(e, n, x, y, c)

    # expressions
    def expr(self) -> Expr:
        head = self.expr_atom()
        if self.accept("::"):
            return Cons(head, self.expr())
        return head

    def expr_atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return nat(int(t.text))
        if self.accept("true"):
            return TrueE()
        if self.accept("false"):
            return FalseE()
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("["):
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
            self.expect("]")
            out: Expr = Nil()
            for it in reversed(items):
                out = Cons(it, out)
            return out
        if t.text == "s" and self.peek().text == "(":
            self.take()
            self.take()
            e = self.expr()
            self.expect(")")
            return Succ(e)
        return Var(Name(self.ident()))

    # indices
    def index(self) -> IndexExpr:
        left = self.index_term()
        while self.at("+", "-"):
            op = self.take().text
            left = ix.IApp(op, (left, self.index_term()))
        return left

    def index_term(self) -> IndexExpr:
        left = self.index_atom()
        while self.at("*"):
            self.take()
            left = ix.IApp("*", (left, self.index_atom()))
        return left

    def index_atom(self) -> IndexExpr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return ix.ILit(int(t.text))
        if self.accept("("):
            i = self.index()
            self.expect(")")
            return i
        if t.kind == "id" and t.text in self.functions and self.peek().text == "(":
            self.take()
            self.take()
            args = self.index_list(")")
            self.expect(")")
            return ix.IApp(t.text, tuple(args))
        if t.kind == "id":
            self.take()
            return ix.IVar(t.text)
        self.fail(f"expected an index, found {t.text or 'end of input'!r}")

    def index_list(self, close: str) -> list[IndexExpr]:
        out = []
        if not self.at(close):
            out.append(self.index())
            while self.accept(","):
                out.append(self.index())
        return out

    def constraint(self) -> Constraint:
        lhs = self.index()
        if not self.at("<=", "<", "=", "!=", ">=", ">"):
            self.fail("expected a relation")
        rel = self.take().text
        return ix.constraint(lhs, rel, self.index())

    def constraints(self) -> list[Constraint]:
        out = [self.constraint()]
        while self.accept(","):
            out.append(self.constraint())
        return out

    # types
    def type_(self) -> TypeSyntax:
        t = self.tok
        if t.kind != "id" or t.text not in TYPE_HEADS:
            self.fail(f"expected a type, found {t.text or 'end of input'!r}")
        head = self.take().text
        match head:
            case "Bool":
                return TypeSyntax("Bool")
            case "Nat":
                if self.accept("["):
                    lo = self.index()
                    self.expect(",")
                    hi = self.index()
                    self.expect("]")
                    return TypeSyntax("Nat", lo, hi)
                return TypeSyntax("Nat")
            case "List":
                lo = hi = None
                if self.accept("["):
                    lo = self.index()
                    self.expect(",")
                    hi = self.index()
                    self.expect("]")
                self.expect("(")
                elem = self.type_()
                self.expect(")")
                return TypeSyntax("List", lo, hi, args=(elem,))
        time = None
        if self.accept("^"):
            time = self.index_atom()
        if head in ("ch", "in", "out"):
            self.expect("(")
            args = self.types(")")
            self.expect(")")
            return TypeSyntax(head, time=time, args=tuple(args))
        binders: tuple[str, ...] = ()
        if self.accept("["):
            bs = []
            if not self.at("]"):
                bs.append(self.ident())
                while self.accept(","):
                    bs.append(self.ident())
            self.expect("]")
            binders = tuple(bs)
        self.expect("(")
        cost = self.index()
        args = []
        if self.accept(";"):
            args = self.types(")")
        self.expect(")")
        return TypeSyntax(head, time=time, binders=binders, cost=cost, args=tuple(args))

    def types(self, close: str) -> list[TypeSyntax]:
        out = []
        if not self.at(close):
            out.append(self.type_())
            while self.accept(","):
                out.append(self.type_())
        return out

    def done(self) -> None:
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}")


# ---------------------------------------------------------------------------
# Post-passes


def rename_apart(p: Process, reserved: set[str] | None = None) -> Process:
    """Give every binder a name distinct from all other binders and all free names."""
    used = {n.ident for n in free_names(p)} | set(reserved or ())

    def pick(n: Name) -> Name:
        if n.ident in used:
            n = fresh(n, [Name(u) for u in used])
        used.add(n.ident)
        return n

    def walk(q: Process, env: dict[str, Name]) -> Process:
        def nm(n: Name) -> Name:
            return env.get(n.ident, n)

        def ex(e: Expr) -> Expr:
            match e:
                case Var(n):
                    return Var(nm(n))
                case Succ(a):
                    return Succ(ex(a))
                case Cons(h, t):
                    return Cons(ex(h), ex(t))
                case _:
                    return e

        def bind(vs):
            new_vs = tuple(pick(v) for v in vs)
            return new_vs, {**env, **{v.ident: w for v, w in zip(vs, new_vs)}}

        match q:
            case PNil():
                return q
            case Par(l, r):
                return Par(walk(l, env), walk(r, env))
            case Serv(a, vs, b):
                vs2, inner = bind(vs)
                return Serv(nm(a), vs2, walk(b, inner))
            case Inp(a, vs, b):
                vs2, inner = bind(vs)
                return Inp(nm(a), vs2, walk(b, inner))
            case Out(a, args, inst):
                return Out(nm(a), tuple(ex(e) for e in args), inst)
            case New(a, b, ann):
                (a2,), inner = bind((a,))
                return New(a2, walk(b, inner), ann)
            case MatchNat(e, z, x, s):
                z2 = walk(z, env)
                (x2,), inner = bind((x,))
                return MatchNat(ex(e), z2, x2, walk(s, inner))
            case MatchList(e, n, x, y, c):
                n2 = walk(n, env)
                (x2, y2), inner = bind((x, y))
                return MatchList(ex(e), n2, x2, y2, walk(c, inner))
            case If(e, t, f):
                return If(ex(e), walk(t, env), walk(f, env))
            case Tick(b):
                return Tick(walk(b, env))
        raise TypeError(q)

    return walk(p, {})


class _Unifier:
    """Union-find over shapes: None (unknown), 'base', or a tuple of argument variables."""

    def __init__(self) -> None:
        self.parent: dict[Any, Any] = {}
        self.shape: dict[Any, Any] = {}
        self.counter = 0

    def find(self, v):
        self.parent.setdefault(v, v)
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def fresh(self):
        self.counter += 1
        return ("_t", self.counter)

    def set_base(self, v) -> None:
        self.unify_shape(v, "base")

    def chan_args(self, v, arity: int) -> tuple:
        r = self.find(v)
        s = self.shape.get(r)
        if isinstance(s, tuple):
            return s
        if s == "base":
            return tuple(self.fresh() for _ in range(arity))
        args = tuple(self.fresh() for _ in range(arity))
        self.shape[r] = args
        return args

    def mark_chan(self, v) -> None:
        self.unify_shape(v, "chan?")

    def unify_shape(self, v, s) -> None:
        # "chan?" is a channel of unknown arity; a base/channel conflict keeps the channel
        r = self.find(v)
        cur = self.shape.get(r)
        if s is None or cur == s:
            return
        if cur is None or (cur == "chan?" and isinstance(s, tuple)) or (cur == "base" and s != "base"):
            self.shape[r] = s
        elif isinstance(cur, tuple) and isinstance(s, tuple) and len(cur) == len(s):
            for a, b in zip(cur, s):
                self.union(a, b)

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        sa = self.shape.get(ra)
        self.parent[ra] = rb
        self.unify_shape(rb, sa)

    def is_chan(self, v) -> bool:
        return isinstance(self.shape.get(self.find(v)), tuple)


def infer_kinds(p: Process, channels: set[str] = frozenset()) -> Process:
    """Assign kinds to names; ``p`` must already have distinct binders."""
    u = _Unifier()
    for c in channels:
        u.mark_chan(c)

    def expr_pos(e: Expr, slot) -> None:
        match e:
            case Var(n):
                u.union(n.ident, slot)
            case _:
                u.set_base(slot)
                base_expr(e)

    def base_expr(e: Expr) -> None:
        for n in expr_names(e):
            u.set_base(n.ident)

    def walk(q: Process) -> None:
        match q:
            case Par(l, r) | If(_, l, r):
                if isinstance(q, If):
                    base_expr(q.cond)
                walk(l)
                walk(r)
            case Serv(a, vs, b) | Inp(a, vs, b):
                slots = u.chan_args(a.ident, len(vs))
                if len(slots) == len(vs):
                    for v, s in zip(vs, slots):
                        u.union(v.ident, s)
                walk(b)
            case Out(a, args, _):
                slots = u.chan_args(a.ident, len(args))
                if len(slots) == len(args):
                    for e, s in zip(args, slots):
                        expr_pos(e, s)
            case New(a, b, ann):
                if ann is not None and isinstance(ann, TypeSyntax):
                    u.chan_args(a.ident, len(ann.args))
                else:
                    u.mark_chan(a.ident)
                walk(b)
            case MatchNat(e, z, x, s):
                base_expr(e)
                u.set_base(x.ident)
                walk(z)
                walk(s)
            case MatchList(e, n, x, y, c):
                base_expr(e)
                u.set_base(x.ident)
                u.set_base(y.ident)
                walk(n)
                walk(c)
            case Tick(b):
                walk(b)

    walk(p)

    def kind(n: Name) -> Name:
        s = u.shape.get(u.find(n.ident))
        return Name(n.ident, Kind.CHAN if isinstance(s, tuple) or s == "chan?" or n.ident in channels else Kind.BASE)

    def ex(e: Expr) -> Expr:
        match e:
            case Var(n):
                return Var(kind(n))
            case Succ(a):
                return Succ(ex(a))
            case Cons(h, t):
                return Cons(ex(h), ex(t))
            case _:
                return e

    def re(q: Process) -> Process:
        match q:
            case PNil():
                return q
            case Par(l, r):
                return Par(re(l), re(r))
            case Serv(a, vs, b):
                return Serv(kind(a), tuple(map(kind, vs)), re(b))
            case Inp(a, vs, b):
                return Inp(kind(a), tuple(map(kind, vs)), re(b))
            case Out(a, args, inst):
                return Out(kind(a), tuple(map(ex, args)), inst)
            case New(a, b, ann):
                return New(kind(a), re(b), ann)
            case MatchNat(e, z, x, s):
                return MatchNat(ex(e), re(z), kind(x), re(s))
            case MatchList(e, n, x, y, c):
                return MatchList(ex(e), re(n), kind(x), kind(y), re(c))
            case If(e, t, f):
                return If(ex(e), re(t), re(f))
            case Tick(b):
                return Tick(re(b))
        raise TypeError(q)

    return re(p)


def _finish(p: Process, channels: set[str] = frozenset()) -> Process:
    return infer_kinds(rename_apart(p), set(channels))


# ---------------------------------------------------------------------------
# Public entry points


def parse_process(src: str) -> Process:
    ps = _Parser(src)
    p = ps.process()
    ps.done()
    return _finish(p)


def parse_expr(src: str) -> Expr:
    ps = _Parser(src)
    e = ps.expr()
    ps.done()
    return e


def parse_index(src: str, functions: set[str] | None = None) -> IndexExpr:
    ps = _Parser(src, functions)
    i = ps.index()
    ps.done()
    return i


def parse_constraint(src: str) -> Constraint:
    ps = _Parser(src)
    c = ps.constraint()
    ps.done()
    return c


def parse_constraints(src: str) -> list[Constraint]:
    ps = _Parser(src)
    cs = ps.constraints() if ps.tok.kind != "eof" else []
    ps.done()
    return cs


def parse_type(src: str) -> TypeSyntax:
    ps = _Parser(src)
    t = ps.type_()
    ps.done()
    return t


@dataclass
class Definition:
    name: str
    span_sig: TypeSyntax | None
    work_sig: TypeSyntax | None
    body: Process
    line: int = 0


@dataclass
class Param:
    name: str
    span_sig: TypeSyntax
    work_sig: TypeSyntax | None = None


@dataclass
class Program:
    variables: list[str] = field(default_factory=list)
    assumptions: list[Constraint] = field(default_factory=list)
    functions: dict[str, ix.FunctionSymbol] = field(default_factory=dict)
    definitions: list[Definition] = field(default_factory=list)
    params: list[Param] = field(default_factory=list)
    main: Process | None = None
    main_bound: IndexExpr | None = None
    main_work_bound: IndexExpr | None = None

    def env(self) -> ix.IndexEnv:
        return ix.IndexEnv(tuple(self.variables), tuple(self.assumptions))

    def whole(self, main: Process | None = None) -> Process:
        """All definitions in parallel with ``main`` (or the file's own main)."""
        from .syntax import par

        m = main if main is not None else self.main
        return par(*(d.body for d in self.definitions), *([m] if m is not None else []))


def _function_decl(ps: _Parser) -> ix.FunctionSymbol:
    # func NAME / ARITY { a, b -> v; ... } [default N]
    name = ps.ident()
    ps.expect("/")
    arity = int(ps.take().text)
    table: dict[tuple[int, ...], int] = {}
    ps.expect("{")
    while not ps.at("}"):
        point = [int(ps.take().text)]
        while ps.accept(","):
            point.append(int(ps.take().text))
        ps.expect("->")
        table[tuple(point)] = int(ps.take().text)
        if not ps.accept(";"):
            break
    ps.expect("}")
    default = 0
    if ps.tok.text == "default":
        ps.take()
        default = int(ps.take().text)
    return ix.table_symbol(name, arity, table, default)


def parse_program(src: str) -> Program:
    ps = _Parser(src)
    prog = Program()
    raw_defs: list[tuple[str, Any, Any, Process, int]] = []
    raw_main: Process | None = None
    while ps.tok.kind != "eof":
        t = ps.tok
        if ps.accept("vars"):
            prog.variables.append(ps.ident())
            while ps.accept(","):
                prog.variables.append(ps.ident())
            ps.accept(";")
        elif ps.accept("assume"):
            prog.assumptions.extend(ps.constraints())
            ps.accept(";")
        elif ps.accept("func"):
            sym = _function_decl(ps)
            prog.functions[sym.name] = sym
            ps.functions.add(sym.name)
            ps.accept(";")
        elif ps.accept("param"):
            name = ps.ident()
            ps.expect(":")
            span = ps.type_()
            work = None
            if ps.tok.text == "work":
                ps.take()
                ps.expect(":")
                work = ps.type_()
            prog.params.append(Param(name, span, work))
            ps.accept(";")
        elif ps.accept("def"):
            name = ps.ident()
            span = work = None
            if ps.accept(":"):
                span = ps.type_()
            if ps.tok.text == "work":
                ps.take()
                ps.expect(":")
                work = ps.type_()
            ps.expect("=")
            body = ps.process()
            ps.accept(";")
            raw_defs.append((name, span, work, body, t.line))
        elif ps.accept("main"):
            if ps.accept(":"):
                prog.main_bound = ps.index()
            if ps.tok.text == "work":
                ps.take()
                ps.expect(":")
                prog.main_work_bound = ps.index()
            ps.expect("=")
            raw_main = ps.process()
            ps.accept(";")
        else:
            ps.fail(f"expected a declaration, found {t.text!r}")
    # one renaming and kind pass over the whole program keeps binders distinct across definitions
    parts = [b for (_, _, _, b, _) in raw_defs] + ([raw_main] if raw_main is not None else [])
    channels = {name for (name, *_rest) in raw_defs}
    channels |= {p.name for p in prog.params if p.span_sig.head not in ("Nat", "Bool", "List")}
    whole = PNil()
    if parts:
        whole = parts[-1]
        for q in reversed(parts[:-1]):
            whole = Par(q, whole)
    whole = _finish(whole, channels)
    finished = _split_par(whole, len(parts))
    for (name, span, work, _, line), body in zip(raw_defs, finished):
        prog.definitions.append(Definition(name, span, work, body, line))
    if raw_main is not None:
        prog.main = finished[-1]
    return prog


def _split_par(p: Process, n: int) -> list[Process]:
    out = []
    for _ in range(n - 1):
        assert isinstance(p, Par)
        out.append(p.left)
        p = p.right
    if n:
        out.append(p)
    return out

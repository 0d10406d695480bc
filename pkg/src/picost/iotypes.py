"""Input/output types without sizes: subtyping, expression and process checking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .parser import TypeSyntax
from .syntax import (
    Cons, Expr, FalseE, If, Inp, MatchList, MatchNat, Name, New, Nil, Out, Par, PNil, Process,
    Serv, Succ, Tick, TrueE, Var, Zero,
)


@dataclass(frozen=True)
class NatT:
    def __str__(self) -> str:
        return "Nat"


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class ListT:
    elem: "SimpleType"

    def __str__(self) -> str:
        return f"List({self.elem})"


@dataclass(frozen=True)
class ChanT:
    mode: str  # "ch", "in" or "out"
    args: tuple["SimpleType", ...]

    def __str__(self) -> str:
        return f"{self.mode}({', '.join(map(str, self.args))})"


SimpleType = NatT | BoolT | ListT | ChanT
SimpleContext = Mapping[Name, SimpleType]

BASE_TYPES = (NatT, BoolT, ListT)


class SimpleTypeError(TypeError):
    pass


def from_syntax(t: TypeSyntax) -> SimpleType:
    """Read any written type as a simple type; sizes and times are ignored."""
    match t.head:
        case "Nat":
            return NatT()
        case "Bool":
            return BoolT()
        case "List":
            return ListT(from_syntax(t.args[0]))
        case "ch" | "in" | "out":
            return ChanT(t.head, tuple(map(from_syntax, t.args)))
        case "serv":
            return ChanT("ch", tuple(map(from_syntax, t.args)))
        case "iserv":
            return ChanT("in", tuple(map(from_syntax, t.args)))
        case "oserv":
            return ChanT("out", tuple(map(from_syntax, t.args)))
    raise SimpleTypeError(f"unknown type {t.head}")


def subtype_simple(t: SimpleType, u: SimpleType) -> bool:
    match t, u:
        case ChanT(m1, ts), ChanT(m2, us):
            if len(ts) != len(us):
                return False
            co = all(subtype_simple(a, b) for a, b in zip(ts, us))
            contra = all(subtype_simple(b, a) for a, b in zip(ts, us))
            match m1, m2:
                case ("ch", "ch"):
                    return co and contra
                case ("ch", "in") | ("in", "in"):
                    return co
                case ("ch", "out") | ("out", "out"):
                    return contra
            return False
        case ListT(a), ListT(b):
            return subtype_simple(a, b) and subtype_simple(b, a)
        case _:
            return t == u


def infer_expr(ctx: SimpleContext, e: Expr) -> SimpleType | None:
    """Least type of ``e``; ``None`` when it has none (or is an empty list with no element hint)."""
    match e:
        case Var(n):
            return ctx.get(n)
        case Zero():
            return NatT()
        case Succ(a):
            return NatT() if infer_expr(ctx, a) == NatT() else None
        case TrueE() | FalseE():
            return BoolT()
        case Nil():
            return None
        case Cons(h, t):
            ht = infer_expr(ctx, h)
            if ht is None or not isinstance(ht, BASE_TYPES):
                return None
            if isinstance(t, Nil):
                return ListT(ht)
            tt = infer_expr(ctx, t)
            return tt if tt == ListT(ht) else None
    return None


def check_expr_simple(ctx: SimpleContext, e: Expr, t: SimpleType) -> bool:
    match e:
        case Var(n):
            return n in ctx and subtype_simple(ctx[n], t)
        case Zero():
            return t == NatT()
        case Succ(a):
            return t == NatT() and check_expr_simple(ctx, a, NatT())
        case TrueE() | FalseE():
            return t == BoolT()
        case Nil():
            return isinstance(t, ListT)
        case Cons(h, tl):
            return isinstance(t, ListT) and check_expr_simple(ctx, h, t.elem) and check_expr_simple(ctx, tl, t)
    return False


def _arg_types(ctx: SimpleContext, a: Name, capability: str) -> tuple[SimpleType, ...]:
    t = ctx.get(a)
    if t is None:
        raise SimpleTypeError(f"{a} is not declared")
    if not isinstance(t, ChanT) or (t.mode != "ch" and t.mode != capability):
        raise SimpleTypeError(f"{a} : {t} lacks the {capability} capability")
    return t.args


def typecheck_simple(ctx: SimpleContext, p: Process) -> None:
    """Raise :class:`SimpleTypeError` naming the failing rule; return quietly otherwise."""
    match p:
        case PNil():
            return
        case Par(l, r):
            typecheck_simple(ctx, l)
            typecheck_simple(ctx, r)
        case Serv(a, vs, body) | Inp(a, vs, body):
            ts = _arg_types(ctx, a, "in")
            if len(ts) != len(vs):
                raise SimpleTypeError(f"input on {a}: expected {len(ts)} parameters, found {len(vs)}")
            typecheck_simple({**ctx, **dict(zip(vs, ts))}, body)
        case Out(a, args, _):
            ts = _arg_types(ctx, a, "out")
            if len(ts) != len(args):
                raise SimpleTypeError(f"output on {a}: expected {len(ts)} arguments, found {len(args)}")
            for e, t in zip(args, ts):
                if not check_expr_simple(ctx, e, t):
                    raise SimpleTypeError(f"output on {a}: argument {e} is not of type {t}")
        case New(a, body, ann):
            t = _annotation(ann) if ann is not None else synthesize_channel(ctx, a, body)
            if not isinstance(t, ChanT):
                raise SimpleTypeError(f"new {a}: {t} is not a channel type")
            typecheck_simple({**ctx, a: t}, body)
        case MatchNat(e, z, x, s):
            if not check_expr_simple(ctx, e, NatT()):
                raise SimpleTypeError(f"match: {e} is not a natural")
            typecheck_simple(ctx, z)
            typecheck_simple({**ctx, x: NatT()}, s)
        case MatchList(e, n, x, y, c):
            lt = infer_expr(ctx, e)
            if isinstance(e, Nil):
                lt = ListT(NatT())
            if not isinstance(lt, ListT):
                raise SimpleTypeError(f"match: {e} is not a list")
            typecheck_simple(ctx, n)
            typecheck_simple({**ctx, x: lt.elem, y: lt}, c)
        case If(e, t, f):
            if not check_expr_simple(ctx, e, BoolT()):
                raise SimpleTypeError(f"if: {e} is not a boolean")
            typecheck_simple(ctx, t)
            typecheck_simple(ctx, f)
        case Tick(body):
            typecheck_simple(ctx, body)
        case _:
            raise TypeError(p)


def check_process_simple(ctx: SimpleContext, p: Process) -> bool:
    try:
        typecheck_simple(ctx, p)
    except SimpleTypeError:
        return False
    return True


def _annotation(ann) -> SimpleType:
    if isinstance(ann, TypeSyntax):
        return from_syntax(ann)
    to_simple = getattr(ann, "to_simple", None)
    if to_simple is not None:
        return to_simple()
    if isinstance(ann, (NatT, BoolT, ListT, ChanT)):
        return ann
    raise SimpleTypeError(f"cannot read annotation {ann!r}")


# ---------------------------------------------------------------------------
# Usage-driven synthesis for unannotated restrictions


@dataclass(eq=False)
class _TV:
    ref: "object | None" = None


def _resolve(t):
    while isinstance(t, _TV) and t.ref is not None:
        t = t.ref
    return t


def _unify(a, b, where: str) -> None:
    a, b = _resolve(a), _resolve(b)
    if a is b:
        return
    if isinstance(a, _TV):
        a.ref = b
        return
    if isinstance(b, _TV):
        b.ref = a
        return
    match a, b:
        case ("chan", xs), ("chan", ys):
            if len(xs) != len(ys):
                raise SimpleTypeError(f"{where}: arity conflict ({len(xs)} vs {len(ys)})")
            for x, y in zip(xs, ys):
                _unify(x, y, where)
        case ("list", x), ("list", y):
            _unify(x, y, where)
        case _ if a == b:
            return
        case _:
            raise SimpleTypeError(f"{where}: conflicting uses")


def _lift(t: SimpleType):
    match t:
        case ChanT(_, args):
            return ("chan", tuple(_lift(a) for a in args))
        case ListT(e):
            return ("list", _lift(e))
        case NatT():
            return "nat"
        case BoolT():
            return "bool"


def _lower(t) -> SimpleType:
    t = _resolve(t)
    match t:
        case _TV():
            return NatT()
        case ("chan", args):
            return ChanT("ch", tuple(_lower(a) for a in args))
        case ("list", e):
            return ListT(_lower(e))
        case "bool":
            return BoolT()
    return NatT()


def synthesize_channel(ctx: SimpleContext, a: Name, body: Process) -> SimpleType:
    """Infer ``ch(T...)`` for a restricted name from how ``body`` uses it."""
    env: dict = {n: _lift(t) for n, t in ctx.items()}
    me = _TV()
    env[a] = me
    where = f"new {a}"

    def ex(e: Expr, sc: dict):
        match e:
            case Var(n):
                if n not in sc:
                    sc[n] = _TV()
                return sc[n]
            case Zero() | Succ():
                if isinstance(e, Succ):
                    _unify(ex(e.arg, sc), "nat", where)
                return "nat"
            case TrueE() | FalseE():
                return "bool"
            case Nil():
                return ("list", _TV())
            case Cons(h, t):
                lt = ("list", ex(h, sc))
                _unify(ex(t, sc), lt, where)
                return lt

    def chan_of(n: Name, arity: int, sc: dict):
        if n not in sc:
            sc[n] = _TV()
        args = tuple(_TV() for _ in range(arity))
        _unify(sc[n], ("chan", args), where)
        return args

    def walk(q: Process, sc: dict) -> None:
        match q:
            case Par(l, r):
                walk(l, sc)
                walk(r, sc)
            case Serv(c, vs, b) | Inp(c, vs, b):
                args = chan_of(c, len(vs), sc)
                walk(b, {**sc, **dict(zip(vs, args))})
            case Out(c, es, _):
                args = chan_of(c, len(es), sc)
                for e, t in zip(es, args):
                    _unify(ex(e, sc), t, where)
            case New(c, b, ann):
                inner = dict(sc)
                inner[c] = _lift(_annotation(ann)) if ann is not None else _TV()
                walk(b, inner)
            case MatchNat(e, z, x, s):
                _unify(ex(e, sc), "nat", where)
                walk(z, sc)
                walk(s, {**sc, x: "nat"})
            case MatchList(e, n, x, y, c):
                el = _TV()
                _unify(ex(e, sc), ("list", el), where)
                walk(n, sc)
                walk(c, {**sc, x: el, y: ("list", el)})
            case If(e, t, f):
                _unify(ex(e, sc), "bool", where)
                walk(t, sc)
                walk(f, sc)
            case Tick(b):
                walk(b, sc)

    walk(body, env)
    t = _lower(me)
    if not isinstance(t, ChanT):
        t = ChanT("ch", ())
    return t


def normal_form_shape_ok(tops: Sequence[Process]) -> bool:
    """No conditional at top level, and no name is both a pending input and a pending output."""
    ins, outs = set(), set()
    for t in tops:
        match t:
            case MatchNat() | MatchList() | If():
                return False
            case Serv(a, _, _) | Inp(a, _, _):
                ins.add(a)
            case Out(a, _, _):
                outs.add(a)
    return not (ins & outs)

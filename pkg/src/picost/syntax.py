"""Processes and expressions of the tick-instrumented pi-calculus.

Bound names are made distinct when a term is parsed, so the operations here
assume distinct binders and only freshen when a clash actually occurs (for
instance after a replicated server has been copied twice). Free names are
never renamed.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

from .index import IndexExpr


class Kind(enum.Enum):
    BASE = "base"
    CHAN = "chan"


@dataclass(frozen=True)
class Name:
    ident: str
    kind: Kind = field(default=Kind.BASE, compare=False)

    def __str__(self) -> str:
        return self.ident

    def __repr__(self) -> str:
        return f"Name({self.ident!r}{', chan' if self.kind is Kind.CHAN else ''})"


def chan(ident: str) -> Name:
    return Name(ident, Kind.CHAN)


def base(ident: str) -> Name:
    return Name(ident, Kind.BASE)


_counter = itertools.count(1)


def fresh(like: Name, avoid: Iterable[Name] = ()) -> Name:
    """A name that has never been handed out before, keeping ``like``'s stem and kind."""
    stem = like.ident.split("'")[0]
    taken = {n.ident for n in avoid}
    while True:
        cand = f"{stem}'{next(_counter)}"
        if cand not in taken:
            return Name(cand, like.kind)


class SubstitutionKindMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Var:
    name: Name


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Succ:
    arg: "Expr"


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Cons:
    head: "Expr"
    tail: "Expr"


@dataclass(frozen=True)
class TrueE:
    pass


@dataclass(frozen=True)
class FalseE:
    pass


Expr = Var | Zero | Succ | Nil | Cons | TrueE | FalseE


def nat(n: int) -> Expr:
    e: Expr = Zero()
    for _ in range(n):
        e = Succ(e)
    return e


def nat_list(xs: Sequence[int]) -> Expr:
    e: Expr = Nil()
    for x in reversed(xs):
        e = Cons(nat(x), e)
    return e


def as_int(e: Expr) -> int | None:
    n = 0
    while isinstance(e, Succ):
        n, e = n + 1, e.arg
    return n if isinstance(e, Zero) else None


def as_list(e: Expr) -> list[Expr] | None:
    out = []
    while isinstance(e, Cons):
        out.append(e.head)
        e = e.tail
    return out if isinstance(e, Nil) else None


def expr_names(e: Expr) -> frozenset[Name]:
    match e:
        case Var(n):
            return frozenset((n,))
        case Succ(a):
            return expr_names(a)
        case Cons(h, t):
            return expr_names(h) | expr_names(t)
        case _:
            return frozenset()


def subst_expr(e: Expr, sub: dict[Name, Expr]) -> Expr:
    match e:
        case Var(n):
            return sub.get(n, e)
        case Succ(a):
            return Succ(subst_expr(a, sub))
        case Cons(h, t):
            return Cons(subst_expr(h, sub), subst_expr(t, sub))
        case _:
            return e


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class PNil:
    pass


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Serv:
    chan: Name
    params: tuple[Name, ...]
    body: "Process"


@dataclass(frozen=True)
class Inp:
    chan: Name
    params: tuple[Name, ...]
    body: "Process"


@dataclass(frozen=True)
class Out:
    chan: Name
    args: tuple[Expr, ...]
    inst: tuple[IndexExpr, ...] | None = None


@dataclass(frozen=True)
class New:
    name: Name
    body: "Process"
    ann: Any = None


@dataclass(frozen=True)
class MatchNat:
    scrutinee: Expr
    zero: "Process"
    pred: Name
    succ: "Process"


@dataclass(frozen=True)
class MatchList:
    scrutinee: Expr
    nil: "Process"
    head: Name
    tail: Name
    cons: "Process"


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Process"
    orelse: "Process"


@dataclass(frozen=True)
class Tick:
    body: "Process"


Process = PNil | Par | Serv | Inp | Out | New | MatchNat | MatchList | If | Tick

GUARDED = (Serv, Inp, Out, MatchNat, MatchList, If, Tick)


def par(*ps: Process) -> Process:
    """Right-nested parallel composition; the empty composition is 0."""
    ps = tuple(p for p in ps if not isinstance(p, PNil))
    if not ps:
        return PNil()
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = Par(p, out)
    return out


def news(names: Sequence[Name], body: Process, anns: dict[Name, Any] | None = None) -> Process:
    for n in reversed(names):
        body = New(n, body, (anns or {}).get(n))
    return body


def free_names(p: Process) -> frozenset[Name]:
    match p:
        case PNil():
            return frozenset()
        case Par(l, r):
            return free_names(l) | free_names(r)
        case Serv(a, vs, body) | Inp(a, vs, body):
            return frozenset((a,)) | (free_names(body) - set(vs))
        case Out(a, args, _):
            return frozenset((a,)).union(*map(expr_names, args))
        case New(a, body, _):
            return free_names(body) - {a}
        case MatchNat(e, z, x, s):
            return expr_names(e) | free_names(z) | (free_names(s) - {x})
        case MatchList(e, n, x, y, c):
            return expr_names(e) | free_names(n) | (free_names(c) - {x, y})
        case If(e, t, f):
            return expr_names(e) | free_names(t) | free_names(f)
        case Tick(body):
            return free_names(body)
    raise TypeError(p)


def all_names(p: Process) -> frozenset[Name]:
    """Every name occurring in ``p``, free or bound."""
    match p:
        case PNil():
            return frozenset()
        case Par(l, r):
            return all_names(l) | all_names(r)
        case Serv(a, vs, body) | Inp(a, vs, body):
            return frozenset((a, *vs)) | all_names(body)
        case Out(a, args, _):
            return frozenset((a,)).union(*map(expr_names, args))
        case New(a, body, _):
            return all_names(body) | {a}
        case MatchNat(e, z, x, s):
            return expr_names(e) | all_names(z) | all_names(s) | {x}
        case MatchList(e, n, x, y, c):
            return expr_names(e) | all_names(n) | all_names(c) | {x, y}
        case If(e, t, f):
            return expr_names(e) | all_names(t) | all_names(f)
        case Tick(body):
            return all_names(body)
    raise TypeError(p)


def _check_kinds(formals: Sequence[Name], actuals: Sequence[Expr]) -> None:
    if len(formals) != len(actuals):
        raise SubstitutionKindMismatch(f"arity mismatch: {len(formals)} formals, {len(actuals)} actuals")
    for f, a in zip(formals, actuals):
        if f.kind is Kind.CHAN:
            if not (isinstance(a, Var) and a.name.kind is Kind.CHAN):
                raise SubstitutionKindMismatch(f"channel formal {f} needs a channel name, got {a}")
        elif isinstance(a, Var) and a.name.kind is Kind.CHAN:
            raise SubstitutionKindMismatch(f"base formal {f} cannot receive channel {a.name}")


def well_kinded(formals: Sequence[Name], actuals: Sequence[Expr]) -> bool:
    try:
        _check_kinds(formals, actuals)
    except SubstitutionKindMismatch:
        return False
    return True


def substitute(p: Process, formals: Sequence[Name], actuals: Sequence[Expr]) -> Process:
    """Simultaneous capture-avoiding substitution of ``actuals`` for ``formals``."""
    _check_kinds(formals, actuals)
    sub = {f: a for f, a in zip(formals, actuals)}
    return _subst(p, sub)


def _rename_chan(a: Name, sub: dict[Name, Expr]) -> Name:
    e = sub.get(a)
    if e is None:
        return a
    assert isinstance(e, Var)
    return e.name


def _under(binders: Sequence[Name], body: Process, sub: dict[Name, Expr]) -> tuple[tuple[Name, ...], Process, dict]:
    """Drop shadowed entries and freshen binders that would capture an actual."""
    inner = {k: v for k, v in sub.items() if k not in binders}
    if not inner:
        return tuple(binders), body, inner
    danger = frozenset().union(*(expr_names(v) for v in inner.values()))
    out, renaming = [], {}
    for b in binders:
        if b in danger:
            nb = fresh(b, danger | all_names(body))
            renaming[b] = Var(nb)
            out.append(nb)
        else:
            out.append(b)
    if renaming:
        body = _subst(body, renaming)
    return tuple(out), body, inner


def _subst(p: Process, sub: dict[Name, Expr]) -> Process:
    if not sub:
        return p
    match p:
        case PNil():
            return p
        case Par(l, r):
            return Par(_subst(l, sub), _subst(r, sub))
        case Serv(a, vs, body):
            vs2, body2, inner = _under(vs, body, sub)
            return Serv(_rename_chan(a, sub), vs2, _subst(body2, inner))
        case Inp(a, vs, body):
            vs2, body2, inner = _under(vs, body, sub)
            return Inp(_rename_chan(a, sub), vs2, _subst(body2, inner))
        case Out(a, args, inst):
            return Out(_rename_chan(a, sub), tuple(subst_expr(e, sub) for e in args), inst)
        case New(a, body, ann):
            (a2,), body2, inner = _under((a,), body, sub)
            return New(a2, _subst(body2, inner), ann)
        case MatchNat(e, z, x, s):
            (x2,), s2, inner = _under((x,), s, sub)
            return MatchNat(subst_expr(e, sub), _subst(z, sub), x2, _subst(s2, inner))
        case MatchList(e, n, x, y, c):
            (x2, y2), c2, inner = _under((x, y), c, sub)
            return MatchList(subst_expr(e, sub), _subst(n, sub), x2, y2, _subst(c2, inner))
        case If(e, t, f):
            return If(subst_expr(e, sub), _subst(t, sub), _subst(f, sub))
        case Tick(body):
            return Tick(_subst(body, sub))
    raise TypeError(p)


def rename(p: Process, mapping: dict[Name, Name]) -> Process:
    return _subst(p, {k: Var(v) for k, v in mapping.items()})


def erase_ticks(p: Process) -> Process:
    match p:
        case Tick(body):
            return erase_ticks(body)
        case PNil() | Out():
            return p
        case Par(l, r):
            return Par(erase_ticks(l), erase_ticks(r))
        case Serv(a, vs, body):
            return Serv(a, vs, erase_ticks(body))
        case Inp(a, vs, body):
            return Inp(a, vs, erase_ticks(body))
        case New(a, body, ann):
            return New(a, erase_ticks(body), ann)
        case MatchNat(e, z, x, s):
            return MatchNat(e, erase_ticks(z), x, erase_ticks(s))
        case MatchList(e, n, x, y, c):
            return MatchList(e, erase_ticks(n), x, y, erase_ticks(c))
        case If(e, t, f):
            return If(e, erase_ticks(t), erase_ticks(f))
    raise TypeError(p)


def has_tick(p: Process) -> bool:
    return any(isinstance(q, Tick) for q in subterms(p))


def subterms(p: Process) -> Iterator[Process]:
    yield p
    match p:
        case Par(l, r) | If(_, l, r) | MatchNat(_, l, _, r) | MatchList(_, l, _, _, r):
            yield from subterms(l)
            yield from subterms(r)
        case Serv(_, _, b) | Inp(_, _, b) | New(_, b, _) | Tick(b):
            yield from subterms(b)


def strip_annotations(p: Process) -> Process:
    """Remove surface-only data: nu annotations and index instantiations."""
    match p:
        case Out(a, args, _):
            return Out(a, args)
        case New(a, body, _):
            return New(a, strip_annotations(body))
        case PNil():
            return p
        case Par(l, r):
            return Par(strip_annotations(l), strip_annotations(r))
        case Serv(a, vs, b):
            return Serv(a, vs, strip_annotations(b))
        case Inp(a, vs, b):
            return Inp(a, vs, strip_annotations(b))
        case MatchNat(e, z, x, s):
            return MatchNat(e, strip_annotations(z), x, strip_annotations(s))
        case MatchList(e, n, x, y, c):
            return MatchList(e, strip_annotations(n), x, y, strip_annotations(c))
        case If(e, t, f):
            return If(e, strip_annotations(t), strip_annotations(f))
        case Tick(b):
            return Tick(strip_annotations(b))
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Canonical forms


@dataclass(frozen=True)
class CanonicalForm:
    restricted: tuple[Name, ...]
    tops: tuple[Process, ...]
    annotations: tuple[Any, ...] = ()

    def reassemble(self) -> Process:
        anns = dict(zip(self.restricted, self.annotations))
        return news(self.restricted, par(*self.tops), anns)


def expr_key(e: Expr) -> tuple:
    match e:
        case Var(n):
            return (0, n.ident)
        case Zero():
            return (1,)
        case Succ(a):
            return (2, expr_key(a))
        case Nil():
            return (3,)
        case Cons(h, t):
            return (4, expr_key(h), expr_key(t))
        case TrueE():
            return (5,)
        case FalseE():
            return (6,)
    raise TypeError(e)


def syntax_key(p: Process) -> tuple:
    """Total syntactic order used to sort the tops of a canonical form."""
    match p:
        case PNil():
            return (0,)
        case Par(l, r):
            return (1, syntax_key(l), syntax_key(r))
        case Serv(a, vs, b):
            return (2, a.ident, tuple(v.ident for v in vs), syntax_key(b))
        case Inp(a, vs, b):
            return (3, a.ident, tuple(v.ident for v in vs), syntax_key(b))
        case Out(a, args, _):
            return (4, a.ident, tuple(expr_key(e) for e in args))
        case New(a, b, _):
            return (5, a.ident, syntax_key(b))
        case MatchNat(e, z, x, s):
            return (6, expr_key(e), syntax_key(z), x.ident, syntax_key(s))
        case MatchList(e, n, x, y, c):
            return (7, expr_key(e), syntax_key(n), x.ident, y.ident, syntax_key(c))
        case If(e, t, f):
            return (8, expr_key(e), syntax_key(t), syntax_key(f))
        case Tick(b):
            return (9, syntax_key(b))
    raise TypeError(p)


def canonicalize(p: Process) -> CanonicalForm:
    restricted: list[Name] = []
    anns: list[Any] = []
    tops: list[Process] = []
    used = set(free_names(p))

    def walk(q: Process) -> None:
        match q:
            case PNil():
                pass
            case Par(l, r):
                walk(l)
                walk(r)
            case New(a, body, ann):
                if a in used:
                    na = fresh(a, used | all_names(body))
                    body = rename(body, {a: na})
                    a = na
                used.add(a)
                restricted.append(a)
                anns.append(ann)
                walk(body)
            case _:
                tops.append(q)

    walk(p)
    tops.sort(key=syntax_key)
    return CanonicalForm(tuple(restricted), tuple(tops), tuple(anns))


def reassemble(cf: CanonicalForm) -> Process:
    return cf.reassemble()


# ---------------------------------------------------------------------------
# Congruence

_Map = tuple[dict[str, str], dict[str, str]]


def congruent(p: Process, q: Process) -> bool:
    return _congruent(p, q, ({}, {}), frozenset(), frozenset()) is not None


def _congruent(p: Process, q: Process, m: _Map, flex1: frozenset[str], flex2: frozenset[str]) -> _Map | None:
    cp, cq = canonicalize(p), canonicalize(q)
    if len(cp.restricted) != len(cq.restricted) or len(cp.tops) != len(cq.tops):
        return None
    f1 = flex1 | {n.ident for n in cp.restricted}
    f2 = flex2 | {n.ident for n in cq.restricted}
    return _match_tops(list(cp.tops), list(cq.tops), m, f1, f2)


def _match_tops(ts1: list[Process], ts2: list[Process], m: _Map, f1, f2) -> _Map | None:
    if not ts1:
        return m
    t1, rest1 = ts1[0], ts1[1:]
    tried: set = set()
    for k, t2 in enumerate(ts2):
        if type(t1) is not type(t2):
            continue
        sk = syntax_key(t2)
        if sk in tried:
            continue
        m2 = _top_congruent(t1, t2, m, f1, f2)
        if m2 is not None:
            done = _match_tops(rest1, ts2[:k] + ts2[k + 1:], m2, f1, f2)
            if done is not None:
                return done
        tried.add(sk)
    return None


def _name_eq(a: Name, b: Name, m: _Map, f1, f2) -> _Map | None:
    fwd, back = m
    if a.ident in fwd:
        return m if fwd[a.ident] == b.ident else None
    if b.ident in back:
        return None
    if a.ident in f1 and b.ident in f2:
        return ({**fwd, a.ident: b.ident}, {**back, b.ident: a.ident})
    if a.ident in f1 or b.ident in f2:
        return None
    return m if a.ident == b.ident else None


def _expr_eq(e1: Expr, e2: Expr, m: _Map, f1, f2) -> _Map | None:
    match e1, e2:
        case Var(a), Var(b):
            return _name_eq(a, b, m, f1, f2)
        case Succ(a), Succ(b):
            return _expr_eq(a, b, m, f1, f2)
        case Cons(h1, t1), Cons(h2, t2):
            m = _expr_eq(h1, h2, m, f1, f2)
            return None if m is None else _expr_eq(t1, t2, m, f1, f2)
        case _:
            return m if type(e1) is type(e2) and not isinstance(e1, (Var, Succ, Cons)) else None


def _bind(xs: Sequence[Name], ys: Sequence[Name], m: _Map) -> _Map:
    fwd, back = dict(m[0]), dict(m[1])
    for x, y in zip(xs, ys):
        fwd[x.ident] = y.ident
        back[y.ident] = x.ident
    return fwd, back


def _unbind(m_inner: _Map, m_outer: _Map, xs: Sequence[Name], ys: Sequence[Name]) -> _Map:
    """Forget binder pairs when leaving their scope, keeping outer restricted matches."""
    fwd, back = dict(m_inner[0]), dict(m_inner[1])
    for x, y in zip(xs, ys):
        fwd.pop(x.ident, None)
        back.pop(y.ident, None)
        if x.ident in m_outer[0]:
            fwd[x.ident] = m_outer[0][x.ident]
        if y.ident in m_outer[1]:
            back[y.ident] = m_outer[1][y.ident]
    return fwd, back


def _body_eq(xs, ys, b1: Process, b2: Process, m: _Map, f1, f2) -> _Map | None:
    if len(xs) != len(ys):
        return None
    inner = _bind(xs, ys, m)
    res = _congruent(b1, b2, inner, f1, f2)
    return None if res is None else _unbind(res, m, xs, ys)


def _top_congruent(t1: Process, t2: Process, m: _Map, f1, f2) -> _Map | None:
    match t1, t2:
        case Out(a, args1, _), Out(b, args2, _):
            if len(args1) != len(args2):
                return None
            m = _name_eq(a, b, m, f1, f2)
            for e1, e2 in zip(args1, args2):
                if m is None:
                    return None
                m = _expr_eq(e1, e2, m, f1, f2)
            return m
        case (Inp(a, xs, b1), Inp(b, ys, b2)) | (Serv(a, xs, b1), Serv(b, ys, b2)):
            m = _name_eq(a, b, m, f1, f2)
            return None if m is None else _body_eq(xs, ys, b1, b2, m, f1, f2)
        case Tick(b1), Tick(b2):
            return _congruent(b1, b2, m, f1, f2)
        case If(e1, t1_, e1_), If(e2, t2_, e2_):
            m = _expr_eq(e1, e2, m, f1, f2)
            if m is not None:
                m = _congruent(t1_, t2_, m, f1, f2)
            return None if m is None else _congruent(e1_, e2_, m, f1, f2)
        case MatchNat(e1, z1, x1, s1), MatchNat(e2, z2, x2, s2):
            m = _expr_eq(e1, e2, m, f1, f2)
            if m is not None:
                m = _congruent(z1, z2, m, f1, f2)
            return None if m is None else _body_eq((x1,), (x2,), s1, s2, m, f1, f2)
        case MatchList(e1, n1, x1, y1, c1), MatchList(e2, n2, x2, y2, c2):
            m = _expr_eq(e1, e2, m, f1, f2)
            if m is not None:
                m = _congruent(n1, n2, m, f1, f2)
            return None if m is None else _body_eq((x1, y1), (x2, y2), c1, c2, m, f1, f2)
    return None


# ---------------------------------------------------------------------------
# Keys for memoizing states up to renaming of bound names


def state_key(p: Process) -> tuple:
    key, _ = _cf_key(canonicalize(p), {})
    return key


_HIDDEN = ("#",)


def _cf_key(cf: CanonicalForm, env: dict[str, Any]) -> tuple[tuple, list[str]]:
    """Key of a canonical form, plus the restricted names of enclosing levels in occurrence order.

    Restricted names appear as a placeholder in the structural part of the key;
    where they occur is recorded separately, so that each level numbers its own
    names by first occurrence and passes the others up. One pass, linear in the
    size of the term.
    """
    masked = dict(env)
    mine = {n.ident for n in cf.restricted}
    for ident in mine:
        masked[ident] = _HIDDEN
    keyed = sorted((_top_key(t, masked) for t in cf.tops), key=lambda kv: kv[0])
    occ = [o for _, os in keyed for o in os]
    numbering: dict[str, int] = {}
    for o in occ:
        if o in mine:
            numbering.setdefault(o, len(numbering))
    where = tuple(numbering.get(o, -1) for o in occ)
    unused = len(mine) - len(numbering)
    return (len(cf.restricted), unused, tuple(k for k, _ in keyed), where), [o for o in occ if o not in mine]


def _nm(n: Name, env: dict, occ: list[str]) -> Any:
    v = env.get(n.ident, ("f", n.ident))
    if v is _HIDDEN:
        occ.append(n.ident)
    return v


def _ek(e: Expr, env: dict, occ: list[str]) -> tuple:
    match e:
        case Var(n):
            return (0, _nm(n, env, occ))
        case Succ(a):
            return (2, _ek(a, env, occ))
        case Cons(h, t):
            return (4, _ek(h, env, occ), _ek(t, env, occ))
        case _:
            return expr_key(e)


def _top_key(p: Process, env: dict) -> tuple[tuple, list[str]]:
    occ: list[str] = []

    def bind(xs) -> dict:
        inner = dict(env)
        for k, x in enumerate(xs):
            inner[x.ident] = ("b", len(env), k)
        return inner

    def body(q: Process, scope: dict) -> tuple:
        key, up = _cf_key(canonicalize(q), scope)
        occ.extend(up)
        return key

    match p:
        case Out(a, args, _):
            return (4, _nm(a, env, occ), tuple(_ek(e, env, occ) for e in args)), occ
        case Serv(a, vs, b):
            return (2, _nm(a, env, occ), len(vs), body(b, bind(vs))), occ
        case Inp(a, vs, b):
            return (3, _nm(a, env, occ), len(vs), body(b, bind(vs))), occ
        case Tick(b):
            return (9, body(b, env)), occ
        case If(e, t, f):
            return (8, _ek(e, env, occ), body(t, env), body(f, env)), occ
        case MatchNat(e, z, x, s):
            return (6, _ek(e, env, occ), body(z, env), body(s, bind((x,)))), occ
        case MatchList(e, n, x, y, c):
            return (7, _ek(e, env, occ), body(n, env), body(c, bind((x, y)))), occ
    raise TypeError(p)

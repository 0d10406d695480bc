"""Pieces shared by the span and work type systems.

Base types carry size bounds, expression typing tracks sizes, and index
side conditions are discharged through :func:`picost.index.entails`. Channel
and server types live in :mod:`picost.spantypes` and :mod:`picost.worktypes`;
they plug into the generic operations here through ``subst``, ``slots`` and
``children``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from . import index as ix
from .index import Constraint, EntailmentConfig, IndexEnv, IndexExpr, Refuted, Unknown, Valid
from .syntax import Cons, Expr, FalseE, Name, Nil, Succ, TrueE, Var, Zero


class SizedTypeError(TypeError):
    def __init__(self, msg: str, witness: dict[str, int] | None = None, unknown: bool = False):
        super().__init__(msg)
        self.witness = witness
        self.unknown = unknown


@dataclass(frozen=True)
class SNat:
    lo: IndexExpr
    hi: IndexExpr

    def __str__(self) -> str:
        return f"Nat[{self.lo}, {self.hi}]"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "SNat":
        return SNat(ix.subst_many(self.lo, sub), ix.subst_many(self.hi, sub))

    def slots(self) -> tuple[IndexExpr, ...]:
        return (self.lo, self.hi)

    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class SList:
    lo: IndexExpr
    hi: IndexExpr
    elem: Any

    def __str__(self) -> str:
        return f"List[{self.lo}, {self.hi}]({self.elem})"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "SList":
        return SList(ix.subst_many(self.lo, sub), ix.subst_many(self.hi, sub), self.elem.subst(sub))

    def slots(self) -> tuple[IndexExpr, ...]:
        return (self.lo, self.hi)

    def children(self) -> tuple:
        return (self.elem,)


@dataclass(frozen=True)
class SBool:
    def __str__(self) -> str:
        return "Bool"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "SBool":
        return self

    def slots(self) -> tuple[IndexExpr, ...]:
        return ()

    def children(self) -> tuple:
        return ()


BASE = (SNat, SList, SBool)


def is_base(t: Any) -> bool:
    return isinstance(t, BASE)


def base_from_syntax(ts) -> Any:
    match ts.head:
        case "Bool":
            return SBool()
        case "Nat":
            if ts.lo is None:
                raise SizedTypeError("Nat needs size bounds here: write Nat[I, J]")
            return SNat(ts.lo, ts.hi)
        case "List":
            if ts.lo is None:
                raise SizedTypeError("List needs size bounds here: write List[I, J](B)")
            return SList(ts.lo, ts.hi, base_from_syntax(ts.args[0]))
    raise SizedTypeError(f"{ts} is not a base type")


def forget_base(t: Any):
    from .iotypes import BoolT, ListT, NatT

    match t:
        case SNat():
            return NatT()
        case SBool():
            return BoolT()
        case SList(_, _, e):
            return ListT(forget_base(e))
    raise TypeError(t)


_binder_ids = itertools.count(1)


def fresh_binders(binders: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(f"{b.split('~')[0]}~{next(_binder_ids)}" for b in binders)


# ---------------------------------------------------------------------------
# Judgement plumbing


@dataclass
class Judge:
    """An index environment plus the entailment configuration used to discharge side conditions."""

    env: IndexEnv
    cfg: EntailmentConfig = field(default_factory=EntailmentConfig)

    def with_vars(self, names, constraints=()) -> "Judge":
        return Judge(self.env.extend(tuple(names), tuple(constraints)), self.cfg)

    def assume(self, *cs: Constraint) -> "Judge":
        return Judge(self.env.extend((), cs), self.cfg)

    def holds(self, c: Constraint) -> bool:
        """Cheap validity test for choices the checker makes (no refutation search)."""
        return ix.provable(self.env, c, self.cfg)

    def require(self, c: Constraint, what: str) -> None:
        v = ix.entails(self.env, c, self.cfg)
        match v:
            case Valid():
                return
            case Refuted(w):
                raise SizedTypeError(f"{what}: {c} fails under {self.env}, e.g. at {w}", witness=w)
            case Unknown():
                raise SizedTypeError(
                    f"{what}: could not decide {c} under {self.env}; "
                    f"raise --b-refute or add assumptions",
                    unknown=True,
                )

    def inconsistent(self) -> bool:
        return self.holds(ix.le(1, 0))

    def le(self, a: IndexExpr, b: IndexExpr) -> bool:
        return self.holds(ix.le(a, b))


def sub_base(j: Judge, t: Any, u: Any, what: str = "subtyping") -> None:
    match t, u:
        case SBool(), SBool():
            return
        case SNat(i, k), SNat(i2, k2):
            j.require(ix.le(i2, i), what)
            j.require(ix.le(k, k2), what)
        case SList(i, k, b), SList(i2, k2, b2):
            j.require(ix.le(i2, i), what)
            j.require(ix.le(k, k2), what)
            sub_base(j, b, b2, what)
        case _:
            raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")


def incr(i: IndexExpr) -> IndexExpr:
    return ix.simplify(ix.add(i, ix.lit(1)))


def decr(i: IndexExpr) -> IndexExpr:
    return ix.simplify(ix.monus(i, ix.lit(1)))


SubFn = Callable[[Judge, Any, Any, str], None]


def infer_expr(j: Judge, ctx: Mapping[Name, Any], e: Expr, hint: Any, sub: SubFn) -> Any:
    """Least sized type of ``e``; ``hint`` is the expected type and fixes list elements."""
    match e:
        case Var(n):
            if n not in ctx:
                raise SizedTypeError(f"{n} is not in the context (expired or undeclared)")
            return ctx[n]
        case Zero():
            return SNat(ix.lit(0), ix.lit(0))
        case Succ(a):
            t = infer_expr(j, ctx, a, SNat(ix.lit(0), ix.lit(0)), sub)
            if not isinstance(t, SNat):
                raise SizedTypeError(f"s({a}): argument has type {t}")
            return SNat(incr(t.lo), incr(t.hi))
        case TrueE() | FalseE():
            return SBool()
        case Nil():
            elem = hint.elem if isinstance(hint, SList) else None
            return SList(ix.lit(0), ix.lit(0), elem)
        case Cons(h, tl):
            t = infer_expr(j, ctx, tl, hint, sub)
            if not isinstance(t, SList):
                raise SizedTypeError(f"{tl} is not a list")
            if t.elem is None:
                elem = infer_expr(j, ctx, h, None, sub)
                if not is_base(elem):
                    raise SizedTypeError(f"list element {h} has non-base type {elem}")
            else:
                elem = t.elem
                sub(j, infer_expr(j, ctx, h, elem, sub), elem, f"list element {h}")
            return SList(incr(t.lo), incr(t.hi), elem)
    raise TypeError(e)


def check_expr(j: Judge, ctx: Mapping[Name, Any], e: Expr, t: Any, sub: SubFn) -> None:
    got = infer_expr(j, ctx, e, t, sub)
    if isinstance(got, SList) and got.elem is None and isinstance(t, SList):
        got = SList(got.lo, got.hi, t.elem)
    sub(j, got, t, f"expression {_show(e)}")


def _show(e: Expr) -> str:
    from .pretty import pretty_expr

    return pretty_expr(e)


# ---------------------------------------------------------------------------
# First-order matching of index binders


def match_indices(pattern: Any, actual: Any, binders: tuple[str, ...], found: dict[str, IndexExpr]) -> None:
    """Record bindings for ``binders`` that make ``pattern`` syntactically equal ``actual`` slot by slot."""
    if pattern is None or actual is None or type(pattern) is not type(actual):
        return
    if getattr(pattern, "mode", None) != getattr(actual, "mode", None):
        return
    for p, a in zip(pattern.slots(), actual.slots()):
        _match_index(p, a, binders, found)
    pc, ac = pattern.children(), actual.children()
    if len(pc) == len(ac):
        for p, a in zip(pc, ac):
            match_indices(p, a, binders, found)


def _match_index(p: IndexExpr, a: IndexExpr, binders: tuple[str, ...], found: dict[str, IndexExpr]) -> bool:
    match p:
        case ix.IVar(n) if n in binders:
            if n not in found:
                found[n] = a
                return True
            return found[n] == a
        case ix.IApp(fn, args):
            if isinstance(a, ix.IApp) and a.fn == fn and len(a.args) == len(args):
                trial = dict(found)
                if all(_match_index(x, y, binders, trial) for x, y in zip(args, a.args)):
                    found.update(trial)
                    return True
            return False
        case _:
            return p == a


def uses_binders(t: Any, binders: tuple[str, ...]) -> set[str]:
    out = set()
    for s in t.slots():
        out |= ix.index_vars(s) & set(binders)
    for c in t.children():
        out |= uses_binders(c, binders)
    return out


# ---------------------------------------------------------------------------
# Guarded complexities


@dataclass(frozen=True)
class Cost:
    """A complexity as alternatives ``(guards, K)``: the bound is the largest ``K`` whose guards hold.

    Guards come from match branches. Keeping them apart lets a declared bound be
    checked branch by branch under the constraints that branch learned.
    """

    alts: tuple[tuple[tuple[Constraint, ...], IndexExpr], ...]

    @staticmethod
    def of(k: IndexExpr | int) -> "Cost":
        return Cost((((), ix.as_index(k)),))

    def map(self, f: Callable[[IndexExpr], IndexExpr]) -> "Cost":
        return Cost(tuple((g, f(k)) for g, k in self.alts))

    def plus(self, d: IndexExpr | int) -> "Cost":
        d = ix.as_index(d)
        return self.map(lambda k: ix.plus(k, d))

    def guarded(self, c: Constraint) -> "Cost":
        return Cost(tuple(((c, *g), k) for g, k in self.alts))

    def union(self, other: "Cost", j: Judge) -> "Cost":
        return Cost(self.alts + other.alts).compact(j)

    def add(self, other: "Cost", j: Judge) -> "Cost":
        out = []
        for g1, k1 in self.alts:
            for g2, k2 in other.alts:
                g = tuple(dict.fromkeys(g1 + g2))
                if len(g) > max(len(g1), len(g2)) and j.assume(*g).inconsistent():
                    continue
                out.append((g, ix.plus(k1, k2)))
        return Cost(tuple(out)).compact(j)

    def compact(self, j: Judge) -> "Cost":
        def covers(a, b) -> bool:
            (ga, ka), (gb, kb) = a, b
            return set(ga) <= set(gb) and (ka == kb or j.assume(*gb).le(kb, ka))

        keep: list[tuple[tuple[Constraint, ...], IndexExpr]] = []
        for alt in dict.fromkeys(self.alts):
            if any(covers(k, alt) for k in keep):
                continue
            keep = [k for k in keep if not covers(alt, k)] + [alt]
        return Cost(tuple(keep))

    def require_le(self, j: Judge, bound: IndexExpr, what: str) -> None:
        for g, k in self.alts:
            j.assume(*g).require(ix.le(k, bound), f"{what}: complexity {k} vs declared {bound}")

    def collapse(self, j: Judge) -> IndexExpr:
        """One expression bounding every alternative under its own guards."""
        if len(self.alts) == 1:
            return self.alts[0][1]
        for _, cand in self.alts:
            if all(j.assume(*g).le(k, cand) for g, k in self.alts):
                return cand
        out = self.alts[0][1]
        for _, k in self.alts[1:]:
            out = ix.imax(out, k)
        return out

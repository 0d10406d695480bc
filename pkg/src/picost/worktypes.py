"""Sized types without time for bounding the total work of a process.

Channel types carry no time. A server type records the work of one call.
Parallel composition adds the work on each side. A replicated server costs
nothing by itself; each call pays the declared complexity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import index as ix
from .index import EntailmentConfig, IndexEnv, IndexExpr
from .parser import Program, TypeSyntax
from .sized import (
    BASE, Cost, Judge, SBool, SizedTypeError, SList, SNat, base_from_syntax, check_expr, forget_base,
    fresh_binders, infer_expr, is_base, sub_base,
)
from .spantypes import DeclarationVerdict, ServerRecord, check_declarations, infer_instantiation
from .syntax import If, Inp, MatchList, MatchNat, Name, New, Out, Par, PNil, Process, Serv, Tick

__all__ = [
    "WChan", "WServ", "from_syntax", "subtype_work", "synthesize_work", "work_judgement",
    "check_work_declaration", "forget",
]


@dataclass(frozen=True)
class WChan:
    mode: str  # "ch", "in", "out"
    args: tuple[Any, ...]

    def __str__(self) -> str:
        return f"{self.mode}({', '.join(map(str, self.args))})"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "WChan":
        return WChan(self.mode, tuple(a.subst(sub) for a in self.args))

    def slots(self) -> tuple[IndexExpr, ...]:
        return ()

    def children(self) -> tuple:
        return self.args


@dataclass(frozen=True)
class WServ:
    mode: str  # "serv", "iserv", "oserv"
    binders: tuple[str, ...]
    cost: IndexExpr
    args: tuple[Any, ...]

    def __str__(self) -> str:
        bs = f"[{', '.join(self.binders)}]" if self.binders else ""
        return f"{self.mode}{bs}({self.cost}; {', '.join(map(str, self.args))})"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "WServ":
        inner = {k: v for k, v in sub.items() if k not in self.binders}
        t = self
        if inner and set().union(*(ix.index_vars(v) for v in inner.values())) & set(self.binders):
            t = t.rename_binders(fresh_binders(t.binders))
        return WServ(t.mode, t.binders, ix.subst_many(t.cost, inner), tuple(a.subst(inner) for a in t.args))

    def rename_binders(self, new: Sequence[str]) -> "WServ":
        ren = {b: ix.IVar(n) for b, n in zip(self.binders, new)}
        return WServ(self.mode, tuple(new), ix.subst_many(self.cost, ren), tuple(a.subst(ren) for a in self.args))

    def instantiate(self, js: Sequence[IndexExpr]) -> tuple[IndexExpr, tuple]:
        sub = dict(zip(self.binders, js))
        return ix.subst_many(self.cost, sub), tuple(a.subst(sub) for a in self.args)

    def slots(self) -> tuple[IndexExpr, ...]:
        return ()

    def children(self) -> tuple:
        return ()


WorkType = SNat | SList | SBool | WChan | WServ


def from_syntax(ts: TypeSyntax) -> WorkType:
    """Read a written type for the work system; any time annotation is ignored."""
    if ts.head in ("Nat", "Bool", "List"):
        return base_from_syntax(ts)
    args = tuple(from_syntax(a) for a in ts.args)
    if ts.head in ("ch", "in", "out"):
        return WChan(ts.head, args)
    return WServ(ts.head, ts.binders, ts.cost, args)


def _shown(t) -> str:
    return "nothing (unbound)" if t is None else str(t)


def annotation_type(ann: Any) -> WorkType:
    if isinstance(ann, TypeSyntax):
        return from_syntax(ann)
    if isinstance(ann, (WChan, WServ, *BASE)):
        return ann
    raise SizedTypeError(f"cannot read annotation {ann!r}")


def forget(t: WorkType):
    from .iotypes import ChanT

    match t:
        case WChan(mode, args):
            return ChanT(mode, tuple(forget(a) for a in args))
        case WServ(mode, _, _, args):
            return ChanT({"serv": "ch", "iserv": "in", "oserv": "out"}[mode], tuple(forget(a) for a in args))
        case _:
            return forget_base(t)


_CHAN_VARIANCE = {("ch", "ch"): "inv", ("ch", "in"): "co", ("in", "in"): "co",
                  ("ch", "out"): "contra", ("out", "out"): "contra"}
_SERV_RULES = {("serv", "serv"): ("inv", "="), ("serv", "iserv"): ("co", ">="), ("iserv", "iserv"): ("co", ">="),
               ("serv", "oserv"): ("contra", "<="), ("oserv", "oserv"): ("contra", "<=")}


def _args(j: Judge, ts, us, variance: str, what: str) -> None:
    if len(ts) != len(us):
        raise SizedTypeError(f"{what}: arity {len(ts)} vs {len(us)}")
    for t, u in zip(ts, us):
        if variance in ("co", "inv"):
            sub(j, t, u, what)
        if variance in ("contra", "inv"):
            sub(j, u, t, what)


def sub(j: Judge, t: WorkType, u: WorkType, what: str = "subtyping") -> None:
    match t, u:
        case WChan(m1, ts), WChan(m2, us):
            variance = _CHAN_VARIANCE.get((m1, m2))
            if variance is None:
                raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")
            _args(j, ts, us, variance, what)
        case WServ(m1, b1, _, _), WServ(m2, b2, _, _):
            rule = _SERV_RULES.get((m1, m2))
            if rule is None or len(b1) != len(b2):
                raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")
            names = fresh_binders(b1) if set(b1) & set(j.env.variables) else b1
            tt, uu = t.rename_binders(names), u.rename_binders(names)
            inner = j.with_vars(names)
            variance, rel = rule
            _args(inner, tt.args, uu.args, variance, what)
            match rel:
                case "=":
                    inner.require(ix.eq(tt.cost, uu.cost), f"{what}: server complexities")
                case ">=":
                    inner.require(ix.le(uu.cost, tt.cost), f"{what}: input-server complexity")
                case "<=":
                    inner.require(ix.le(tt.cost, uu.cost), f"{what}: output-server complexity")
        case _ if is_base(t) and is_base(u):
            sub_base(j, t, u, what)
        case _:
            raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")


def subtype_work(env: IndexEnv, t: WorkType, u: WorkType, cfg: EntailmentConfig | None = None) -> bool:
    try:
        sub(Judge(env, cfg or EntailmentConfig()), t, u)
    except SizedTypeError:
        return False
    return True


@dataclass
class WorkChecker:
    cfg: EntailmentConfig = field(default_factory=EntailmentConfig)
    servers: list[ServerRecord] = field(default_factory=list)

    def check(self, j: Judge, ctx: dict, p: Process) -> Cost:
        match p:
            case PNil():
                return Cost.of(0)
            case Par(l, r):
                return self.check(j, ctx, l).add(self.check(j, ctx, r), j)
            case Serv(a, vs, body):
                t = ctx.get(a)
                if not (isinstance(t, WServ) and t.mode in ("serv", "iserv")):
                    raise SizedTypeError(f"server !{a}: needs an input-server type, has {_shown(t)}")
                if len(t.args) != len(vs):
                    raise SizedTypeError(f"server !{a}: arity {len(vs)} vs type {t}")
                names = fresh_binders(t.binders) if set(t.binders) & set(j.env.variables) else t.binders
                t = t.rename_binders(names)
                inner_j = j.with_vars(names)
                k = self.check(inner_j, {**ctx, **dict(zip(vs, t.args))}, body)
                k.require_le(inner_j, t.cost, f"server !{a}: body")
                self.servers.append(ServerRecord(a.ident, k.collapse(inner_j), t.cost, inner_j.env))
                return Cost.of(0)
            case Inp(a, vs, body):
                t = ctx.get(a)
                if not (isinstance(t, WChan) and t.mode in ("ch", "in")):
                    raise SizedTypeError(f"input {a}(...): needs an input channel type, has {_shown(t)}")
                if len(t.args) != len(vs):
                    raise SizedTypeError(f"input {a}(...): arity {len(vs)} vs type {t}")
                return self.check(j, {**ctx, **dict(zip(vs, t.args))}, body)
            case Out(a, args, inst):
                t = ctx.get(a)
                match t:
                    case WChan(mode, ts) if mode in ("ch", "out"):
                        if len(ts) != len(args):
                            raise SizedTypeError(f"output {a}<...>: arity {len(args)} vs type {t}")
                        for e, u in zip(args, ts):
                            check_expr(j, ctx, e, u, sub)
                        return Cost.of(0)
                    case WServ(mode, bs, _, ts) if mode in ("serv", "oserv"):
                        if len(ts) != len(args):
                            raise SizedTypeError(f"call {a}<...>: arity {len(args)} vs type {t}")
                        if inst is not None:
                            if len(inst) != len(bs):
                                raise SizedTypeError(f"call {a}: {len(inst)} indices given for binders {bs}")
                            js = tuple(inst)
                        else:
                            js = infer_instantiation(j, ctx, t, args, a, sub)
                        kk, targs = t.instantiate(js)
                        for e, u in zip(args, targs):
                            check_expr(j, ctx, e, u, sub)
                        return Cost.of(kk)
                raise SizedTypeError(f"output {a}<...>: needs an output capability, has {_shown(t)}")
            case New(a, body, ann):
                if ann is None:
                    raise SizedTypeError(f"new {a}: work checking needs a type annotation")
                return self.check(j, {**ctx, a: annotation_type(ann)}, body)
            case MatchNat(e, z, x, s):
                t = infer_expr(j, ctx, e, None, sub)
                if not isinstance(t, SNat):
                    raise SizedTypeError(f"match on {e}: not a natural ({t})")
                return self.branches(
                    j, (ix.le(t.lo, 0), ctx, z),
                    (ix.ge(t.hi, 1), {**ctx, x: SNat(ix.minus(t.lo, ix.lit(1)), ix.minus(t.hi, ix.lit(1)))}, s),
                )
            case MatchList(e, n, x, y, c):
                t = infer_expr(j, ctx, e, None, sub)
                if not isinstance(t, SList):
                    raise SizedTypeError(f"match on {e}: not a list ({t})")
                elem = t.elem if t.elem is not None else SBool()
                tail = SList(ix.minus(t.lo, ix.lit(1)), ix.minus(t.hi, ix.lit(1)), elem)
                return self.branches(j, (ix.le(t.lo, 0), ctx, n), (ix.ge(t.hi, 1), {**ctx, x: elem, y: tail}, c))
            case If(e, th, el):
                check_expr(j, ctx, e, SBool(), sub)
                return self.check(j, ctx, th).union(self.check(j, ctx, el), j)
            case Tick(body):
                return self.check(j, ctx, body).plus(1)
        raise TypeError(p)

    def branches(self, j: Judge, *cases) -> Cost:
        """Check each branch under its refined constraints; dead branches cost nothing."""
        out: Cost | None = None
        for c, ctx, p in cases:
            jj = j.assume(c)
            if jj.inconsistent():
                continue
            k = self.check(jj, ctx, p).guarded(c)
            out = k if out is None else out.union(k, j)
        return out if out is not None else Cost.of(0)


def work_judgement(env: IndexEnv, ctx: Mapping[Name, WorkType], p: Process,
                   cfg: EntailmentConfig | None = None) -> IndexExpr:
    cfg = cfg or EntailmentConfig()
    j = Judge(env, cfg)
    return WorkChecker(cfg).check(j, dict(ctx), p).collapse(j)


def synthesize_work(env: IndexEnv, ctx: Mapping[Name, WorkType], p: Process,
                    cfg: EntailmentConfig | None = None) -> IndexExpr | None:
    try:
        return work_judgement(env, ctx, p, cfg)
    except SizedTypeError:
        return None


def program_context(program: Program) -> dict:
    """Work signatures, falling back to the span signature with times erased."""
    ctx = {}
    for d in program.definitions:
        sig = d.work_sig or d.span_sig
        if sig is not None:
            ctx[Name(d.name)] = from_syntax(sig)
    for prm in program.params:
        ctx[Name(prm.name)] = from_syntax(prm.work_sig or prm.span_sig)
    return ctx


def check_work_declaration(program: Program, cfg: EntailmentConfig | None = None) -> list[DeclarationVerdict]:
    """Check every definition against its declared work signature."""
    return check_declarations(program, WorkChecker, program_context, cfg or EntailmentConfig(), program.main_work_bound)

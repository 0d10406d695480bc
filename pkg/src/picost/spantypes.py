"""Sized types with time for bounding the span of a process.

A channel type records the time at which its communication happens and a
server type additionally records the complexity of a call. The checker is
syntax directed: it applies exactly one subsumption at each rule premise and
synthesizes a complexity bottom-up, taking ``max`` at parallel composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from . import index as ix
from .index import EntailmentConfig, IndexEnv, IndexExpr
from .parser import Program, TypeSyntax
from .sized import (
    BASE, Cost, Judge, SBool, SizedTypeError, SList, SNat, base_from_syntax, check_expr, forget_base,
    fresh_binders, infer_expr, is_base, match_indices, sub_base, uses_binders,
)
from .syntax import (
    If, Inp, MatchList, MatchNat, Name, New, Out, Par, PNil, Process, Serv, Tick,
)

__all__ = [
    "SNat", "SList", "SBool", "SChan", "SServ", "SizedTypeError", "from_syntax", "subtype_sized",
    "advance_type", "advance_context", "delay_type", "is_time_invariant", "check_expr_sized",
    "synthesize_span", "check_span_declaration", "forget", "DeclarationVerdict",
]


@dataclass(frozen=True)
class SChan:
    mode: str  # "ch", "in", "out"
    time: IndexExpr
    args: tuple[Any, ...]

    def __str__(self) -> str:
        return f"{self.mode}^{_atom(self.time)}({', '.join(map(str, self.args))})"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "SChan":
        return SChan(self.mode, ix.subst_many(self.time, sub), tuple(a.subst(sub) for a in self.args))

    def slots(self) -> tuple[IndexExpr, ...]:
        return (self.time,)

    def children(self) -> tuple:
        return self.args


@dataclass(frozen=True)
class SServ:
    mode: str  # "serv", "iserv", "oserv"
    time: IndexExpr
    binders: tuple[str, ...]
    cost: IndexExpr
    args: tuple[Any, ...]

    def __str__(self) -> str:
        bs = f"[{', '.join(self.binders)}]" if self.binders else ""
        return f"{self.mode}^{_atom(self.time)}{bs}({self.cost}; {', '.join(map(str, self.args))})"

    def subst(self, sub: Mapping[str, IndexExpr]) -> "SServ":
        inner = {k: v for k, v in sub.items() if k not in self.binders}
        t = self
        clash = set().union(*(ix.index_vars(v) for v in inner.values())) & set(self.binders) if inner else set()
        if clash:
            t = t.rename_binders(fresh_binders(t.binders))
        return SServ(t.mode, ix.subst_many(t.time, sub), t.binders, ix.subst_many(t.cost, inner),
                     tuple(a.subst(inner) for a in t.args))

    def rename_binders(self, new: Sequence[str]) -> "SServ":
        ren = {b: ix.IVar(n) for b, n in zip(self.binders, new)}
        return SServ(self.mode, self.time, tuple(new), ix.subst_many(self.cost, ren),
                     tuple(a.subst(ren) for a in self.args))

    def instantiate(self, js: Sequence[IndexExpr]) -> tuple[IndexExpr, tuple]:
        sub = dict(zip(self.binders, js))
        return ix.subst_many(self.cost, sub), tuple(a.subst(sub) for a in self.args)

    def slots(self) -> tuple[IndexExpr, ...]:
        return (self.time,)

    def children(self) -> tuple:
        return ()


def _atom(i: IndexExpr) -> str:
    return str(i) if isinstance(i, (ix.IVar, ix.ILit)) or (isinstance(i, ix.IApp) and i.fn not in ix.INFIX) else f"({i})"


SizedType = SNat | SList | SBool | SChan | SServ
SizedContext = dict[Name, SizedType]


def from_syntax(ts: TypeSyntax) -> SizedType:
    """Read a written type; a missing time on a channel or server means time 0."""
    if ts.head in ("Nat", "Bool", "List"):
        return base_from_syntax(ts)
    time = ts.time if ts.time is not None else ix.lit(0)
    args = tuple(from_syntax(a) for a in ts.args)
    if ts.head in ("ch", "in", "out"):
        return SChan(ts.head, time, args)
    return SServ(ts.head, time, ts.binders, ts.cost, args)


def _shown(t) -> str:
    return "nothing (unbound, or its time has passed)" if t is None else str(t)


def annotation_type(ann: Any) -> SizedType:
    if isinstance(ann, TypeSyntax):
        return from_syntax(ann)
    if isinstance(ann, (SChan, SServ, *BASE)):
        return ann
    raise SizedTypeError(f"cannot read annotation {ann!r}")


def forget(t: SizedType):
    from .iotypes import ChanT

    match t:
        case SChan(mode, _, args):
            return ChanT(mode, tuple(forget(a) for a in args))
        case SServ(mode, _, _, _, args):
            return ChanT({"serv": "ch", "iserv": "in", "oserv": "out"}[mode], tuple(forget(a) for a in args))
        case _:
            return forget_base(t)


# ---------------------------------------------------------------------------
# Subtyping


def _args(j: Judge, ts, us, variance: str, what: str) -> None:
    if len(ts) != len(us):
        raise SizedTypeError(f"{what}: arity {len(ts)} vs {len(us)}")
    for t, u in zip(ts, us):
        if variance in ("co", "inv"):
            sub(j, t, u, what)
        if variance in ("contra", "inv"):
            sub(j, u, t, what)


_CHAN_VARIANCE = {("ch", "ch"): "inv", ("ch", "in"): "co", ("in", "in"): "co",
                  ("ch", "out"): "contra", ("out", "out"): "contra"}
_SERV_RULES = {("serv", "serv"): ("inv", "="), ("serv", "iserv"): ("co", ">="), ("iserv", "iserv"): ("co", ">="),
               ("serv", "oserv"): ("contra", "<="), ("oserv", "oserv"): ("contra", "<=")}


def sub(j: Judge, t: SizedType, u: SizedType, what: str = "subtyping") -> None:
    """Raise :class:`SizedTypeError` unless ``t`` is a subtype of ``u`` under ``j``."""
    match t, u:
        case SChan(m1, i1, ts), SChan(m2, i2, us):
            variance = _CHAN_VARIANCE.get((m1, m2))
            if variance is None:
                raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")
            j.require(ix.eq(i1, i2), f"{what}: times of {t} and {u}")
            _args(j, ts, us, variance, what)
        case SServ(m1, i1, b1, k1, ts), SServ(m2, i2, b2, k2, us):
            rule = _SERV_RULES.get((m1, m2))
            if rule is None or len(b1) != len(b2):
                raise SizedTypeError(f"{what}: {t} is not a subtype of {u}")
            j.require(ix.eq(i1, i2), f"{what}: times of {t} and {u}")
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


def subtype_sized(env: IndexEnv, t: SizedType, u: SizedType, cfg: EntailmentConfig | None = None) -> bool:
    try:
        sub(Judge(env, cfg or EntailmentConfig()), t, u)
    except SizedTypeError:
        return False
    return True


# ---------------------------------------------------------------------------
# Time


def _advance(j: Judge, t: SizedType, i: IndexExpr) -> SizedType | None:
    match t:
        case SChan(mode, time, args):
            if j.le(i, time):
                return SChan(mode, ix.minus(time, i), args)
            return None
        case SServ(mode, time, bs, k, args):
            enough = j.le(i, time)
            left = ix.minus(time, i)
            match mode:
                case "serv":
                    return SServ("serv" if enough else "oserv", left, bs, k, args)
                case "iserv":
                    return SServ("iserv", left, bs, k, args) if enough else None
                case "oserv":
                    return SServ("oserv", left, bs, k, args)
    return t


def advance_type(env: IndexEnv, t: SizedType, i: IndexExpr, cfg: EntailmentConfig | None = None) -> SizedType | None:
    return _advance(Judge(env, cfg or EntailmentConfig()), t, i)


def _advance_ctx(j: Judge, ctx: Mapping[Name, SizedType], i: IndexExpr) -> SizedContext:
    if i == ix.lit(0):
        return dict(ctx)
    out = {}
    for n, t in ctx.items():
        a = _advance(j, t, i)
        if a is not None:
            out[n] = a
    return out


def advance_context(env: IndexEnv, ctx: Mapping[Name, SizedType], i: IndexExpr,
                    cfg: EntailmentConfig | None = None) -> SizedContext:
    return _advance_ctx(Judge(env, cfg or EntailmentConfig()), ctx, i)


def delay_type(t: SizedType, i: IndexExpr) -> SizedType:
    match t:
        case SChan(mode, time, args):
            return SChan(mode, ix.plus(time, i), args)
        case SServ(mode, time, bs, k, args):
            return SServ(mode, ix.plus(time, i), bs, k, args)
    return t


def _invariant_view(j: Judge, t: SizedType) -> SizedType | None:
    """A time-invariant supertype of ``t`` if one exists."""
    if is_base(t):
        return t
    if isinstance(t, SServ) and t.mode in ("serv", "oserv") and j.holds(ix.eq(t.time, 0)):
        return SServ("oserv", t.time, t.binders, t.cost, t.args)
    return None


def is_time_invariant(env: IndexEnv, ctx: Mapping[Name, SizedType], cfg: EntailmentConfig | None = None) -> bool:
    j = Judge(env, cfg or EntailmentConfig())
    return all(is_base(t) or (isinstance(t, SServ) and t.mode == "oserv" and j.holds(ix.eq(t.time, 0)))
               for t in ctx.values())


def check_expr_sized(env: IndexEnv, ctx: Mapping[Name, SizedType], e, t: SizedType,
                     cfg: EntailmentConfig | None = None) -> bool:
    try:
        check_expr(Judge(env, cfg or EntailmentConfig()), ctx, e, t, sub)
    except SizedTypeError:
        return False
    return True


# ---------------------------------------------------------------------------
# Processes


@dataclass
class ServerRecord:
    name: str
    body_cost: IndexExpr
    declared: IndexExpr
    env: IndexEnv


@dataclass
class SpanChecker:
    cfg: EntailmentConfig = field(default_factory=EntailmentConfig)
    servers: list[ServerRecord] = field(default_factory=list)

    def check(self, j: Judge, ctx: SizedContext, p: Process) -> Cost:
        match p:
            case PNil():
                return Cost.of(0)
            case Par(l, r):
                return self.check(j, ctx, l).union(self.check(j, ctx, r), j)
            case Serv(a, vs, body):
                t = ctx.get(a)
                if not (isinstance(t, SServ) and t.mode in ("serv", "iserv")):
                    raise SizedTypeError(f"server !{a}: needs an input-server type, has {_shown(t)}")
                if len(t.args) != len(vs):
                    raise SizedTypeError(f"server !{a}: arity {len(vs)} vs type {t}")
                names = fresh_binders(t.binders) if set(t.binders) & set(j.env.variables) else t.binders
                t = t.rename_binders(names)
                inner_j = j.with_vars(names)
                advanced = _advance_ctx(j, ctx, t.time)
                inner: SizedContext = {}
                for n, u in advanced.items():
                    v = _invariant_view(j, u)
                    if v is not None:
                        inner[n] = v
                inner.update(zip(vs, t.args))
                k = self.check(inner_j, inner, body)
                k.require_le(inner_j, t.cost, f"server !{a}: body")
                self.servers.append(ServerRecord(a.ident, k.collapse(inner_j), t.cost, inner_j.env))
                return Cost.of(t.time)
            case Inp(a, vs, body):
                t = ctx.get(a)
                if not (isinstance(t, SChan) and t.mode in ("ch", "in")):
                    raise SizedTypeError(f"input {a}(...): needs an input channel type, has {_shown(t)}")
                if len(t.args) != len(vs):
                    raise SizedTypeError(f"input {a}(...): arity {len(vs)} vs type {t}")
                inner = _advance_ctx(j, ctx, t.time)
                inner.update(zip(vs, t.args))
                return self.check(j, inner, body).plus(t.time)
            case Out(a, args, inst):
                t = ctx.get(a)
                match t:
                    case SChan(mode, time, ts) if mode in ("ch", "out"):
                        if len(ts) != len(args):
                            raise SizedTypeError(f"output {a}<...>: arity {len(args)} vs type {t}")
                        later = _advance_ctx(j, ctx, time)
                        for e, u in zip(args, ts):
                            check_expr(j, later, e, u, sub)
                        return Cost.of(time)
                    case SServ(mode, time, bs, k, ts) if mode in ("serv", "oserv"):
                        if len(ts) != len(args):
                            raise SizedTypeError(f"call {a}<...>: arity {len(args)} vs type {t}")
                        later = _advance_ctx(j, ctx, time)
                        js = self.instantiation(j, later, t, args, inst, a)
                        kk, targs = t.instantiate(js)
                        for e, u in zip(args, targs):
                            check_expr(j, later, e, u, sub)
                        return Cost.of(ix.plus(time, kk))
                raise SizedTypeError(f"output {a}<...>: needs an output capability, has {_shown(t)}")
            case New(a, body, ann):
                if ann is None:
                    raise SizedTypeError(f"new {a}: span checking needs a type annotation")
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
                return self.check(j, _advance_ctx(j, ctx, ix.lit(1)), body).plus(1)
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

    def instantiation(self, j: Judge, ctx: SizedContext, t: SServ, args, inst, a: Name) -> tuple[IndexExpr, ...]:
        if inst is not None:
            if len(inst) != len(t.binders):
                raise SizedTypeError(f"call {a}: {len(inst)} indices given for binders {t.binders}")
            return tuple(inst)
        return infer_instantiation(j, ctx, t, args, a, sub)


def infer_instantiation(j: Judge, ctx, t, args, a: Name, subfn) -> tuple[IndexExpr, ...]:
    if not t.binders:
        return ()
    found: dict[str, IndexExpr] = {}
    for e, pat in zip(args, t.args):
        try:
            actual = infer_expr(j, ctx, e, None, subfn)
        except SizedTypeError:
            continue
        match_indices(pat, actual, t.binders, found)
    missing = [b for b in t.binders if b not in found]
    if missing:
        raise SizedTypeError(f"call {a}: cannot infer indices for {missing}; annotate the call with @[...]")
    return tuple(found[b] for b in t.binders)


def span_judgement(env: IndexEnv, ctx: Mapping[Name, SizedType], p: Process,
                   cfg: EntailmentConfig | None = None) -> IndexExpr:
    """The synthesized complexity, or :class:`SizedTypeError` with a diagnostic."""
    cfg = cfg or EntailmentConfig()
    j = Judge(env, cfg)
    return SpanChecker(cfg).check(j, dict(ctx), p).collapse(j)


def synthesize_span(env: IndexEnv, ctx: Mapping[Name, SizedType], p: Process,
                    cfg: EntailmentConfig | None = None) -> IndexExpr | None:
    try:
        return span_judgement(env, ctx, p, cfg)
    except SizedTypeError:
        return None


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class DeclarationVerdict:
    name: str
    ok: bool
    synthesized: IndexExpr | None = None
    declared: IndexExpr | None = None
    message: str = ""
    witness: dict[str, int] | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "synthesized": None if self.synthesized is None else str(self.synthesized),
            "declared": None if self.declared is None else str(self.declared),
            "message": self.message,
            "witness": self.witness,
        }


def program_context(program: Program) -> SizedContext:
    ctx: SizedContext = {}
    for d in program.definitions:
        if d.span_sig is not None:
            ctx[Name(d.name)] = from_syntax(d.span_sig)
    for prm in program.params:
        ctx[Name(prm.name)] = from_syntax(prm.span_sig)
    return ctx


def check_declarations(program: Program, checker_cls, context_fn, cfg: EntailmentConfig,
                       main_bound: IndexExpr | None = None) -> list[DeclarationVerdict]:
    j = Judge(program.env(), cfg)
    try:
        ctx = context_fn(program)
    except SizedTypeError as err:
        return [DeclarationVerdict("<signatures>", False, message=str(err))]
    verdicts = []
    for d in program.definitions:
        checker = checker_cls(cfg)
        declared = None
        t = ctx.get(Name(d.name))
        if t is not None and hasattr(t, "cost"):
            declared = t.cost
        try:
            k = checker.check(j, ctx, d.body)
            own = [s for s in checker.servers if s.name == d.name]
            body = own[0].body_cost if own else k.collapse(j)
            verdicts.append(DeclarationVerdict(d.name, True, body, declared))
        except SizedTypeError as err:
            verdicts.append(DeclarationVerdict(d.name, False, None, declared, str(err), err.witness))
    if program.main is not None:
        missing = [n for n in _free(program) if Name(n) not in ctx]
        if not missing:
            checker = checker_cls(cfg)
            try:
                k = checker.check(j, ctx, program.main)
                if main_bound is not None:
                    k.require_le(j, main_bound, "main")
                verdicts.append(DeclarationVerdict("main", True, k.collapse(j), main_bound))
            except SizedTypeError as err:
                verdicts.append(DeclarationVerdict("main", False, None, main_bound, str(err), err.witness))
    return verdicts


def _free(program: Program) -> list[str]:
    from .syntax import free_names

    return sorted(n.ident for n in free_names(program.main))


def check_span_declaration(program: Program, cfg: EntailmentConfig | None = None) -> list[DeclarationVerdict]:
    """Check every definition against its declared span signature."""
    return check_declarations(program, SpanChecker, program_context, cfg or EntailmentConfig(), program.main_bound)

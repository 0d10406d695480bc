"""Index expressions over the naturals, constraints, and an entailment checker.

The entailment procedure is layered. A normalizing layer eliminates monus and
max by case analysis, turns every case into a polynomial system over atoms
(variables and powers of two), adds monotonicity facts, and refutes the
negated goal with Fourier-Motzkin elimination over the linear relaxation.
Whatever it cannot prove is handed to a bounded search for counter-valuations.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, gcd
from typing import Callable, Iterator, Mapping, Sequence


class UnboundIndexVariable(KeyError):
    pass


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class IVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ILit:
    value: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("index literals are natural numbers")

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class IApp:
    fn: str
    args: tuple["IndexExpr", ...]

    def __str__(self) -> str:
        if self.fn in INFIX and len(self.args) == 2:
            l, r = self.args
            return f"{_wrap(l, self.fn, False)} {self.fn} {_wrap(r, self.fn, True)}"
        return f"{self.fn}({', '.join(str(a) for a in self.args)})"


IndexExpr = IVar | ILit | IApp

INFIX = {"+": 1, "-": 1, "*": 2}


def _wrap(e: IndexExpr, parent: str, right: bool) -> str:
    if isinstance(e, IApp) and e.fn in INFIX:
        mine, theirs = INFIX[e.fn], INFIX[parent]
        if mine < theirs or (mine == theirs and right and (parent == "-" or e.fn != parent)):
            return f"({e})"
    return str(e)


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    interpret: Callable[..., int]


BUILTINS: dict[str, FunctionSymbol] = {
    "+": FunctionSymbol("+", 2, lambda a, b: a + b),
    "*": FunctionSymbol("*", 2, lambda a, b: a * b),
    "-": FunctionSymbol("-", 2, lambda a, b: max(a - b, 0)),
    "max": FunctionSymbol("max", 2, max),
    "pow2": FunctionSymbol("pow2", 1, lambda a: 2**a),
}


def table_symbol(name: str, arity: int, table: Mapping[tuple[int, ...], int], default: int = 0) -> FunctionSymbol:
    """A user symbol interpreted by lookup; missing points map to ``default``."""
    return FunctionSymbol(name, arity, lambda *xs: table.get(tuple(xs), default))


def var(name: str) -> IVar:
    return IVar(name)


def lit(n: int) -> ILit:
    return ILit(n)


def add(*xs: IndexExpr) -> IndexExpr:
    if not xs:
        return ILit(0)
    out = xs[0]
    for x in xs[1:]:
        out = IApp("+", (out, x))
    return out


def mul(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    return IApp("*", (a, b))


def monus(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    return IApp("-", (a, b))


def imax(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    return IApp("max", (a, b))


def pow2(a: IndexExpr) -> IndexExpr:
    return IApp("pow2", (a,))


def as_index(x: IndexExpr | int | str) -> IndexExpr:
    match x:
        case int():
            return ILit(x)
        case str():
            return IVar(x)
        case _:
            return x


def index_vars(e: IndexExpr) -> frozenset[str]:
    match e:
        case IVar(n):
            return frozenset((n,))
        case ILit():
            return frozenset()
        case IApp(_, args):
            return frozenset().union(*(index_vars(a) for a in args))


def symbols_used(e: IndexExpr) -> frozenset[str]:
    match e:
        case IApp(fn, args):
            return frozenset((fn,)).union(*(symbols_used(a) for a in args))
        case _:
            return frozenset()


def eval_index(e: IndexExpr, rho: Mapping[str, int], symbols: Mapping[str, FunctionSymbol] | None = None) -> int:
    match e:
        case IVar(n):
            if n not in rho:
                raise UnboundIndexVariable(n)
            return rho[n]
        case ILit(v):
            return v
        case IApp(fn, args):
            sym = BUILTINS.get(fn) or (symbols or {}).get(fn)
            if sym is None:
                raise KeyError(f"unknown index function {fn!r}")
            return sym.interpret(*(eval_index(a, rho, symbols) for a in args))


def subst_index(e: IndexExpr, name: str, by: IndexExpr) -> IndexExpr:
    return subst_many(e, {name: by})


def subst_many(e: IndexExpr, sub: Mapping[str, IndexExpr]) -> IndexExpr:
    if not sub:
        return e
    match e:
        case IVar(n):
            return sub.get(n, e)
        case ILit():
            return e
        case IApp(fn, args):
            return IApp(fn, tuple(subst_many(a, sub) for a in args))


def simplify(e: IndexExpr) -> IndexExpr:
    """Cheap constant folding and unit laws, for readable output only."""
    match e:
        case IApp(fn, args):
            args = tuple(simplify(a) for a in args)
            if all(isinstance(a, ILit) for a in args) and fn in BUILTINS:
                return ILit(BUILTINS[fn].interpret(*(a.value for a in args)))
            match fn, args:
                case "+", (ILit(0), x) | (x, ILit(0)):
                    return x
                case "-", (x, ILit(0)):
                    return x
                case "*", (ILit(1), x) | (x, ILit(1)):
                    return x
                case "*", (ILit(0), _) | (_, ILit(0)):
                    return ILit(0)
                case "max", (x, y) if x == y:
                    return x
                case "max", (ILit(0), x) | (x, ILit(0)):
                    return x
            return IApp(fn, args)
        case _:
            return e


# ---------------------------------------------------------------------------
# Constraints and environments

RELATIONS = ("<=", "<", "=", "!=")


@dataclass(frozen=True)
class Constraint:
    lhs: IndexExpr
    rel: str
    rhs: IndexExpr

    def __post_init__(self) -> None:
        if self.rel not in RELATIONS:
            raise ValueError(f"unsupported relation {self.rel!r}; build with constraint()")

    def __str__(self) -> str:
        return f"{self.lhs} {self.rel} {self.rhs}"

    def vars(self) -> frozenset[str]:
        return index_vars(self.lhs) | index_vars(self.rhs)


def constraint(lhs: IndexExpr | int | str, rel: str, rhs: IndexExpr | int | str) -> Constraint:
    l, r = as_index(lhs), as_index(rhs)
    match rel:
        case ">=":
            return Constraint(r, "<=", l)
        case ">":
            return Constraint(r, "<", l)
        case "==":
            return Constraint(l, "=", r)
        case _:
            return Constraint(l, rel, r)


def le(a, b) -> Constraint:
    return constraint(a, "<=", b)


def ge(a, b) -> Constraint:
    return constraint(a, ">=", b)


def eq(a, b) -> Constraint:
    return constraint(a, "=", b)


Valuation = Mapping[str, int]


def satisfies(rho: Valuation, c: Constraint, symbols: Mapping[str, FunctionSymbol] | None = None) -> bool:
    a, b = eval_index(c.lhs, rho, symbols), eval_index(c.rhs, rho, symbols)
    match c.rel:
        case "<=":
            return a <= b
        case "<":
            return a < b
        case "=":
            return a == b
        case "!=":
            return a != b
    raise AssertionError(c.rel)


def subst_constraint(c: Constraint, sub: Mapping[str, IndexExpr]) -> Constraint:
    return Constraint(subst_many(c.lhs, sub), c.rel, subst_many(c.rhs, sub))


@dataclass(frozen=True)
class IndexEnv:
    variables: tuple[str, ...] = ()
    constraints: tuple[Constraint, ...] = ()

    def extend(self, variables: Sequence[str] = (), constraints: Sequence[Constraint] = ()) -> "IndexEnv":
        vs = self.variables + tuple(v for v in variables if v not in self.variables)
        return IndexEnv(vs, self.constraints + tuple(constraints))

    def __str__(self) -> str:
        return f"{', '.join(self.variables) or '.'}; {', '.join(map(str, self.constraints)) or '.'}"


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class Valid:
    layer: str = "normalize"

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Refuted:
    witness: dict[str, int]

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class Unknown:
    reason: str = ""

    def __bool__(self) -> bool:
        return False


Verdict = Valid | Refuted | Unknown


@dataclass
class EntailmentConfig:
    b_refute: int = 16
    trace: bool = False
    symbols: Mapping[str, FunctionSymbol] = field(default_factory=dict)
    search_budget: int = 200_000
    log: list[str] = field(default_factory=list)

    def note(self, msg: str) -> None:
        if self.trace:
            self.log.append(msg)


DEFAULT_CONFIG = EntailmentConfig()


def entails(env: IndexEnv, c: Constraint, config: EntailmentConfig | None = None) -> Verdict:
    cfg = config or DEFAULT_CONFIG
    hyps = list(env.constraints)
    names = sorted(set(env.variables).union(c.vars(), *(h.vars() for h in hyps)))
    user = set().union(symbols_used(c.lhs), symbols_used(c.rhs), *(symbols_used(h.lhs) | symbols_used(h.rhs) for h in hyps))
    if user <= set(BUILTINS):
        if _prove(hyps, c):
            cfg.note(f"valid by normalization: {env} |= {c}")
            return Valid("normalize")
    else:
        cfg.note(f"user symbols {sorted(user - set(BUILTINS))}: skipping normalization")
    found = _search(names, hyps, c, cfg)
    if isinstance(found, dict):
        cfg.note(f"refuted: {found}")
        return Refuted(found)
    if found:
        # the box was exhausted without a counterexample and every variable is bounded by it
        cfg.note("no counterexample in the search box")
    return Unknown(f"could not decide {c} under {env} (searched values <= {cfg.b_refute})")


def provable(env: IndexEnv, c: Constraint, config: EntailmentConfig | None = None) -> bool:
    """Validity by normalization alone; no refutation search. False means "not shown"."""
    hyps = list(env.constraints)
    user = set().union(symbols_used(c.lhs), symbols_used(c.rhs), *(symbols_used(h.lhs) | symbols_used(h.rhs) for h in hyps))
    return user <= set(BUILTINS) and _prove(hyps, c)


def entails_all(env: IndexEnv, cs: Sequence[Constraint], config: EntailmentConfig | None = None) -> Verdict:
    for c in cs:
        v = entails(env, c, config)
        if not isinstance(v, Valid):
            return v
    return Valid()


def _search(names: list[str], hyps: list[Constraint], goal: Constraint, cfg: EntailmentConfig) -> dict[str, int] | bool:
    """Counter-valuation with components <= b_refute, smallest total first."""
    n, b = len(names), cfg.b_refute
    budget = cfg.search_budget
    for total in range(0, n * b + 1):
        for point in _compositions(total, n, b):
            budget -= 1
            if budget < 0:
                return False
            rho = dict(zip(names, point))
            try:
                if all(satisfies(rho, h, cfg.symbols) for h in hyps) and not satisfies(rho, goal, cfg.symbols):
                    return rho
            except OverflowError:
                continue
    return True


def _compositions(total: int, parts: int, cap: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, cap), -1, -1):
        rest = total - first
        if rest > cap * (parts - 1):
            break
        for tail in _compositions(rest, parts - 1, cap):
            yield (first, *tail)


# ---------------------------------------------------------------------------
# Normalizing layer

_fresh_ids = itertools.count()


def _prove(hyps: list[Constraint], goal: Constraint) -> bool:
    return _prove_cached(tuple(dict.fromkeys(hyps)), goal)


@functools.lru_cache(maxsize=65536)
def _prove_cached(hyps: tuple[Constraint, ...], goal: Constraint) -> bool:
    hyps = list(hyps)
    negations: list[Constraint]
    match goal.rel:
        case "<=":
            negations = [Constraint(goal.rhs, "<", goal.lhs)]
        case "<":
            negations = [Constraint(goal.rhs, "<=", goal.lhs)]
        case "=":
            negations = [Constraint(goal.lhs, "<", goal.rhs), Constraint(goal.rhs, "<", goal.lhs)]
        case "!=":
            negations = [Constraint(goal.lhs, "=", goal.rhs)]
    return all(_infeasible(hyps + [n]) for n in negations)


def _infeasible(cs: list[Constraint], depth: int = 0) -> bool:
    """True when no valuation over the naturals satisfies every constraint."""
    if depth > 24:
        return False
    cs = [c for c in cs if not _trivial(c)]
    if any(_false_constant(c) for c in cs):
        return True
    # disequalities split into two strict cases
    for k, c in enumerate(cs):
        if c.rel == "!=":
            rest = cs[:k] + cs[k + 1:]
            return _infeasible(rest + [Constraint(c.lhs, "<", c.rhs)], depth + 1) and _infeasible(
                rest + [Constraint(c.rhs, "<", c.lhs)], depth + 1
            )
    # equations that define a variable are substituted away
    for k, c in enumerate(cs):
        if c.rel == "=":
            for a, b in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                if isinstance(a, IVar) and a.name not in index_vars(b):
                    rest = cs[:k] + cs[k + 1:]
                    return _infeasible([subst_constraint(r, {a.name: b}) for r in rest], depth + 1)
    # variables with a small constant upper bound are enumerated
    for k, c in enumerate(cs):
        if isinstance(c.lhs, IVar) and isinstance(c.rhs, ILit) and c.rel in ("<=", "<"):
            top = c.rhs.value - (1 if c.rel == "<" else 0)
            if top <= 3:
                rest = cs[:k] + cs[k + 1:]
                return all(
                    _infeasible([subst_constraint(r, {c.lhs.name: ILit(v)}) for r in rest], depth + 1)
                    for v in range(top + 1)
                )
    # monus and max are split on their guard, after a cheap check of the split-free part
    plain = [c for c in cs if _innermost_split(c.lhs) is None and _innermost_split(c.rhs) is None]
    if len(plain) < len(cs) and plain and _linear_infeasible([_to_poly_rel(c) for c in plain]):
        return True
    for c in cs:
        t = _innermost_split(c.lhs) or _innermost_split(c.rhs)
        if t is None:
            continue
        a, b = t.args
        if t.fn == "max":
            return _infeasible(_replace_all(cs, t, a) + [Constraint(b, "<=", a)], depth + 1) and _infeasible(
                _replace_all(cs, t, b) + [Constraint(a, "<", b)], depth + 1
            )
        d = IVar(f"_d{next(_fresh_ids)}")
        if isinstance(a, IVar) and a.name not in index_vars(b):
            ge_case = [subst_constraint(x, {a.name: IApp("+", (b, d))}) for x in _replace_all(cs, t, d)]
        else:
            ge_case = _replace_all(cs, t, d) + [Constraint(a, "=", IApp("+", (b, d)))]
        lt_case = _replace_all(cs, t, ILit(0)) + [Constraint(a, "<", b)]
        return _infeasible(ge_case, depth + 1) and _infeasible(lt_case, depth + 1)
    return _linear_infeasible([_to_poly_rel(c) for c in cs])


def _trivial(c: Constraint) -> bool:
    return c.lhs == c.rhs and c.rel in ("<=", "=")


def _false_constant(c: Constraint) -> bool:
    if index_vars(c.lhs) or index_vars(c.rhs):
        return False
    try:
        return not satisfies({}, c)
    except (KeyError, OverflowError):
        return False


def _innermost_split(e: IndexExpr) -> IApp | None:
    match e:
        case IApp(fn, args):
            for a in args:
                t = _innermost_split(a)
                if t is not None:
                    return t
            if fn in ("-", "max"):
                return e
    return None


def _replace(e: IndexExpr, old: IndexExpr, new: IndexExpr) -> IndexExpr:
    if e == old:
        return new
    match e:
        case IApp(fn, args):
            return IApp(fn, tuple(_replace(a, old, new) for a in args))
        case _:
            return e


def _replace_all(cs: list[Constraint], old: IndexExpr, new: IndexExpr) -> list[Constraint]:
    return [Constraint(_replace(c.lhs, old, new), c.rel, _replace(c.rhs, old, new)) for c in cs]


# Polynomials: dict from monomial (sorted tuple of atoms) to integer coefficient.
# Atoms are ("v", name) or ("p", monomial) standing for pow2 of that monomial.

Monomial = tuple
Poly = dict


def _poly(e: IndexExpr) -> Poly:
    match e:
        case IVar(n):
            return {(("v", n),): 1}
        case ILit(v):
            return {(): v} if v else {}
        case IApp("+", (a, b)):
            return _padd(_poly(a), _poly(b))
        case IApp("*", (a, b)):
            return _pmul(_poly(a), _poly(b))
        case IApp("pow2", (a,)):
            out: Poly = {(): 1}
            for mono, coef in _poly(a).items():
                if mono == ():
                    out = _pscale(out, 2**coef)
                else:
                    out = _pmul(out, _ppow({(("p", mono),): 1}, coef))
            return out
    raise ValueError(f"cannot normalize {e}")


def _padd(p: Poly, q: Poly, k: int = 1) -> Poly:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) + k * c
        if out[m] == 0:
            del out[m]
    return out


def _pscale(p: Poly, k: int) -> Poly:
    return {m: c * k for m, c in p.items()} if k else {}


def _pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(sorted(m1 + m2))
            out[m] = out.get(m, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _ppow(p: Poly, n: int) -> Poly:
    out: Poly = {(): 1}
    for _ in range(n):
        out = _pmul(out, p)
    return out


def _to_poly_rel(c: Constraint) -> tuple[Poly, str]:
    """Rewrite as ``poly >= 0`` or ``poly = 0`` (strict made non-strict over integers)."""
    diff = _padd(_poly(c.rhs), _poly(c.lhs), -1)
    match c.rel:
        case "<=":
            return diff, ">="
        case "<":
            return _padd(diff, {(): 1}, -1), ">="
        case "=":
            return diff, "="
    raise AssertionError(c.rel)


def _monotone_facts(monos: set[Monomial], lower: dict[Monomial, int]) -> list[tuple[Poly, str]]:
    facts: list[tuple[Poly, str]] = []
    seen: set[Monomial] = set()
    todo = list(monos)
    while todo:
        m = todo.pop()
        if m in seen or m == ():
            continue
        seen.add(m)
        facts.append(({m: 1}, ">="))
        for k, atom in enumerate(m):
            rest = m[:k] + m[k + 1:]
            if atom[0] == "p":
                # pow2(x) >= 1 and pow2(x) >= x + 1, times the remaining factors
                facts.append(({m: 1, rest: -1}, ">="))
                facts.append(({m: 1, tuple(sorted(rest + atom[1])): -1, rest: -1}, ">="))
                todo.append(tuple(sorted(rest + atom[1])))
                todo.append(rest)
            elif len(m) > 1 and lower.get((atom,), 0) > 0:
                facts.append(({m: 1, rest: -lower[(atom,)]}, ">="))
                todo.append(rest)
    return facts


def _atoms_in_pow2(m: Monomial) -> set[str]:
    out = set()
    for atom in m:
        if atom[0] == "p":
            for inner in atom[1]:
                out |= {inner[1]} if inner[0] == "v" else _atoms_in_pow2((inner,))
    return out


def _subst_var(p: Poly, x: str, by: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        k = sum(1 for a in m if a == ("v", x))
        if not k:
            out = _padd(out, {m: c})
            continue
        rest = tuple(a for a in m if a != ("v", x))
        out = _padd(out, _pscale(_pmul({rest: 1}, _ppow(by, k)), c))
    return out


def _eliminate(rels: list[tuple[Poly, str]]) -> list[tuple[Poly, str]]:
    """Solve equations for a variable occurring linearly (not under pow2) and substitute it away."""
    rels = list(rels)
    while True:
        blocked = set().union(*(_atoms_in_pow2(m) for p, _ in rels for m in p))
        for k, (p, r) in enumerate(rels):
            if r != "=":
                continue
            pick = None
            for m, c in sorted(p.items(), key=lambda mc: not str(mc[0]).startswith("(('v', '_d")):
                if len(m) == 1 and m[0][0] == "v" and abs(c) == 1 and m[0][1] not in blocked:
                    x = m[0][1]
                    if all(("v", x) not in m2 for m2 in p if m2 != m):
                        pick = (m, c, x)
                        break
            if pick is None:
                continue
            m, c, x = pick
            by = _pscale({m2: c2 for m2, c2 in p.items() if m2 != m}, -c)
            rest = rels[:k] + rels[k + 1:]
            rels = [(_subst_var(q, x, by), rr) for q, rr in rest] + [(by, ">=")]
            break
        else:
            return rels


def _linear_infeasible(rels: list[tuple[Poly, str]]) -> bool:
    rels = _eliminate(rels)
    monos = {m for p, _ in rels for m in p if m != ()}
    lower: dict[Monomial, int] = {}
    for p, r in rels:
        # syntactic lower bounds  x - c >= 0
        if r == ">=" and len([m for m in p if m]) == 1:
            (m,) = [m for m in p if m]
            if len(m) == 1 and p[m] == 1:
                lower[m] = max(lower.get(m, 0), -p.get((), 0))
    facts = _monotone_facts(monos, lower)
    rows = [(dict(p), r) for p, r in rels + facts]
    return _fourier_motzkin(rows)


def _fourier_motzkin(rows: list[tuple[Poly, str]], limit: int = 4000) -> bool:
    ineqs: list[dict] = []
    eqs: list[dict] = []
    for p, r in rows:
        row = {m: Fraction(c) for m, c in p.items()}
        (eqs if r == "=" else ineqs).append(row)
    # Gaussian elimination on equalities
    while eqs:
        row = eqs.pop()
        pivots = [m for m in row if m != () and row[m] != 0]
        if not pivots:
            if row.get((), 0) != 0:
                return True
            continue
        pv = pivots[0]
        coef = row[pv]
        def elim(r: dict) -> dict:
            if pv not in r:
                return r
            k = r[pv] / coef
            out = dict(r)
            for m, c in row.items():
                out[m] = out.get(m, 0) - k * c
                if out[m] == 0:
                    del out[m]
            return out
        eqs = [elim(r) for r in eqs]
        ineqs = [elim(r) for r in ineqs]
        # the eliminated variable is still a natural
        ineqs.append({m: -c / coef for m, c in row.items() if m != pv})
    ineqs = [_tighten(r) for r in ineqs]
    while True:
        for r in ineqs:
            if all(m == () for m in r) and r.get((), 0) < 0:
                return True
        ineqs = _dedupe([r for r in ineqs if any(m != () for m in r)])
        variables = sorted({m for r in ineqs for m in r if m != ()}, key=lambda m: _elim_cost(ineqs, m))
        if not variables:
            return False
        v = variables[0]
        pos = [r for r in ineqs if r.get(v, 0) > 0]
        neg = [r for r in ineqs if r.get(v, 0) < 0]
        rest = [r for r in ineqs if r.get(v, 0) == 0]
        new = []
        for a in pos:
            for b in neg:
                ka, kb = -b[v], a[v]
                comb: dict = {}
                for m, c in a.items():
                    comb[m] = comb.get(m, 0) + ka * c
                for m, c in b.items():
                    comb[m] = comb.get(m, 0) + kb * c
                comb = {m: c for m, c in comb.items() if c != 0 and m != v}
                new.append(_tighten(comb))
        ineqs = rest + new
        if len(ineqs) > limit:
            return False


def _elim_cost(ineqs: list[dict], m: Monomial) -> int:
    p = sum(1 for r in ineqs if r.get(m, 0) > 0)
    n = sum(1 for r in ineqs if r.get(m, 0) < 0)
    return p * n - p - n


def _tighten(row: dict) -> dict:
    """Scale to integer coefficients, divide by their gcd and floor the constant."""
    dens = [c.denominator for c in row.values()]
    lcm = 1
    for d in dens:
        lcm = lcm * d // gcd(lcm, d)
    ints = {m: int(c * lcm) for m, c in row.items()}
    g = 0
    for m, c in ints.items():
        if m != ():
            g = gcd(g, abs(c))
    if g > 1:
        out = {m: Fraction(c // g) for m, c in ints.items() if m != ()}
        const = floor(Fraction(ints.get((), 0), g))
        if const:
            out[()] = Fraction(const)
        return out
    return {m: Fraction(c) for m, c in ints.items()}


def _dedupe(rows: list[dict]) -> list[dict]:
    seen = {}
    for r in rows:
        key = tuple(sorted((m, c) for m, c in r.items() if m != ()))
        const = r.get((), 0)
        if key not in seen or seen[key].get((), 0) > const:
            seen[key] = r
    return list(seen.values())


# ---------------------------------------------------------------------------
# Normalized arithmetic used by the type checkers to keep bounds small


def poly_of(e: IndexExpr) -> Poly | None:
    """Polynomial form of a monus- and max-free expression over built-ins, else None."""
    syms = symbols_used(e)
    if not syms <= {"+", "*", "pow2"}:
        return None
    return _poly(e)


def _monomial_expr(m: Monomial) -> IndexExpr | None:
    out: IndexExpr | None = None
    for atom in m:
        a = IVar(atom[1]) if atom[0] == "v" else pow2(_monomial_expr(atom[1]) or ILit(0))
        out = a if out is None else IApp("*", (out, a))
    return out


def from_poly(p: Poly) -> IndexExpr:
    terms: list[IndexExpr] = []
    for m in sorted((m for m in p if m), key=lambda m: (len(m), m)):
        c = p[m]
        e = _monomial_expr(m)
        terms.append(e if c == 1 else IApp("*", (ILit(c), e)))
    if p.get((), 0):
        terms.append(ILit(p[()]))
    return add(*terms) if terms else ILit(0)


def normalize(e: IndexExpr) -> IndexExpr:
    p = poly_of(e)
    if p is None or any(c < 0 for c in p.values()):
        return simplify(e)
    return from_poly(p)


def plus(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    return normalize(IApp("+", (a, b)))


def minus(a: IndexExpr, b: IndexExpr) -> IndexExpr:
    """``a - b`` under monus, folded when the polynomial difference has a uniform sign."""
    pa, pb = poly_of(a), poly_of(b)
    if pa is not None and pb is not None:
        d = _padd(pa, pb, -1)
        if all(c >= 0 for c in d.values()):
            return from_poly(d)
        if all(c <= 0 for c in d.values()):
            return ILit(0)
    return simplify(monus(a, b))

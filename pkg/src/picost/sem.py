"""Reduction, time steps, tick steps, and cost-metered runners.

States are canonical forms: a list of restricted names and a sorted tuple of
guarded tops. Every transition rebuilds a canonical state, freshening the
restricted names of a contractum that clash with names already in the state.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Literal

from .pretty import pretty
from .syntax import (
    CanonicalForm, Cons, FalseE, If, Inp, MatchList, MatchNat, Name, Nil, Out, Process, Serv,
    Succ, Tick, TrueE, Zero, all_names, canonicalize, free_names, fresh, rename, state_key,
    substitute, syntax_key, well_kinded,
)


class StaleRedex(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    pass


RedexKind = Literal[
    "comm-server", "comm-channel", "match-nat-zero", "match-nat-succ",
    "match-list-nil", "match-list-cons", "if-true", "if-false",
]

_ORDER = {"comm-server": 0, "comm-channel": 1, "match-nat-zero": 2, "match-nat-succ": 2,
          "match-list-nil": 2, "match-list-cons": 2, "if-true": 3, "if-false": 3}


@dataclass(frozen=True)
class Redex:
    kind: RedexKind
    positions: tuple[int, ...]

    def order(self) -> tuple:
        return (_ORDER[self.kind], self.positions)


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class State:
    restricted: tuple[Name, ...]
    tops: tuple[Process, ...]
    annotations: tuple = ()

    @staticmethod
    def of(p: Process | CanonicalForm) -> "State":
        cf = p if isinstance(p, CanonicalForm) else canonicalize(p)
        anns = cf.annotations or (None,) * len(cf.restricted)
        return State(cf.restricted, cf.tops, anns)

    def process(self) -> Process:
        return CanonicalForm(self.restricted, self.tops, self.annotations).reassemble()

    def key(self) -> tuple:
        return state_key(self.process())

    def replace(self, drop: set[int], extra: list[Process]) -> "State":
        """Remove the tops at ``drop`` and add ``extra`` after flattening it."""
        kept = [t for k, t in enumerate(self.tops) if k not in drop]
        in_use = {n.ident for n in self.restricted}
        for t in kept:
            in_use |= {n.ident for n in free_names(t)}
        restricted = list(self.restricted)
        anns = list(self.annotations)
        new_tops = list(kept)
        for piece in extra:
            cf = canonicalize(piece)
            mapping = {}
            for n, ann in zip(cf.restricted, cf.annotations or (None,) * len(cf.restricted)):
                if n.ident in in_use:
                    m = fresh(n, [Name(u) for u in in_use] + list(all_names(piece)))
                    mapping[n] = m
                    n = m
                in_use.add(n.ident)
                restricted.append(n)
                anns.append(ann)
            tops = cf.tops if not mapping else tuple(rename(t, mapping) for t in cf.tops)
            for t in tops:
                in_use |= {x.ident for x in free_names(t)}
            new_tops.extend(tops)
        new_tops.sort(key=syntax_key)
        return State(tuple(restricted), tuple(new_tops), tuple(anns))


def _state(p: Process | State) -> State:
    return p if isinstance(p, State) else State.of(p)


# ---------------------------------------------------------------------------
# Redexes


def state_redexes(s: State) -> list[Redex]:
    out: list[Redex] = []
    servers: dict[str, list[int]] = {}
    inputs: dict[str, list[int]] = {}
    outputs: dict[str, list[int]] = {}
    for k, t in enumerate(s.tops):
        match t:
            case Serv(a, _, _):
                servers.setdefault(a.ident, []).append(k)
            case Inp(a, _, _):
                inputs.setdefault(a.ident, []).append(k)
            case Out(a, _, _):
                outputs.setdefault(a.ident, []).append(k)
            case MatchNat(scrutinee=e):
                match e:
                    case Zero():
                        out.append(Redex("match-nat-zero", (k,)))
                    case Succ():
                        out.append(Redex("match-nat-succ", (k,)))
            case MatchList(scrutinee=e):
                match e:
                    case Nil():
                        out.append(Redex("match-list-nil", (k,)))
                    case Cons():
                        out.append(Redex("match-list-cons", (k,)))
            case If(cond=e):
                match e:
                    case TrueE():
                        out.append(Redex("if-true", (k,)))
                    case FalseE():
                        out.append(Redex("if-false", (k,)))
    for a, outs in outputs.items():
        for j in outs:
            args = s.tops[j].args
            for i in servers.get(a, ()):
                if well_kinded(s.tops[i].params, args):
                    out.append(Redex("comm-server", (i, j)))
            for i in inputs.get(a, ()):
                if well_kinded(s.tops[i].params, args):
                    out.append(Redex("comm-channel", (i, j)))
    out.sort(key=Redex.order)
    return out


def enumerate_redexes(p: Process | State) -> list[Redex]:
    return state_redexes(_state(p))


def is_normal(p: Process | State) -> bool:
    return not state_redexes(_state(p))


def apply_in_state(s: State, r: Redex) -> State:
    tops = s.tops
    try:
        match r.kind:
            case "comm-server" | "comm-channel":
                i, j = r.positions
                recv, send = tops[i], tops[j]
                want = Serv if r.kind == "comm-server" else Inp
                if not (isinstance(recv, want) and isinstance(send, Out) and recv.chan == send.chan):
                    raise StaleRedex(r)
                body = substitute(recv.body, recv.params, send.args)
                drop = {j} if r.kind == "comm-server" else {i, j}
                return s.replace(drop, [body])
            case "match-nat-zero" | "match-nat-succ":
                (k,) = r.positions
                t = tops[k]
                if not isinstance(t, MatchNat):
                    raise StaleRedex(r)
                match t.scrutinee:
                    case Zero() if r.kind == "match-nat-zero":
                        return s.replace({k}, [t.zero])
                    case Succ(e) if r.kind == "match-nat-succ":
                        return s.replace({k}, [substitute(t.succ, [t.pred], [e])])
            case "match-list-nil" | "match-list-cons":
                (k,) = r.positions
                t = tops[k]
                if not isinstance(t, MatchList):
                    raise StaleRedex(r)
                match t.scrutinee:
                    case Nil() if r.kind == "match-list-nil":
                        return s.replace({k}, [t.nil])
                    case Cons(h, tl) if r.kind == "match-list-cons":
                        return s.replace({k}, [substitute(t.cons, [t.head, t.tail], [h, tl])])
            case "if-true" | "if-false":
                (k,) = r.positions
                t = tops[k]
                if not isinstance(t, If):
                    raise StaleRedex(r)
                match t.cond:
                    case TrueE() if r.kind == "if-true":
                        return s.replace({k}, [t.then])
                    case FalseE() if r.kind == "if-false":
                        return s.replace({k}, [t.orelse])
    except IndexError:
        raise StaleRedex(r) from None
    raise StaleRedex(r)


def apply_redex(p: Process, r: Redex) -> Process:
    return apply_in_state(State.of(p), r).process()


def tick_positions(s: State) -> list[int]:
    return [k for k, t in enumerate(s.tops) if isinstance(t, Tick)]


def time_step_state(s: State) -> State:
    ks = tick_positions(s)
    if not ks:
        return s
    return s.replace(set(ks), [s.tops[k].body for k in ks])


def time_step(p: Process) -> Process:
    """Strip one tick from every top-level tick simultaneously."""
    return time_step_state(State.of(p)).process()


def tick_step_state(s: State, k: int) -> State:
    t = s.tops[k]
    if not isinstance(t, Tick):
        raise StaleRedex(Redex("comm-channel", (k,)))
    return s.replace({k}, [t.body])


def tick_steps(p: Process) -> list[Process]:
    s = State.of(p)
    return [tick_step_state(s, k).process() for k in tick_positions(s)]


# ---------------------------------------------------------------------------
# Policies and reports


@dataclass(frozen=True)
class Deterministic:
    pass


@dataclass(frozen=True)
class RandomPolicy:
    seed: int = 0


@dataclass(frozen=True)
class Exhaustive:
    limit: int = 10_000


SchedulePolicy = Deterministic | RandomPolicy | Exhaustive


def parse_policy(text: str) -> SchedulePolicy:
    head, _, arg = text.partition(":")
    match head:
        case "deterministic":
            return Deterministic()
        case "random":
            return RandomPolicy(int(arg or 0))
        case "exhaustive":
            return Exhaustive(int(arg) if arg else 10_000)
    raise ValueError(f"unknown policy {text!r}")


@dataclass
class RunReport:
    final: Process
    span: int | None = None
    work: int | None = None
    zero_cost_steps: int = 0
    terminated: bool = True
    schedules_explored: int = 1
    max_span: int | None = None
    min_span: int | None = None
    max_work: int | None = None
    trace: list[str] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "final": pretty(self.final, annotate=False),
            "span": self.span,
            "work": self.work,
            "zeroCostSteps": self.zero_cost_steps,
            "terminated": self.terminated,
            "schedulesExplored": self.schedules_explored,
            "maxSpan": self.max_span,
            "minSpan": self.min_span,
            "maxWork": self.max_work,
        }


def _pick(moves: list, rng: random.Random | None):
    return moves[0] if rng is None else rng.choice(moves)


def run_span(p: Process, policy: SchedulePolicy = Deterministic(), max_steps: int = 100_000,
             tick_last: bool = True) -> RunReport:
    """Run under the tick-last strategy and count time steps.

    With ``tick_last=False`` (exhaustive policy only) a time step may also fire
    while reductions are still available; this measures interleavings that the
    typed bound does not cover.
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    if isinstance(policy, Exhaustive):
        return _explore(State.of(p), "span", policy.limit, max_steps, tick_last)
    rng = random.Random(policy.seed) if isinstance(policy, RandomPolicy) else None
    s = State.of(p)
    span = zero = 0
    while True:
        while True:
            rs = state_redexes(s)
            if not rs:
                break
            if zero + span >= max_steps:
                return RunReport(s.process(), span=span, zero_cost_steps=zero, terminated=False)
            s = apply_in_state(s, _pick(rs, rng))
            zero += 1
        if not tick_positions(s):
            return RunReport(s.process(), span=span, zero_cost_steps=zero)
        if zero + span >= max_steps:
            return RunReport(s.process(), span=span, zero_cost_steps=zero, terminated=False)
        s = time_step_state(s)
        span += 1


def run_work(p: Process, policy: SchedulePolicy = Deterministic(), max_steps: int = 100_000) -> RunReport:
    """Interleave reductions with single tick steps and count the ticks."""
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    if isinstance(policy, Exhaustive):
        return _explore(State.of(p), "work", policy.limit, max_steps, False)
    rng = random.Random(policy.seed) if isinstance(policy, RandomPolicy) else None
    s = State.of(p)
    work = zero = 0
    while True:
        rs = state_redexes(s)
        ticks = tick_positions(s)
        if not rs and not ticks:
            return RunReport(s.process(), work=work, zero_cost_steps=zero)
        if work + zero >= max_steps:
            return RunReport(s.process(), work=work, zero_cost_steps=zero, terminated=False)
        if rng is None:
            if rs:
                s = apply_in_state(s, rs[0])
                zero += 1
            else:
                s = tick_step_state(s, ticks[0])
                work += 1
        else:
            moves = [("r", r) for r in rs] + [("t", k) for k in ticks]
            kind, m = rng.choice(moves)
            if kind == "r":
                s = apply_in_state(s, m)
                zero += 1
            else:
                s = tick_step_state(s, m)
                work += 1


def _moves(s: State, mode: str, tick_last: bool) -> Iterator[tuple[int, State]]:
    rs = state_redexes(s)
    for r in rs:
        yield 0, apply_in_state(s, r)
    if mode == "span":
        if tick_positions(s) and (not rs or not tick_last):
            yield 1, time_step_state(s)
    else:
        for k in tick_positions(s):
            yield 1, tick_step_state(s, k)


@dataclass
class _Node:
    state: State
    succ: list = field(default_factory=list)
    lo: int = 0
    hi: int = 0
    ok: bool = True
    best: tuple | None = None
    zero: int = 0


def _explore(start: State, mode: str, limit: int, max_steps: int, tick_last: bool) -> RunReport:
    """Memoized depth-first exploration; returns min and max cost over complete schedules."""
    nodes: dict[tuple, _Node] = {}
    on_stack: set[tuple] = set()
    edges = 0
    truncated = False
    k0 = start.key()
    nodes[k0] = _Node(start)
    stack: list[tuple[tuple, Iterator | None]] = [(k0, None)]
    while stack:
        key, it = stack[-1]
        node = nodes[key]
        if it is None:
            on_stack.add(key)
            it = _moves(node.state, mode, tick_last)
            stack[-1] = (key, it)
        advanced = False
        for w, nxt in it:
            edges += 1
            if edges > max_steps:
                truncated = True
                break
            nk = nxt.key()
            node.succ.append((w, nk))
            if nk in on_stack:
                node.ok = False  # a cycle: some schedule never ends
                continue
            if nk not in nodes:
                if len(nodes) >= limit:
                    truncated = True
                    node.ok = False
                    node.succ.pop()
                    continue
                nodes[nk] = _Node(nxt)
                stack.append((nk, None))
                advanced = True
                break
        if truncated:
            break
        if advanced:
            continue
        # all successors finished
        on_stack.discard(key)
        stack.pop()
        done = [(w, nk) for w, nk in node.succ if nk not in on_stack and nk in nodes]
        if not done:
            node.lo = node.hi = 0
            continue
        his = [(w + nodes[nk].hi, nk, w) for w, nk in done]
        node.hi, node.best, _ = max(his)[0], max(his)[1], max(his)[2]
        node.lo = min(w + nodes[nk].lo for w, nk in done)
        node.ok = node.ok and all(nodes[nk].ok for _, nk in done)
        best = nodes[node.best]
        node.zero = best.zero + (1 if max(his)[2] == 0 else 0)
    root = nodes[k0]
    if truncated:
        return _partial(start, mode, len(nodes))
    final = root
    seen = set()
    while final.best is not None and final.best not in seen:
        seen.add(final.best)
        final = nodes[final.best]
    rep = RunReport(final.state.process(), zero_cost_steps=root.zero, terminated=root.ok,
                    schedules_explored=len(nodes))
    if mode == "span":
        rep.span, rep.max_span, rep.min_span = root.hi, root.hi, root.lo
    else:
        rep.work, rep.max_work = root.hi, root.hi
    return rep


def _partial(start: State, mode: str, explored: int) -> RunReport:
    rep = RunReport(start.process(), terminated=False, schedules_explored=explored)
    if mode == "span":
        rep.span = None
    return rep

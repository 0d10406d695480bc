import itertools
import random

import pytest
from hypothesis import given, settings

from instances import sort_call
from procgen import closed_untyped, typed_process
from picost.iotypes import (
    BoolT, ChanT, ListT, NatT, SimpleTypeError, check_expr_simple, check_process_simple, from_syntax,
    normal_form_shape_ok, subtype_simple, typecheck_simple,
)
from picost.parser import parse_expr, parse_process, parse_type
from picost.program import check, load
from picost.sem import State, apply_in_state, state_redexes
from picost.syntax import Name

P = parse_process


def T(src):
    return from_syntax(parse_type(src))


def test_type_syntax():
    assert T("ch(Nat, List(Bool))") == ChanT("ch", (NatT(), ListT(BoolT())))


class TestSubtype:
    def test_ch_to_in(self):
        assert subtype_simple(T("ch(Nat)"), T("in(Nat)"))

    def test_reflexive_out(self):
        assert subtype_simple(T("out(Nat)"), T("out(Nat)"))

    def test_no_in_to_out(self):
        assert not subtype_simple(T("in(Nat)"), T("out(Nat)"))

    def test_out_contravariant(self):
        assert subtype_simple(T("out(in(Nat))"), T("out(ch(Nat))"))
        assert not subtype_simple(T("out(ch(Nat))"), T("out(in(Nat))"))


def universe():
    leaves = [NatT(), BoolT(), ListT(NatT())]
    depth1 = [ChanT(m, args) for m in ("ch", "in", "out") for args in [(), (NatT(),), (BoolT(),)]]
    depth2 = [ChanT(m, (c,)) for m in ("ch", "in", "out") for c in depth1 if c.args in [(), (NatT(),)]]
    return leaves + depth1 + depth2


def closure(us):
    """Least relation on ``us`` closed under the subtyping rules and transitivity."""
    rel = {(t, t) for t in us}
    while True:
        new = set(rel)
        for t in us:
            if isinstance(t, ChanT) and t.mode == "ch":
                new.add((t, ChanT("in", t.args)))
                new.add((t, ChanT("out", t.args)))
        for t, u in itertools.product(us, repeat=2):
            if isinstance(t, ChanT) and isinstance(u, ChanT) and t.mode == u.mode and len(t.args) == len(u.args):
                pairs = list(zip(t.args, u.args))
                match t.mode:
                    case "in":
                        ok = all((a, b) in rel for a, b in pairs)
                    case "out":
                        ok = all((b, a) in rel for a, b in pairs)
                    case _:
                        ok = all((a, b) in rel and (b, a) in rel for a, b in pairs)
                if ok:
                    new.add((t, u))
        for (a, b), (c, d) in itertools.product(rel, repeat=2):
            if b == c:
                new.add((a, d))
        new = {(a, b) for a, b in new if a in us and b in us}
        if new == rel:
            return rel
        rel = new


def test_subtyping_matches_rule_closure():
    us = universe()
    rel = closure(us)
    for t, u in itertools.product(us, repeat=2):
        assert subtype_simple(t, u) == ((t, u) in rel), (t, u)


def test_subtyping_is_a_preorder():
    us = universe()
    for t in us:
        assert subtype_simple(t, t)
    for a, b, c in itertools.product(us, repeat=3):
        if subtype_simple(a, b) and subtype_simple(b, c):
            assert subtype_simple(a, c)


class TestExpressions:
    def test_successor(self):
        assert check_expr_simple({}, parse_expr("s(0)"), NatT())

    def test_list(self):
        assert check_expr_simple({}, parse_expr("0 :: []"), ListT(NatT()))

    def test_bool_is_not_nat(self):
        assert not check_expr_simple({}, parse_expr("true"), NatT())

    def test_channel_variable_with_subsumption(self):
        c = Name("c")
        assert check_expr_simple({c: T("ch(Nat)")}, parse_expr("c"), T("out(Nat)"))


class TestProcesses:
    def test_communication(self):
        assert check_process_simple({Name("a"): T("ch(Nat)")}, P("a(x). 0 | a<0>"))

    def test_output_needs_output_capability(self):
        assert not check_process_simple({Name("a"): T("in(Nat)")}, P("a<0>"))

    def test_diagnostic_names_rule(self):
        with pytest.raises(SimpleTypeError, match="a"):
            typecheck_simple({Name("a"): T("in(Nat)")}, P("a<0>"))

    def test_tick_is_transparent(self):
        assert check_process_simple({Name("a"): T("ch()")}, P("tick. a<> | a(). 0"))

    def test_unannotated_restriction_is_synthesized(self):
        assert check_process_simple({}, P("new a in (a(x). match x {0 -> 0; s(y) -> 0} | a<s(0)>)"))

    def test_conflicting_uses_rejected(self):
        assert not check_process_simple({}, P("new a in (a<0> | a<true>)"))

    def test_arity_mismatch_rejected(self):
        assert not check_process_simple({}, P("new a in (a<0> | a(x, y). 0)"))


@pytest.mark.parametrize("name", ["mergesort", "mergesort-comm", "alt-merge", "tick-race", "empty"])
def test_corpus_checks_after_forgetting_sizes(name):
    assert all(v.ok for v in check(load(name), "io"))


def reduce_checking(p, steps=60, seed=0, ctx=None) -> State:
    """Follow random reductions, asserting simple typability at every step."""
    ctx = ctx or {}
    rng = random.Random(seed)
    s = State.of(p)
    assert check_process_simple(ctx, p)
    for _ in range(steps):
        rs = state_redexes(s)
        if not rs:
            break
        s = apply_in_state(s, rng.choice(rs))
        assert check_process_simple(ctx, s.process())
    return s


def test_subject_reduction_on_corpus():
    prog = load("mergesort")
    ctx = {Name(d.name): from_syntax(d.span_sig) for d in prog.definitions}
    ctx[Name("out")] = T("ch(List(Nat))")
    s = reduce_checking(sort_call("mergesort", [3, 1, 2, 0]), steps=2000, ctx=ctx)
    assert not state_redexes(s)


@given(closed_untyped)
@settings(max_examples=150, deadline=None)
def test_subject_reduction_on_generated(p):
    if check_process_simple({}, p):
        reduce_checking(p)


def test_subject_reduction_and_normal_forms_on_typed_terms():
    for seed in range(60):
        p = typed_process(random.Random(seed))
        assert check_process_simple({}, p)
        s = reduce_checking(p, steps=500, seed=seed)
        if not state_redexes(s):
            assert normal_form_shape_ok(s.tops)

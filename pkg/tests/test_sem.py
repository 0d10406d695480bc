import random

import pytest
from hypothesis import given, settings

from instances import answer, merge_call, sort_call
from oracles import merge_sorted
from walks import erasure_holds
from procgen import closed_untyped, closed_untyped_process, rngs, shuffle, untyped
from picost.parser import parse_process
from picost.sem import (
    Deterministic, Exhaustive, RandomPolicy, Redex, StaleRedex, apply_redex,
    enumerate_redexes, is_normal, parse_policy, run_span, run_work, time_step,
)
from picost.syntax import Tick, canonicalize, congruent, state_key

P = parse_process
RACE = "new a in (a(). tick. 0 | a<> | tick. 0)"


class TestRedexes:
    def test_channel_communication(self):
        assert [r.kind for r in enumerate_redexes(P("a(x). b<x> | a<0>"))] == ["comm-channel"]

    def test_tick_blocks(self):
        assert enumerate_redexes(P("a(x). b<x> | tick. a<0>")) == []

    def test_nil(self):
        assert enumerate_redexes(P("0")) == []

    def test_ill_kinded_arguments_do_not_communicate(self):
        # a expects a channel, receives a number
        p = P("a(c). c<> | a<0>")
        assert enumerate_redexes(p) == []

    def test_order_puts_servers_first(self):
        kinds = [r.kind for r in enumerate_redexes(P("if true then 0 else 0 | a(x). 0 | !a(y). 0 | a<0>"))]
        assert kinds == ["comm-server", "comm-channel", "if-true"]


class TestApply:
    def test_server_stays(self):
        got = apply_redex(P("!a(x). b<x> | a<0>"), Redex("comm-server", (0, 1)))
        assert congruent(got, P("!a(x). b<x> | b<0>"))

    def test_match_zero(self):
        p = P("match 0 {0 -> a<>; s(y) -> b<y>}")
        (r,) = enumerate_redexes(p)
        assert congruent(apply_redex(p, r), P("a<>"))

    def test_match_succ_binds_predecessor(self):
        p = P("match s(s(0)) {0 -> a<0>; s(y) -> a<y>}")
        (r,) = enumerate_redexes(p)
        assert congruent(apply_redex(p, r), P("a<s(0)>"))

    def test_list_cons(self):
        p = P("match [1, 2] {[] -> a<0>; h :: t -> a<h> | b<t>}")
        (r,) = enumerate_redexes(p)
        assert congruent(apply_redex(p, r), P("a<1> | b<[2]>"))

    def test_if_true(self):
        p = P("if true then a<> else b<>")
        assert congruent(apply_redex(p, enumerate_redexes(p)[0]), P("a<>"))

    def test_stale(self):
        with pytest.raises(StaleRedex):
            apply_redex(P("a<0>"), Redex("comm-channel", (0, 1)))


class TestTimeStep:
    def test_parallel_ticks(self):
        assert congruent(time_step(P("tick. a<> | tick. b<>")), P("a<> | b<>"))

    def test_input_fixed(self):
        p = P("a(x). tick. b<x>")
        assert congruent(time_step(p), p)

    def test_nil(self):
        assert congruent(time_step(P("0")), P("0"))

    def test_one_tick_per_step(self):
        assert congruent(time_step(P("tick. tick. a<>")), P("tick. a<>"))


class TestRunSpan:
    def test_race(self):
        r = run_span(P(RACE))
        assert (r.span, r.terminated) == (1, True)

    def test_nil(self):
        for policy in (Deterministic(), RandomPolicy(5), Exhaustive()):
            r = run_span(P("0"), policy)
            assert r.span == 0 and r.terminated

    def test_mergesort_four(self):
        r = run_span(sort_call("mergesort", [4, 6, 7, 2]), Deterministic(), 10_000)
        assert r.terminated and r.span <= 8
        assert answer(r.final) == [2, 4, 6, 7]

    def test_budget(self):
        r = run_span(P("new a in (!a(). a<> | a<>)"), Deterministic(), 50)
        assert not r.terminated

    def test_exhaustive_race_any_interleaving(self):
        r = run_span(P(RACE), Exhaustive(), tick_last=False)
        assert (r.min_span, r.max_span) == (1, 2)

    def test_rejects_non_positive_budget(self):
        with pytest.raises(ValueError):
            run_span(P("0"), Deterministic(), 0)


class TestRunWork:
    def test_sequential(self):
        assert run_work(P("tick. tick. 0"), Deterministic(), 10).work == 2

    def test_parallel_ticks_add(self):
        for policy in (Deterministic(), RandomPolicy(1), Exhaustive()):
            assert run_work(P("tick. 0 | tick. 0"), policy, 10).work == 2

    def test_merge_singletons(self):
        r = run_work(merge_call("mergesort", [3], [1]), Deterministic(), 1000)
        assert r.work == 1 <= 2
        assert answer(r.final) == [1, 3]

    def test_report_json_keys(self):
        keys = set(run_work(P("tick. 0"), Deterministic()).to_json())
        assert keys == {"final", "span", "work", "zeroCostSteps", "terminated", "schedulesExplored",
                        "maxSpan", "minSpan", "maxWork"}


class TestIsNormal:
    def test_lonely_output(self):
        assert is_normal(P("a<0>"))

    def test_redex(self):
        assert not is_normal(P("a(x). 0 | a<0>"))

    def test_tick_is_stuck(self):
        assert is_normal(P("tick. 0"))


def test_policies_parse():
    assert parse_policy("random:9") == RandomPolicy(9)
    assert parse_policy("exhaustive:7") == Exhaustive(7)
    with pytest.raises(ValueError):
        parse_policy("fifo")


@pytest.mark.parametrize("xs,ys", [([], []), ([0], []), ([2], [1]), ([0, 2], [1, 3]), ([1, 1, 4], [0, 5])])
def test_merge_computes_merge(xs, ys):
    r = run_span(merge_call("mergesort", xs, ys))
    assert answer(r.final) == merge_sorted(xs, ys)


@given(untyped)
@settings(max_examples=200, deadline=None)
def test_time_step_is_total_and_unique(p):
    q1, q2 = time_step(p), time_step(p)
    assert congruent(q1, q2)
    has_tick_top = any(isinstance(t, Tick) for t in canonicalize(p).tops)
    assert (state_key(q1) == state_key(p)) == (not has_tick_top)


@given(untyped, rngs)
@settings(max_examples=200, deadline=None)
def test_time_step_respects_congruence(p, rng):
    assert congruent(time_step(p), time_step(shuffle(p, rng)))


@given(closed_untyped, rngs)
@settings(max_examples=100, deadline=None)
def test_erasure_replay(p, rng):
    assert erasure_holds(p, RandomPolicy(rng.randrange(2**32))) in (True, None)


@given(closed_untyped)
@settings(max_examples=100, deadline=None)
def test_tick_last_endpoint(p):
    r = run_span(p, Deterministic(), 300)
    if r.terminated:
        assert is_normal(r.final)
        assert state_key(time_step(r.final)) == state_key(r.final)


@given(closed_untyped)
@settings(max_examples=60, deadline=None)
def test_exhaustive_maxima_monotone_in_limit(p):
    spans, works = [], []
    for limit in (3, 30, 300):
        s = run_span(p, Exhaustive(limit), 2000)
        w = run_work(p, Exhaustive(limit), 2000)
        if s.max_span is not None:
            spans.append(s.max_span)
        if w.max_work is not None:
            works.append(w.max_work)
    assert spans == sorted(spans) and works == sorted(works)


def test_span_not_more_than_work_on_generated():
    rng = random.Random(11)
    for _ in range(50):
        p = closed_untyped_process(rng, servers=False)
        s, w = run_span(p, Exhaustive(2000), 5000), run_work(p, Exhaustive(2000), 5000)
        if s.terminated and w.terminated:
            assert s.max_span <= w.max_work

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import VARS, check_against_brute_force, counterexample, ev, indices, problems, random_constraint, random_problem, valuations
from picost.index import (
    IndexEnv, Refuted, UnboundIndexVariable, Unknown, Valid, constraint, entails, eval_index, monus, satisfies,
    subst_index,
)
from picost.parser import parse_constraint, parse_index

I = parse_index
C = parse_constraint


class TestEval:
    def test_monus_truncates(self):
        assert eval_index(I("3 - 5"), {}) == 0

    def test_variable(self):
        assert eval_index(I("i"), {"i": 4}) == 4

    def test_arithmetic(self):
        assert eval_index(I("(i + 1) * j"), {"i": 2, "j": 3}) == 9

    def test_builtins(self):
        assert eval_index(I("max(i, pow2(j))"), {"i": 3, "j": 2}) == 4

    def test_unbound(self):
        with pytest.raises(UnboundIndexVariable):
            eval_index(I("i + k"), {"i": 1})


class TestSubst:
    def test_replaces(self):
        assert eval_index(subst_index(I("i + j"), "i", I("2")), {"j": 5}) == 7
        assert str(subst_index(I("i + j"), "i", I("2"))) == "2 + j"

    def test_absent_variable(self):
        assert subst_index(I("k"), "i", I("j")) == I("k")

    @given(indices, indices, valuations)
    def test_semantic_identity(self, e, by, rho):
        lhs = eval_index(subst_index(e, "i", by), rho)
        assert lhs == eval_index(e, {**rho, "i": eval_index(by, rho)})


class TestSatisfies:
    def test_true(self):
        assert satisfies({"i": 1}, C("i >= 1"))

    def test_false(self):
        assert not satisfies({"i": 0}, C("i >= 1"))

    def test_sum(self):
        assert not satisfies({"i": 2, "j": 1}, C("i + j <= 2"))


class TestEntails:
    def test_merge_hypotheses(self):
        env = IndexEnv(("i", "j"), (C("i >= 1"), C("j >= 1")))
        assert isinstance(entails(env, C("i + j >= 1")), Valid)

    def test_zero_witness(self):
        assert entails(IndexEnv(("i",)), C("i >= 1")) == Refuted({"i": 0})

    def test_pow2_monotone(self):
        env = IndexEnv(("i",), (C("i >= 1"),))
        assert isinstance(entails(env, C("pow2(i) >= 2")), Valid)
        assert counterexample(list(env.constraints), C("pow2(i) >= 2"), ["i"], 16) is None

    def test_monus_cases(self):
        env = IndexEnv(("i", "j"))
        assert isinstance(entails(env, C("(i - j) + j >= i")), Valid)
        assert isinstance(entails(env, C("i - i = 0")), Valid)

    def test_nonlinear_from_corpus(self):
        env = IndexEnv(("i", "j", "kc"), (C("i >= 1"),))
        assert isinstance(entails(env, C("(3 + kc) * (i + j - 1) <= (3 + kc) * (i + (j - 1))")), Valid)

    def test_true_but_unproved_is_not_refuted(self):
        # true for all naturals, outside what normalization handles
        env = IndexEnv(("i",))
        v = entails(env, C("i * i + 1 > i"))
        assert not isinstance(v, Refuted)
        assert isinstance(v, (Valid, Unknown))

    def test_ge_normalizes(self):
        assert constraint("i", ">=", "j") == constraint("j", "<=", "i")


@given(valuations, indices, indices)
def test_monus_identities(rho, a, b):
    assert eval_index(monus(a, a), rho) == 0
    back = eval_index(monus(a, b), rho) + eval_index(b, rho)
    assert back >= eval_index(a, rho)
    if eval_index(b, rho) <= eval_index(a, rho):
        assert back == eval_index(a, rho)


@given(valuations, indices)
def test_evaluator_agrees_with_oracle(rho, e):
    assert eval_index(e, rho) == ev(e, rho)


@given(problems)
@settings(max_examples=150, deadline=None)
def test_entailment_soundness(problem):
    check_against_brute_force(*problem)


@given(problems, st.randoms(use_true_random=False))
@settings(max_examples=100, deadline=None)
def test_weakening(problem, rng):
    names, hyps, goal = problem
    if not isinstance(entails(IndexEnv(tuple(names), tuple(hyps)), goal), Valid):
        return
    extra = [random_constraint(rng, VARS) for _ in range(rng.randint(1, 2))]
    wider = IndexEnv(VARS, tuple(hyps + extra))
    assert not isinstance(entails(wider, goal), Refuted)


@given(problems, st.randoms(use_true_random=False))
@settings(max_examples=100, deadline=None)
def test_strengthening(problem, rng):
    names, hyps, c = problem
    env = IndexEnv(tuple(names), tuple(hyps))
    if not isinstance(entails(env, c), Valid):
        return
    c2 = random_constraint(rng, names)
    if isinstance(entails(IndexEnv(tuple(names), tuple(hyps + [c])), c2), Valid):
        assert not isinstance(entails(env, c2), Refuted)


def test_oracle_mix_is_not_degenerate():
    rng = random.Random(7)
    kinds = {check_against_brute_force(*random_problem(rng)) for _ in range(60)}
    assert {"Valid", "Refuted"} <= kinds

"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``;
the lines are printed in the terminal summary.
"""

from __future__ import annotations

import math
import os
import random
import sys
from functools import cache

from instances import answer, lit, merge_call, program, sort_call
from oracles import check_against_brute_force, ev, random_problem
from procgen import closed_untyped_process, shuffle, typed_process, untyped_process
from report import criterion
from walks import erasure_holds, walk_reductions, walk_ticks
from picost import index as ix
from picost.index import IndexEnv, Valid
from picost.parser import parse_constraint, parse_index, parse_process, parse_type
from picost.program import check, main_bound, run
from picost.sem import Deterministic, Exhaustive, RandomPolicy, run_span, run_work, time_step
from picost.spantypes import annotation_type, synthesize_span
from picost.syntax import Name, Tick, canonicalize, congruent, state_key
from picost.worktypes import synthesize_work

RACE = "a(). tick. 0 | a<> | tick. 0"
LIMIT = 10_000


def verdicts(name, mode):
    return {v.name: v for v in check(program(name), mode)}


def equal_under(prog, e, f, *hyps) -> bool:
    env = IndexEnv(tuple(prog.variables) + tuple(sorted(ix.index_vars(e) - set(prog.variables))),
                   tuple(prog.assumptions) + tuple(parse_constraint(h) for h in hyps))
    return isinstance(ix.entails_all(env, [ix.le(e, f), ix.le(f, e)]), Valid)


def test_race():
    with criterion("1", "race: span 1 under tick-last, checker accepts K = 1", budget=1) as note:
        p = parse_process(RACE)
        assert run_span(p, Deterministic()).span == 1
        ex = run_span(p, Exhaustive(LIMIT))
        assert (ex.min_span, ex.max_span) == (1, 1)
        k = synthesize_span(IndexEnv(), {Name("a"): annotation_type(parse_type("ch^0()"))}, p)
        assert k == ix.lit(1), k
        assert all(v.ok for v in check(program("tick-race"), "span"))
        note(f"deterministic 1, exhaustive [{ex.min_span}, {ex.max_span}], synthesized {k}")


def test_mergesort_span():
    with criterion("2", "mergesort span <= 2 * 2^n for n = 0..4; [4, 6, 7, 2] within 8", budget=30) as note:
        prog = program("mergesort")
        rng = random.Random(2)
        measured = []
        for n in range(5):
            xs = [rng.randrange(8) for _ in range(2 ** n)]
            r = run(prog, "span", Deterministic(), bindings={"input": lit(xs)})
            assert r.terminated and r.span <= 2 * 2 ** n, (n, r.span)
            out = run_span(sort_call("mergesort", xs), Deterministic())
            assert answer(out.final) == sorted(xs)
            measured.append(r.span)
        r = run(prog, "span", Deterministic(), bindings={"input": "[4, 6, 7, 2]"})
        assert r.span <= 8
        assert answer(run_span(sort_call("mergesort", [4, 6, 7, 2])).final) == [2, 4, 6, 7]
        note(f"spans {measured}, [4, 6, 7, 2] -> {r.span}")


def test_span_checker():
    with criterion("3", "span checker accepts the declared bounds and refutes the perturbed ones", budget=10) as note:
        vs = verdicts("mergesort", "span")
        assert all(v.ok for v in vs.values())
        prog = program("mergesort")
        for name, want in [("merge", "i + j"), ("decompose", "0"), ("mergesort", "pow2(i + 1)")]:
            assert equal_under(prog, vs[name].declared, parse_index(want)), name
        comm = verdicts("mergesort-comm", "span")
        assert all(v.ok for v in comm.values()), [v.message for v in comm.values() if not v.ok]
        assert equal_under(program("mergesort-comm"), comm["mergesort"].declared,
                           parse_index("1 + 7 * i + (4 + kc) * (pow2(i + 1) - 2)"))
        witnesses = []
        for name, bad in [("merge-wrong-bound", "merge"), ("mergesort-wrong-bound", "mergesort")]:
            v = verdicts(name, "span")[bad]
            assert not v.ok and v.witness
            # the body really needs the honest bound, which exceeds the declaration at the witness
            assert ev(vs[bad].synthesized, v.witness) > ev(v.declared, v.witness), (v.witness, v.declared)
            witnesses.append(f"{bad} at {v.declared}: {v.witness}")
        note("; ".join(witnesses))


def sorted_list(rng, n, m):
    return sorted(rng.randrange(m + 1) for _ in range(n))


def call_bound(name, server, mode, **sizes):
    prog = program(name)
    (d,) = [d for d in prog.definitions if d.name == server]
    sig = d.span_sig if mode == "span" else (d.work_sig or d.span_sig)
    return ix.eval_index(sig.cost, sizes, prog.functions or None)


def log_size(n):
    return 0 if n <= 1 else math.ceil(math.log2(n))


@cache
def measured(kind, name, mode, *args):
    p = merge_call(name, *args) if kind == "merge" else sort_call(name, *args)
    if mode == "span":
        r = run_span(p, Exhaustive(LIMIT), 100_000)
        return r.max_span if r.terminated else None
    r = run_work(p, Exhaustive(LIMIT), 100_000)
    return r.max_work if r.terminated else None


def freeze(xs):
    return tuple(xs)


def test_work_checker():
    with criterion("4", "work checker reproduces the declared bounds; measured work within them", budget=60) as note:
        vs = verdicts("mergesort", "work")
        assert all(v.ok for v in vs.values())
        ms = program("mergesort")
        assert equal_under(ms, vs["merge"].declared, parse_index("i + j"))
        assert equal_under(ms, vs["mergesort"].declared, parse_index("i * pow2(i)"))
        comm = verdicts("mergesort-comm", "work")
        assert all(v.ok for v in comm.values()), [v.message for v in comm.values() if not v.ok]
        mc = program("mergesort-comm")
        assert equal_under(mc, comm["merge"].declared, parse_index("(3 + kc) * (i + j) + 1"))
        assert equal_under(mc, comm["decompose"].declared, parse_index("3 * i + 1"))
        # half-integer coefficient: twice the declared bound is the integral form
        d = comm["mergesort"].declared
        twice = parse_index("16 * (pow2(i + 1) - 1) + 9 * i * pow2(i) + 2 * kc * i * pow2(i)")
        assert equal_under(mc, ix.mul(ix.lit(2), d), twice, "i >= 1")
        runs = worst = 0
        rng = random.Random(4)
        for name in ("mergesort", "mergesort-comm"):
            for a in range(5):
                for b in range(5):
                    m = rng.randrange(4)
                    xs, ys = sorted_list(rng, a, m), sorted_list(rng, b, m)
                    w = measured("merge", name, "work", freeze(xs), freeze(ys))
                    assert w is not None, (name, xs, ys)
                    k = call_bound(name, "merge", "work", i=a, j=b, m=m, kc=m + 1)
                    assert w <= k, (name, xs, ys, w, k)
                    runs += 1
                    worst = max(worst, w)
            for xs in ([], [3], [1, 0], [2, 1, 0]):
                if name == "mergesort-comm" and len(xs) > 2:
                    continue
                w = measured("sort", name, "work", freeze(xs))
                i = log_size(len(xs))
                k = call_bound(name, "mergesort", "work", i=i, m=max(xs, default=0), kc=max(xs, default=0) + 1)
                assert w is not None and w <= k, (name, xs, w, k)
                runs += 1
        note(f"{runs} exhaustive runs, largest measured work {worst}")


def test_alternative_merge():
    with criterion("5", "alternative merge: span 1 accepted, work 1 rejected, measured work > 1 = span", budget=10) as note:
        assert all(v.ok for v in check(program("alt-merge"), "span"))
        v = verdicts("alt-merge", "work")["merge"]
        assert not v.ok and v.witness
        p = merge_call("alt-merge", [0, 1, 2], [1, 2, 3])
        work = run_work(p, Deterministic()).work
        assert work > 1
        spans = {run_span(p, pol).span for pol in [Deterministic(), *(RandomPolicy(s) for s in range(5))]}
        assert spans == {1}, spans
        for xs, ys in [([0], [1]), ([1], [0]), ([0, 1], [1]), ([2], [0, 1])]:
            r = run_span(merge_call("alt-merge", xs, ys), Exhaustive(LIMIT))
            assert r.terminated and r.max_span == 1, (xs, ys, r.max_span)
        note(f"size-3 work {work}, spans {sorted(spans)}")


def test_time_step_properties():
    with criterion("6a", "time step total, unique and congruence-compatible on 1000 processes") as note:
        rng = random.Random(61)
        for _ in range(1000):
            p = untyped_process(rng)
            q1, q2 = time_step(p), time_step(p)
            assert congruent(q1, q2)
            has_tick = any(isinstance(t, Tick) for t in canonicalize(p).tops)
            assert (state_key(q1) == state_key(p)) == (not has_tick)
            assert congruent(q1, time_step(shuffle(p, rng)))
        note("1000 processes")


def test_erasure_replay():
    with criterion("6b", "erasure replay on 200 terminating processes") as note:
        rng = random.Random(62)
        done = attempts = 0
        while done < 200:
            attempts += 1
            assert attempts <= 5000, "too few terminating processes"
            verdict = erasure_holds(closed_untyped_process(rng), RandomPolicy(rng.randrange(2 ** 32)))
            if verdict is None:
                continue
            assert verdict
            done += 1
        note(f"{done} replays out of {attempts} generated")


def test_subject_reduction():
    with criterion("6c", "200 typed processes: reductions keep span K, tick steps drop work by 1") as note:
        rng = random.Random(63)
        checked = 0
        for _ in range(200):
            p = typed_process(rng)
            assert synthesize_span(IndexEnv(), {}, p) is not None
            assert synthesize_work(IndexEnv(), {}, p) is not None
            checked += walk_reductions(p, rng) + walk_ticks(p, rng)
        note(f"{checked} successor states checked")


SWEEP_N, SWEEP_M = range(3), range(4)


def sweep_sort(name, modes, lengths, note):
    """Main bound at every (n, m) against exhaustive measurements of inputs that fit."""
    prog = program(name)
    rng = random.Random(64)
    inputs = {freeze(xs) for m in SWEEP_M for k in lengths(m) for xs in [[rng.randrange(m + 1) for _ in range(k)]]}
    inputs.add(())
    cells = 0
    for mode in modes:
        bound = main_bound(prog, mode)
        for xs in sorted(inputs, key=len):
            got = measured("sort", name, mode, xs)
            assert got is not None, (name, mode, xs)
            for n in SWEEP_N:
                for m in SWEEP_M:
                    if len(xs) > 2 ** n or max(xs, default=0) > m:
                        continue
                    k = bound.at({"n": n, "m": m, "kc": m + 1})
                    assert got <= k, (name, mode, xs, n, m, got, k)
                    cells += 1
    note(f"{name}: {len(inputs)} inputs, {cells} cells")


def test_bound_soundness_sweep():
    with criterion("6d", "bound soundness sweep over the corpus, zero violations") as note:
        sweep_sort("mergesort", ("span", "work"), lambda m: range(4) if m == 3 else range(3), note)
        sweep_sort("mergesort-comm", ("span",), lambda m: range(4) if m == 3 else range(3), note)
        sweep_sort("mergesort-comm", ("work",), lambda m: range(3), note)
        # alternative merge: span only, its work declaration does not check
        alt = program("alt-merge")
        bound = main_bound(alt, "span")
        rng = random.Random(65)
        cells = 0
        # both lists of length two already exceed the state limit, so sizes sum to at most three
        for p, q in [(p, q) for p in range(3) for q in range(3) if p + q <= 3]:
            m = rng.randrange(4)
            xs, ys = sorted_list(rng, p, m), sorted_list(rng, q, m)
            r = run(alt, "span", Exhaustive(LIMIT), bindings={"left": lit(xs), "right": lit(ys)})
            assert r.terminated and r.max_span <= bound.at({"p": p, "q": q, "m": m}), (xs, ys, r.max_span)
            cells += 1
        note(f"alt-merge: {cells} cells")
        race = run(program("tick-race"), "span", Exhaustive(LIMIT))
        assert race.max_span <= main_bound(program("tick-race"), "span").at({})
        for mode in ("span", "work"):
            r = run(program("empty"), mode, Exhaustive(LIMIT))
            got = r.max_span if mode == "span" else r.max_work
            assert got <= main_bound(program("empty"), mode).at({})
        note("tick-race and empty within bounds")


def test_entailment_oracle():
    with criterion("6e", "500 entailment problems agree with brute force up to 16") as note:
        rng = random.Random(66)
        counts: dict[str, int] = {}
        for _ in range(500):
            kind = check_against_brute_force(*random_problem(rng), bound=16)
            counts[kind] = counts.get(kind, 0) + 1
        note(", ".join(f"{k} {v}" for k, v in sorted(counts.items())))


if __name__ == "__main__":
    # a fresh interpreter, so pytest sees the test modules before anything imports them
    os.execv(sys.executable, [sys.executable, "-m", "pytest", __file__, "-q", "-p", "no:cacheprovider"])

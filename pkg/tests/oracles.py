"""Reference implementations the tests compare against.

These are written separately from the package on purpose: an evaluator for
index expressions, brute-force validity over a box, and strategies for random
index terms and constraints.
"""

from __future__ import annotations

import itertools
import operator
import random

from hypothesis import strategies as st

from picost.index import Constraint, IApp, ILit, IVar, IndexEnv, Refuted, Valid, entails

_REL = {"<=": operator.le, "<": operator.lt, "=": operator.eq, "!=": operator.ne}


def ev(e, rho) -> int:
    match e:
        case ILit(n):
            return n
        case IVar(name):
            return rho[name]
        case IApp("+", (a, b)):
            return ev(a, rho) + ev(b, rho)
        case IApp("*", (a, b)):
            return ev(a, rho) * ev(b, rho)
        case IApp("-", (a, b)):
            return max(ev(a, rho) - ev(b, rho), 0)
        case IApp("max", (a, b)):
            return max(ev(a, rho), ev(b, rho))
        case IApp("pow2", (a,)):
            return 2 ** ev(a, rho)
    raise ValueError(f"oracle cannot evaluate {e}")


def holds(c: Constraint, rho) -> bool:
    return _REL[c.rel](ev(c.lhs, rho), ev(c.rhs, rho))


def counterexample(hyps, goal, names, bound: int):
    """A valuation in ``[0, bound]^names`` satisfying ``hyps`` but not ``goal``, else None."""
    for vals in itertools.product(range(bound + 1), repeat=len(names)):
        rho = dict(zip(names, vals))
        if all(holds(h, rho) for h in hyps) and not holds(goal, rho):
            return rho
    return None


def check_against_brute_force(names, hyps, goal, bound=16) -> str:
    """Run the entailment checker and assert its answer agrees with brute force; returns the verdict name."""
    verdict = entails(IndexEnv(tuple(names), tuple(hyps)), goal)
    match verdict:
        case Valid():
            assert counterexample(hyps, goal, list(names), bound) is None, (hyps, goal)
        case Refuted(rho):
            assert all(holds(h, rho) for h in hyps) and not holds(goal, rho), (hyps, goal, rho)
    return type(verdict).__name__


VARS = ("i", "j", "k")


def random_index(rng: random.Random, depth: int = 3, names=VARS):
    if depth <= 0 or rng.random() < 0.3:
        return IVar(rng.choice(names)) if rng.random() < 0.6 else ILit(rng.randint(0, 3))
    op = rng.choice(["+", "+", "*", "-", "-", "max", "pow2"])
    if op == "pow2":
        # keep exponents small so brute force stays cheap
        return IApp("pow2", (IVar(rng.choice(names)) if rng.random() < 0.7 else ILit(rng.randint(0, 2)),))
    return IApp(op, (random_index(rng, depth - 1, names), random_index(rng, depth - 1, names)))


def random_constraint(rng: random.Random, names=VARS) -> Constraint:
    return Constraint(random_index(rng, names=names), rng.choice(["<=", "<=", "<", "=", "!="]), random_index(rng, names=names))


def random_problem(rng: random.Random):
    """Hypotheses and goal over at most three variables."""
    names = VARS[: rng.randint(1, 3)]
    hyps = [random_constraint(rng, names) for _ in range(rng.randint(0, 2))]
    return names, hyps, random_constraint(rng, names)


indices = st.builds(random_index, st.randoms(use_true_random=False))
problems = st.builds(random_problem, st.randoms(use_true_random=False))
valuations = st.fixed_dictionaries({v: st.integers(0, 12) for v in VARS})


def merge_sorted(xs, ys) -> list[int]:
    """Plain two-way merge, used to check what the corpus programs compute."""
    out, i, j = [], 0, 0
    while i < len(xs) and j < len(ys):
        if xs[i] <= ys[j]:
            out.append(xs[i])
            i += 1
        else:
            out.append(ys[j])
            j += 1
    return out + list(xs[i:]) + list(ys[j:])

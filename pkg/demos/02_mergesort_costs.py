"""Span and work of merge sort as the input doubles.

Merge sort's two recursive calls run in parallel, so its span (comparisons on
the critical path) grows linearly while its work (all comparisons) grows like
n log n. The checkers derive both from the declared signatures; the measured
numbers below come from the interpreter.
"""

import random

from picost import check, load
from picost.program import main_bound, run
from picost.sem import Deterministic

prog = load("mergesort")

for mode in ("span", "work"):
    verdicts = check(prog, mode)
    print(f"{mode} check:", ", ".join(f"{v.name} {'ok' if v.ok else 'REJECTED'} at {v.declared}" for v in verdicts))

span_bound, work_bound = main_bound(prog, "span"), main_bound(prog, "work")
rng = random.Random(0)
print(f"\n{'n':>2} {'length':>6} {'span':>5} {'bound':>5} {'work':>5} {'bound':>5}")
for n in range(5):
    xs = [rng.randrange(10) for _ in range(2 ** n)]
    binding = {"input": str(xs)}
    s = run(prog, "span", Deterministic(), bindings=binding)
    w = run(prog, "work", Deterministic(), bindings=binding)
    rho = {"n": n, "m": 9}
    print(f"{n:>2} {len(xs):>6} {s.span:>5} {span_bound.at(rho):>5} {w.work:>5} {work_bound.at(rho):>5}")

"""A merge that is fast in span and ruinous in work.

This merge starts both possible recursive calls before the comparison answers
and throws one result away. Only the comparison at the head is on the critical
path, so its span is one. Every discarded call keeps spawning calls of its own,
so the total number of comparisons explodes. The span checker accepts a bound
of one; the work checker refuses the same bound and says where it breaks.
"""

from picost import check, load
from picost.sem import Deterministic, run_span, run_work
from picost.syntax import par
from picost.parser import parse_process, infer_kinds

prog = load("alt-merge")

for mode in ("span", "work"):
    (v,) = [v for v in check(prog, mode) if v.name == "merge"]
    status = "accepted" if v.ok else f"rejected, counterexample {v.witness}"
    print(f"{mode} bound {v.declared}: {status}")

for size in range(1, 5):
    xs, ys = list(range(0, 2 * size, 2)), list(range(1, 2 * size, 2))
    call = infer_kinds(prog.whole(parse_process(f"merge<{xs}, {ys}, out>")))
    span = run_span(call, Deterministic()).span
    work = run_work(call, Deterministic()).work
    print(f"two lists of length {size}: span {span}, work {work}")

"""A communication racing a tick.

The process below has one input waiting on `a`, an output ready on `a`, and a
tick running alongside. Under the tick-last strategy every zero-cost reduction
happens before time moves, so the communication fires first and both ticks are
consumed by the same time step. Letting time move at any moment instead opens a
schedule where the tick fires alone and the freed tick pays for a second step.
"""

from picost import parse_process, run_span
from picost.index import IndexEnv
from picost.parser import parse_type
from picost.sem import Deterministic, Exhaustive
from picost.spantypes import annotation_type, synthesize_span
from picost.syntax import Name

race = parse_process("a(). tick. 0 | a<> | tick. 0")

r = run_span(race, Deterministic())
print(f"tick-last, deterministic: span {r.span}")

r = run_span(race, Exhaustive())
print(f"tick-last, every schedule: span between {r.min_span} and {r.max_span}")

r = run_span(race, Exhaustive(), tick_last=False)
print(f"any interleaving:         span between {r.min_span} and {r.max_span}")

# The type system agrees with the tick-last measurement. With `a` promised at
# time 0, the input's continuation starts at 0 and its tick ends at 1.
ctx = {Name("a"): annotation_type(parse_type("ch^0()"))}
print("synthesized span bound:", synthesize_span(IndexEnv(), ctx, race))

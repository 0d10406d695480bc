"""Writing a server, getting it wrong, and fixing it.

`count` receives a natural number and ticks once per unit before answering on
the reply channel. A first guess declares the cost as `i`, which is one short:
the server ticks before checking for zero, so it ticks on zero too. With
that signature the reply channel is promised at time `i`, which has already
passed when the answer is sent, and the checker says so. Declaring `i + 1`
passes, and the measured spans match it exactly.
"""

from picost import check, run
from picost.parser import parse_program
from picost.sem import Deterministic

TEMPLATE = """
vars n;
param x : Nat[0, n];

def count : serv^0[i](COST; Nat[0, i], out^(COST)(Nat[0, 0]))
  = !count(k, r). tick. match k { 0 -> r<0>; s(j) -> count<j, r> };

main : n + 1 = new done : ch^(n + 1)(Nat[0, 0]) in (count<x, done> | done(z). 0);
"""

for cost in ("i", "i + 1"):
    prog = parse_program(TEMPLATE.replace("COST", cost))
    for v in check(prog, "span"):
        if v.name == "count":
            print(f"declared {cost!r}:", "ok" if v.ok else f"rejected ({v.message})")

prog = parse_program(TEMPLATE.replace("COST", "i + 1"))
for x in range(4):
    print(f"x = {x}: measured span", run(prog, "span", Deterministic(), bindings={"x": str(x)}).span)

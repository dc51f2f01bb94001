#!/usr/bin/env python3
"""Recursive process definitions, composition, and bounded bisimilarity.

Run as `python scripts/process_playground.py`.
"""

from corec import Engine
from corec.checking import bounded_equal, diagram_check
from corec.frontends import parse_ccs

DEFS = """
P = a.(P | c.0) + b.0
Mirror = b.0 + a.(P | c.0)
Drain = alt(a.a.0, b.0)
Handover = a.0 ; b.0
"""


def moves(engine, handle, depth=2, indent="  "):
    step = engine.unfold(handle)
    if not step.children:
        return ["(stuck)"]
    out = []
    for (action, _), child in step.children:
        out.append(f"{indent}--{action}-->")
        if depth > 1:
            out.extend(moves(engine, child, depth - 1, indent + "    "))
    return out


def main():
    engine = Engine()
    system = parse_ccs(DEFS)
    sol = engine.solve(system)

    print("transitions of P to depth 2:")
    print("\n".join(moves(engine, sol["P"])))

    report = diagram_check(system, sol, depth=4)
    print(report.to_text())

    print("P ~ Mirror at depth 6:",
          bounded_equal(sol["P"], sol["Mirror"], 6))
    print("P ~ Drain  at depth 2:",
          bounded_equal(sol["P"], sol["Drain"], 2))

    print("alternation of a.a.0 with b.0, depth 3:")
    print("\n".join(moves(engine, sol["Drain"], 3)))


if __name__ == "__main__":
    main()

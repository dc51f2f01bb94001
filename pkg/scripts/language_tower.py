#!/usr/bin/env python3
"""The staged language operations and a grammar solved as an equation system.

Run as `python scripts/language_tower.py`.
"""

import itertools
import random

from corec import Engine
from corec.frontends import compile_gnf, parse_gnf
from corec.instances import (
    language_member,
    language_table,
    language_term,
    oracle_eval,
    random_language_expr,
)

GRAMMAR = """terminals: a b
nonterminals: S B
start: S
S -> a S B
S -> b
B -> b
"""


def main():
    engine = Engine()
    table = language_table("ab")
    print("staged symbols:", ", ".join(table.sig.names))

    expr = ("inter", ("star", ("concat", ("char", "a"), ("char", "b"))),
            ("compl", ("eps",)))
    handle = engine.interpret_term(table, language_term(table, expr))
    hits = [w for n in range(1, 7)
            for t in itertools.product("ab", repeat=n)
            if language_member(handle, w := "".join(t))]
    print("(ab)* without the empty word, up to length 6:", hits)

    rng = random.Random(2)
    checked = 0
    for _ in range(20):
        e = random_language_expr(rng, "ab", 3)
        h = engine.interpret_term(table, language_term(table, e))
        for n in range(5):
            for t in itertools.product("ab", repeat=n):
                w = "".join(t)
                assert language_member(h, w) == oracle_eval(
                    "word_membership", e, w, ("a", "b"))
                checked += 1
    print(f"membership agrees with enumeration on {checked} word queries")

    sol = engine.solve(compile_gnf(parse_gnf(GRAMMAR)))
    words = sorted(
        ("".join(t) for n in range(8)
         for t in itertools.product("ab", repeat=n)
         if language_member(sol["S"], "".join(t))),
        key=len)
    print("a^n b b^n words up to length 7:", words)


if __name__ == "__main__":
    main()

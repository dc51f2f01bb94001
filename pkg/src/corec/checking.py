"""Bounded equality, solution-diagram verification, and check suites.

Equality of solved states is approximated to a finite depth: identical
observation trees for the deterministic kinds, depth-bounded mutual
simulation with set semantics for processes.  Failures carry a witness at
the least depth where the behaviors diverge.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .behavior import move_action
from .errors import KindMismatch, UnknownSuite
from .solver import (
    Engine,
    ExternalRhs,
    FlatRhs,
    GuardedRhs,
    SolutionHandle,
    System,
)
from .terms import Var, mk_app


@dataclass(frozen=True)
class Witness:
    """Least depth and observation path at which two behaviors diverge."""

    depth: int
    path: tuple
    detail: str


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    witness: Optional[Witness] = None
    detail: str = ""

    def to_text(self) -> str:
        if self.passed:
            return f"PASS {self.name}" + (f" ({self.detail})" if self.detail else "")
        where = ""
        if self.witness is not None:
            where = (f" [depth {self.witness.depth}, path "
                     f"{list(self.witness.path)}: {self.witness.detail}]")
        return f"FAIL {self.name}{where}" + (
            f" ({self.detail})" if self.detail else "")

    def to_json(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.witness is not None:
            out["witness"] = {
                "depth": self.witness.depth,
                "path": [str(p) for p in self.witness.path],
                "detail": self.witness.detail,
            }
        return out


def reports_to_text(reports) -> str:
    return "\n".join(r.to_text() for r in reports)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)


# ---------------------------------------------------------------------------
# Bounded equality


def bounded_equal(h1: SolutionHandle, h2: SolutionHandle, depth: int) -> bool:
    """Depth-d behavioral equality (mutual simulation for processes)."""
    if h1.kind != h2.kind:
        raise KindMismatch(
            f"cannot compare {h1.kind.name} with {h2.kind.name}")
    return _beq(h1, h2, depth, {}, {})


def _key(h1, h2):
    return (id(h1.engine), h1.node, id(h2.engine), h2.node)


def _beq(h1, h2, d, proven, refuted) -> bool:
    if d <= 0:
        return True
    if h1.engine is h2.engine and h1.node == h2.node:
        return True
    key = _key(h1, h2)
    if proven.get(key, 0) >= d:
        return True
    if key in refuted and refuted[key] <= d:
        return False
    s1 = h1.engine.unfold(h1)
    s2 = h2.engine.unfold(h2)
    if h1.kind.deterministic:
        ok = s1.label == s2.label and all(
            _beq(c1, c2, d - 1, proven, refuted)
            for (_, c1), (_, c2) in zip(s1.children, s2.children))
    else:
        ok = _mutual_sim(s1, s2, d, proven, refuted) and \
            _mutual_sim(s2, s1, d, proven, refuted)
    if ok:
        proven[key] = max(proven.get(key, 0), d)
    else:
        refuted[key] = min(refuted.get(key, d), d)
    return ok


def _mutual_sim(s1, s2, d, proven, refuted) -> bool:
    for p1, c1 in s1.children:
        a = move_action(p1)
        if not any(move_action(p2) == a and _beq(c1, c2, d - 1, proven, refuted)
                   for p2, c2 in s2.children):
            return False
    return True


def find_divergence(h1: SolutionHandle, h2: SolutionHandle,
                    depth: int) -> Optional[Witness]:
    """Minimal-depth divergence witness, or None when depth-d equal."""
    if h1.kind != h2.kind:
        raise KindMismatch(
            f"cannot compare {h1.kind.name} with {h2.kind.name}")
    for d in range(1, depth + 1):
        found = _div(h1, h2, d, ())
        if found is not None:
            return found
    return None


def _div(h1, h2, d, path) -> Optional[Witness]:
    if d <= 0:
        return None
    if h1.engine is h2.engine and h1.node == h2.node:
        return None
    s1 = h1.engine.unfold(h1)
    s2 = h2.engine.unfold(h2)
    if h1.kind.deterministic:
        if s1.label != s2.label:
            return Witness(len(path), path,
                           f"label {s1.label} != {s2.label}")
        for (p, c1), (_, c2) in zip(s1.children, s2.children):
            found = _div(c1, c2, d - 1, path + (p,))
            if found is not None:
                return found
        return None
    proven, refuted = {}, {}
    for s_from, s_to, side in ((s1, s2, "left"), (s2, s1, "right")):
        for p, c in s_from.children:
            a = move_action(p)
            if not any(move_action(q) == a and
                       _beq(c, c2, d - 1, proven, refuted)
                       for q, c2 in s_to.children):
                return Witness(len(path), path + (p,),
                               f"{side} move {a!r} has no depth-{d - 1} match")
    return None


# ---------------------------------------------------------------------------
# Solution diagram


def diagram_check(system: System, sol, depth: int,
                  name: str = "solution-diagram") -> CheckReport:
    """Verify that each solved variable unfolds as its right-hand side.

    Observing the solution of x to the given depth must equal first
    applying x's right-hand side to the solved states and then observing.
    """
    for var in system.vars:
        engine = sol[var].engine
        expected = engine.materialize_rhs(system, var, sol)
        witness = find_divergence(sol[var], expected, depth)
        if witness is not None:
            return CheckReport(name, False, witness, f"variable {var!r}")
    return CheckReport(name, True, detail=f"{len(system.vars)} variables")


# ---------------------------------------------------------------------------
# Suites


def _divergence_over(pairs, depth):
    for label, a, b in pairs:
        w = find_divergence(a, b, depth)
        if w is not None:
            return w, label
    return None, None


def _suite_modularity(seed: int):
    from . import instances as inst

    rng = random.Random(seed or 0xA11CE)
    reports = []
    engine = Engine()
    base = inst.stream_base_table()
    full = inst.stream_table()

    def rand_stream():
        pre, cyc = inst.random_periodic_spec(rng)
        return inst.periodic_stream(engine, pre, cyc)

    # extending a table must leave the old operations' behavior untouched
    pairs = []
    shuffled = inst.extend_with_rps(base, inst.shuffle_rps(base.sig))
    for _ in range(8):
        a, b = rand_stream(), rand_stream()
        for opname in ("plus", "zip"):
            pairs.append((opname,
                          engine.interpret_op(base, base.op(opname), [a, b]),
                          engine.interpret_op(shuffled, shuffled.op(opname),
                                              [a, b])))
        r = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        pairs.append(("mult",
                      engine.interpret_op(base, base.op("mult", r), [a]),
                      engine.interpret_op(shuffled, shuffled.op("mult", r),
                                          [a])))
    w, label = _divergence_over(pairs, 8)
    reports.append(CheckReport("rps-restriction", w is None, w,
                               label or "old symbols unchanged at depth 8"))

    # two independent extensions commute
    t12 = inst.extend_with_rps(
        inst.extend_with_rps(base, inst.shuffle_rps(base.sig)),
        inst.convolution_rps(
            inst.extend_with_rps(base, inst.shuffle_rps(base.sig)).sig))
    t21 = inst.extend_with_rps(
        inst.extend_with_rps(base, inst.convolution_rps(base.sig)),
        inst.shuffle_rps(
            inst.extend_with_rps(base, inst.convolution_rps(base.sig)).sig))
    pairs = []
    for _ in range(8):
        a, b = rand_stream(), rand_stream()
        for opname in ("shuffle", "conv", "plus"):
            pairs.append((opname,
                          engine.interpret_op(t12, t12.op(opname), [a, b]),
                          engine.interpret_op(t21, t21.op(opname), [a, b])))
    w, label = _divergence_over(pairs, 8)
    reports.append(CheckReport("rps-order-independence", w is None, w,
                               label or "either extension order, depth 8"))

    # solving a composed system equals solving in stages
    ok_s, w_s = _compositionality_stream(engine)
    ok_p, w_p = _compositionality_process(Engine())
    reports.append(CheckReport(
        "compositionality", ok_s and ok_p, w_s or w_p,
        "streams at depth 12, processes at depth 4"))

    # a definition posed as a degenerate sandwiched scheme solves the same
    pairs = []
    degenerate = inst.register_srps(base, _shuffle_as_srps(base.sig))
    for _ in range(8):
        a, b = rand_stream(), rand_stream()
        pairs.append(("shuffle",
                      engine.interpret_op(full, full.op("shuffle"), [a, b]),
                      engine.interpret_op(degenerate,
                                          degenerate.op("shuffle"), [a, b])))
    w, label = _divergence_over(pairs, 8)
    reports.append(CheckReport("srps-equals-rps", w is None, w,
                               label or "degenerate guard at root, depth 8"))

    reports.append(_star_derivative_report(rng))
    return reports


def _shuffle_as_srps(base_sig):
    from . import instances as inst
    from .rules import CtxGuard, SrpsDef

    rps = inst.shuffle_rps(base_sig)
    rule = rps.rules["shuffle"].conclude

    def ctx(op, args):
        return CtxGuard(rule(op, args))

    return SrpsDef(rps.new_sig, {"shuffle": ctx})


def _compositionality_stream(engine: Engine):
    from . import instances as inst
    from .behavior import STREAM, stream_step

    table = inst.stream_table()
    plus = table.op("plus")
    f = System(STREAM, table, ("p",),
               {"p": FlatRhs(stream_step(1, Var("p")))})
    e = System(STREAM, table, ("q", "w"), {
        "q": FlatRhs(stream_step(Fraction(1, 2),
                                 mk_app(plus, (Var("q"), Var("w"))))),
        "w": ExternalRhs("p"),
    })
    _, ok = engine.compose_systems(f, e, depth=12)
    if ok:
        return True, None
    return False, _recheck_composition(engine, f, e, 12)


def _compositionality_process(engine: Engine):
    from . import instances as inst
    from .behavior import process_step
    from .rules import CtxApp, CtxGuard

    table = inst.ccs_table(inst.DEFAULT_ACTIONS)
    zero = mk_app(table.op("sum", 0), ())
    c0 = mk_app(table.op("pref", "c"), (zero,))
    par_xc = mk_app(table.op("par"), (Var("x"), c0))
    f = System(table.kind, table, ("x",), {
        "x": FlatRhs(process_step((("a", par_xc), ("b", zero)))),
    })
    y_plus_z = mk_app(table.op("sum", 2), (Var("y"), Var("z")))
    e = System(table.kind, table, ("y", "z"), {
        "y": GuardedRhs(CtxApp(table.op("par"), (
            CtxGuard(process_step((("b", y_plus_z),))),
            CtxGuard(process_step((("a", Var("z")),))),
        ))),
        "z": ExternalRhs("x"),
    })
    _, ok = engine.compose_systems(f, e, depth=4)
    if ok:
        return True, None
    return False, _recheck_composition(engine, f, e, 4)


def _recheck_composition(engine: Engine, f: System, e: System, depth: int):
    from .solver import ConstRhs

    f_sol = engine.solve(f)
    staged = {}
    for v in e.vars:
        r = e.rhs[v]
        staged[v] = ConstRhs(f_sol[r.var]) if isinstance(r, ExternalRhs) else r
    s_sol = engine.solve(System(e.kind, e.table, e.vars, staged))
    combined, _ = engine.compose_systems(f, e, depth=0)
    c_sol = engine.solve(combined)
    for v in e.vars:
        w = find_divergence(c_sol[v], s_sol[v], depth)
        if w is not None:
            return w
    for v in f.vars:
        w = find_divergence(c_sol[v], f_sol[v], depth)
        if w is not None:
            return w
    return None


def _star_derivative_report(rng) -> CheckReport:
    from . import instances as inst

    table = inst.language_table("ab")
    engine = Engine()
    pairs = []
    for _ in range(10):
        expr = inst.random_language_expr(rng, "ab", 3)
        lang = engine.interpret_term(table, inst.language_term(table, expr))
        star = engine.interpret_op(table, table.op("star"), [lang])
        for letter in "ab":
            lhs = engine.unfold(star).child(letter)
            deriv = engine.unfold(lang).child(letter)
            rhs = engine.interpret_op(table, table.op("concat"),
                                      [deriv, star])
            pairs.append((f"star-deriv {letter}", lhs, rhs))
    w, label = _divergence_over(pairs, 5)
    return CheckReport("star-derivative-law", w is None, w,
                       label or "(L*)^a = L^a . L* at depth 5")


def _suite_language_laws(seed: int):
    from . import instances as inst

    rng = random.Random(seed or 0x1A26)
    table = inst.language_table("ab")
    engine = Engine()
    words = ["".join(w) for n in range(7)
             for w in itertools.product("ab", repeat=n)]
    bad = None
    for i in range(50):
        expr = inst.random_language_expr(rng, "ab", 4)
        handle = engine.interpret_term(table, inst.language_term(table, expr))
        for word in words:
            got = inst.language_member(handle, word)
            want = inst.oracle_eval("word_membership", expr, word, ("a", "b"))
            if got != want:
                bad = Witness(len(word), tuple(word),
                              f"term {i}: engine {got}, oracle {want}")
                break
        if bad:
            break
    reports = [CheckReport("membership-vs-enumeration", bad is None, bad,
                           "50 random terms, all words up to length 6")]
    reports.append(_star_derivative_report(rng))
    return reports


_SUITES = {
    "modularity": _suite_modularity,
    "language-laws": _suite_language_laws,
}


def suite_names():
    return tuple(_SUITES)


def run_suite(name: str, seed: int = 0):
    """Run a registered property suite; returns its reports."""
    try:
        fn = _SUITES[name]
    except KeyError:
        raise UnknownSuite(f"no suite named {name!r}") from None
    return fn(seed)

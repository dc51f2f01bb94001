from fractions import Fraction

import pytest

from helpers import (
    flat_tm_system,
    flat_tm_values,
    milner_system,
    sandwiched_tm_system,
    swapped_guard_system,
    swapped_guard_values,
)

from corec.behavior import STREAM, stream_step
from corec.checking import bounded_equal, diagram_check
from corec.errors import (
    ArityMismatch,
    InvalidHandle,
    KindMismatch,
    RuleDiverged,
    UnguardedPath,
    ValidationFailed,
    VariableClash,
)
from corec.instances import (
    DEFAULT_ACTIONS,
    ccs_table,
    language_table,
    language_term,
    language_member,
    oracle_eval,
    periodic_stream,
    periodic_values,
    stream_table,
    stream_take,
)
from corec.rules import CtxApp, CtxGuard
from corec.solver import (
    ConstRhs,
    Engine,
    EngineConfig,
    ExternalRhs,
    FlatRhs,
    GuardedRhs,
    System,
)
from corec.terms import Param, Var, mk_app


@pytest.fixture()
def engine():
    return Engine()


def _two_constant_states(engine, table):
    sys = System(STREAM, table, ("h1", "h2"), {
        "h1": FlatRhs(stream_step(1, Var("h1"))),
        "h2": FlatRhs(stream_step(2, Var("h2"))),
    })
    sol = engine.solve(sys)
    return sol["h1"], sol["h2"]


def test_unfold_plus_reuses_the_same_state(engine):
    table = stream_table()
    h1, h2 = _two_constant_states(engine, table)
    s = engine.interpret_op(table, table.op("plus"), [h1, h2])
    step = engine.unfold(s)
    assert step.label == 3
    # (1+2, plus(h1', h2')) and both tails are the states themselves,
    # so the continuation is the very same shared state
    assert step.children == (("tail", s),)


def test_unfold_zip(engine):
    table = stream_table()
    h1, h2 = _two_constant_states(engine, table)
    z = engine.interpret_op(table, table.op("zip"), [h1, h2])
    step = engine.unfold(z)
    assert step.label == 1
    assert step.children[0][1] == engine.interpret_op(
        table, table.op("zip"), [h2, h1])


def test_unfold_language_intersection_label(engine):
    table = language_table("ab")
    la = engine.interpret_term(table, language_term(table, ("char", "a")))
    eps = engine.interpret_term(table, language_term(table, ("eps",)))
    inter = engine.interpret_op(table, table.op("inter"), [la, eps])
    assert engine.unfold(inter).label is False
    union = engine.interpret_op(table, table.op("union"), [la, eps])
    assert engine.unfold(union).label is True


def test_flat_tm_solution_and_iteration_oracle(engine):
    sol = engine.solve(flat_tm_system())
    assert stream_take(sol["t"], 4) == [1, 0, 1, 1]
    want_u, want_t = flat_tm_values(16)
    assert stream_take(sol["u"], 16) == want_u
    assert stream_take(sol["t"], 16) == want_t


def test_sandwiched_tm_is_thue_morse(engine):
    sol = engine.solve(sandwiched_tm_system())
    got = stream_take(sol["u"], 16)
    assert got == [oracle_eval("thue_morse", i) for i in range(16)]


def test_swapped_guard_system_regression(engine):
    # the same equations with the other variable under each guard solve to
    # a different automatic sequence, pinned by its own recurrence
    sol = engine.solve(swapped_guard_system())
    assert stream_take(sol["u"], 16) == swapped_guard_values(16)
    assert stream_take(sol["u"], 8) == [0, 1, 1, 0, 0, 1, 0, 1]


def test_milner_equation_transitions(engine):
    table = ccs_table(DEFAULT_ACTIONS)
    sol = engine.solve(milner_system(table))
    step = engine.unfold(sol["x"])
    actions = [p for p, _ in step.children]
    assert actions == [("a", 0), ("b", 0)]
    a_target = step.children[0][1]
    zero = mk_app(table.op("sum", 0), ())
    c0 = mk_app(table.op("pref", "c"), (zero,))
    expect = engine.interpret_term(
        table, mk_app(table.op("par"), (Param(sol["x"]), c0)))
    assert a_target == expect


def test_memo_determinism(engine):
    sol = engine.solve(flat_tm_system())
    first = engine.unfold(sol["t"])
    again = engine.unfold(sol["t"])
    assert first == again


def test_observe_depth_zero_is_cut(engine):
    sol = engine.solve(flat_tm_system())
    tree = engine.observe(sol["t"], 0)
    assert tree.cut


def test_observe_monotone(engine):
    from corec.behavior import is_prefix

    sol = engine.solve(flat_tm_system())
    for d in range(5):
        assert is_prefix(engine.observe(sol["u"], d),
                         engine.observe(sol["u"], d + 1))


def test_interpret_shuffle_against_binomial_oracle(engine):
    table = stream_table()
    ones = periodic_stream(engine, (), (1,))
    h = engine.interpret_op(table, table.op("shuffle"), [ones, ones])
    assert stream_take(h, 5) == [1, 2, 4, 8, 16]
    assert stream_take(h, 5) == oracle_eval(
        "binomial_shuffle", [1] * 5, [1] * 5)


def test_interpret_star_concat_membership(engine):
    table = language_table("ab")
    ab = ("concat", ("char", "a"), ("char", "b"))
    h = engine.interpret_term(table, language_term(table, ("star", ab)))
    assert [language_member(h, w) for w in ("", "ab", "abab", "a")] == \
        [True, True, True, False]


def test_zip_fixpoint_head_law(engine):
    # f defined by f(s) = zip(s, f(s)) keeps the head of its argument
    from corec.instances import stream_base_table
    from corec.rules import GsosRule, RpsDef, extend_with_rps
    from corec.terms import sig_sum, signature

    base = stream_base_table()
    new = signature(("fix", 1))
    s = sig_sum(base.sig, new)

    def fix_rule(op, args):
        (a,) = args
        return stream_step(a.head, mk_app(s.op("zip"), (
            mk_app(s.op("fix"), (a.self_term,)), a.tail)))

    table = extend_with_rps(base, RpsDef(new, {
        "fix": GsosRule(s.op("fix"), fix_rule)}))
    sigma = periodic_stream(engine, (5, 7), (2,))
    h = engine.interpret_op(table, table.op("fix"), [sigma])
    assert stream_take(h, 1)[0] == 5
    got = stream_take(h, 16)
    assert got == oracle_eval("zip_fixpoint", stream_take(sigma, 16), 16)


def test_interpret_op_errors(engine):
    table = stream_table()
    ones = periodic_stream(engine, (), (1,))
    with pytest.raises(ArityMismatch):
        engine.interpret_op(table, table.op("plus"), [ones])
    lang = language_table("ab")
    with pytest.raises(KindMismatch):
        engine.interpret_op(lang, lang.op("star"), [ones])


def test_cross_engine_parameters_are_rejected(engine):
    other = Engine()
    foreign = periodic_stream(other, (), (1,))
    table = stream_table()
    sys = System(STREAM, table, ("x",), {
        "x": FlatRhs(stream_step(1, Param(foreign))),
    })
    with pytest.raises(InvalidHandle):
        engine.solve(sys)
    with pytest.raises(InvalidHandle):
        engine.unfold(foreign)


def test_constant_parameters_resolve(engine):
    table = stream_table()
    ones = periodic_stream(engine, (), (1,))
    sys = System(STREAM, table, ("x", "y"), {
        "x": FlatRhs(stream_step(9, mk_app(table.op("plus"),
                                           (Var("y"), Param(ones))))),
        "y": ConstRhs(ones),
    })
    sol = engine.solve(sys)
    assert stream_take(sol["x"], 3) == [9, 2, 2]
    assert sol["y"] == ones


def test_external_refs_do_not_solve_directly(engine):
    table = stream_table()
    sys = System(STREAM, table, ("x",), {"x": ExternalRhs("p")})
    with pytest.raises(ValidationFailed):
        engine.solve(sys)


def test_reserved_variable_names_rejected(engine):
    table = stream_table()
    sys = System(STREAM, table, ("~x",), {
        "~x": FlatRhs(stream_step(1, Var("~x")))})
    with pytest.raises(ValidationFailed):
        engine.solve(sys)


def test_unguarded_context_rejected(engine):
    table = stream_table()
    sys = System(STREAM, table, ("x",), {
        "x": GuardedRhs(CtxApp(table.op("zip"), (Var("x"), Var("x")))),
    })
    with pytest.raises(UnguardedPath):
        engine.solve(sys)


def test_rule_fuse_trips_as_diverged():
    small = Engine(EngineConfig(unfold_fuse=3))
    table = stream_table()
    ones = periodic_stream(small, (), (1,))
    h = small.interpret_op(table, table.op("shuffle"), [ones, ones])
    with pytest.raises(RuleDiverged):
        small.observe(h, 12)


def test_fresh_names_are_reserved(engine):
    from corec.terms import is_reserved_name

    assert is_reserved_name(engine.fresh_var())


def test_compose_systems_ccs_matches_displayed_combination(engine):
    table = ccs_table(DEFAULT_ACTIONS)
    f = milner_system(table)
    y_plus_z = mk_app(table.op("sum", 2), (Var("y"), Var("z")))
    e = System(table.kind, table, ("y", "z"), {
        "y": GuardedRhs(CtxApp(table.op("par"), (
            CtxGuard(stream_like_process((("b", y_plus_z),))),
            CtxGuard(stream_like_process((("a", Var("z")),))),
        ))),
        "z": ExternalRhs("x"),
    })
    combined, ok = engine.compose_systems(f, e, depth=4)
    assert ok
    assert combined.vars == ("y", "z", "x")
    # the external row is replaced by the base equation's right-hand side
    assert combined.rhs["z"] == f.rhs["x"]
    assert combined.rhs["y"] == e.rhs["y"]


def stream_like_process(moves):
    from corec.behavior import process_step

    return process_step(moves)


def test_compose_systems_streams(engine):
    table = stream_table()
    f = System(STREAM, table, ("p",), {
        "p": FlatRhs(stream_step(1, Var("p")))})
    e = System(STREAM, table, ("q", "w"), {
        "q": FlatRhs(stream_step(7, mk_app(table.op("plus"),
                                           (Var("q"), Var("w"))))),
        "w": ExternalRhs("p"),
    })
    combined, ok = engine.compose_systems(f, e, depth=12)
    assert ok
    sol = engine.solve(combined)
    assert stream_take(sol["q"], 4) == [7, 8, 9, 10]


def test_compose_systems_variable_clash(engine):
    table = stream_table()
    f = System(STREAM, table, ("p",), {
        "p": FlatRhs(stream_step(1, Var("p")))})
    e = System(STREAM, table, ("p",), {
        "p": FlatRhs(stream_step(2, Var("p")))})
    with pytest.raises(VariableClash):
        engine.compose_systems(f, e)


def test_elaborate_guards_degenerate_root(engine):
    table = stream_table()
    ones = periodic_stream(engine, (), (1,))
    ctx = CtxGuard(stream_step(3, Var("k")))
    step = engine.elaborate_guards(table, ctx, {"k": ones})
    assert step.label == 3
    assert stream_take(step.children[0][1], 2) == [1, 1]


def test_elaborate_guards_zip_of_guards(engine):
    table = stream_table()
    u = periodic_stream(engine, (), (4,))
    t = periodic_stream(engine, (), (9,))
    ctx = CtxApp(table.op("zip"), (
        CtxGuard(stream_step(1, Param(u))),
        CtxGuard(stream_step(0, Param(t))),
    ))
    step = engine.elaborate_guards(table, ctx, {})
    # the zip rule applied to heads 1 and 0
    assert step.label == 1
    tail = step.children[0][1]
    assert stream_take(tail, 4) == [0, 4, 9, 4]


def test_elaborate_guards_unguarded(engine):
    table = stream_table()
    with pytest.raises(UnguardedPath):
        engine.elaborate_guards(table, Var("x"), {})


def test_srps_guard_elaboration_matches_hand_reduction(engine):
    # the four fresh guard states of the swapped-guard pair, written out
    # by hand as a flat system, then combined by interpreting zip
    table = stream_table()
    z = table.op("zip")
    t_term = mk_app(z, (Var("g1"), Var("g2")))
    u_term = mk_app(z, (Var("g3"), Var("g4")))
    flat = System(STREAM, table, ("g1", "g2", "g3", "g4"), {
        "g1": FlatRhs(stream_step(1, u_term)),
        "g2": FlatRhs(stream_step(0, t_term)),
        "g3": FlatRhs(stream_step(0, t_term)),
        "g4": FlatRhs(stream_step(1, u_term)),
    })
    hand = engine.solve(flat)
    t_hand = engine.interpret_op(table, z, [hand["g1"], hand["g2"]])
    u_hand = engine.interpret_op(table, z, [hand["g3"], hand["g4"]])
    direct = engine.solve(swapped_guard_system())
    assert bounded_equal(t_hand, direct["t"], 16)
    assert bounded_equal(u_hand, direct["u"], 16)


def test_solutions_satisfy_their_diagram(engine):
    for system in (flat_tm_system(), sandwiched_tm_system(),
                   swapped_guard_system()):
        sol = engine.solve(system)
        assert diagram_check(system, sol, 8).passed


def test_periodic_stream_matches_value_oracle(engine):
    pre, cyc = (Fraction(1), Fraction(2)), (Fraction(3), Fraction(4))
    h = periodic_stream(engine, pre, cyc)
    assert stream_take(h, 9) == periodic_values(pre, cyc, 9)

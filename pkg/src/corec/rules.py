"""Executable rule tables and their extension by recursive definitions.

A rule assigns to an operation symbol, given one observation per argument,
a single conclusion step whose continuations are terms over the argument
placeholders.  Tables are immutable; extending a table with new recursively
defined operations returns a new table whose old rules have their
conclusions embedded into the sum signature, so old interpretations are
untouched.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Tuple

from . import behavior
from .behavior import Step, check_step
from .errors import (
    ArityMismatch,
    DuplicateRule,
    ForeignSymbol,
    KindMismatch,
    MissingRule,
    UnguardedPath,
)
from .terms import (
    App,
    OpSym,
    Signature,
    Term,
    Var,
    embed_signature,
    free_vars,
    sig_sum,
    signature,
)

# ---------------------------------------------------------------------------
# Premise observations and placeholder naming


def placeholder_self(i: int) -> Var:
    return Var(f"~a{i}")


def placeholder_tail(i: int, port) -> Var:
    return Var(f"~a{i}.{port}")


def placeholder_move(i: int, j: int) -> Var:
    return Var(f"~a{i}.m{j}")


@dataclass(frozen=True)
class ArgObs:
    """What a rule sees of one argument: its one-step behavior plus itself.

    ``tails`` holds the port continuations of deterministic kinds, ``moves``
    the transition list of processes; continuations and ``self_term`` are
    opaque placeholder terms to be used verbatim inside conclusions.
    """

    label: object
    tails: tuple
    moves: tuple
    self_term: Term

    @property
    def head(self):
        return self.label

    @property
    def tail(self) -> Term:
        return self.at("tail")

    @property
    def left(self) -> Term:
        return self.at("L")

    @property
    def right(self) -> Term:
        return self.at("R")

    def at(self, port) -> Term:
        for p, t in self.tails:
            if p == port:
                return t
        raise KeyError(port)


def arg_obs(kind, index: int, step: Step) -> Tuple[ArgObs, dict]:
    """Placeholder view of an observed argument plus the name binding."""
    binding = {}
    self_t = placeholder_self(index)
    binding[self_t.name] = ("self",)
    tails = ()
    moves = ()
    if kind.deterministic:
        out = []
        for port, child in step.children:
            v = placeholder_tail(index, port)
            binding[v.name] = ("port", port)
            out.append((port, v))
        tails = tuple(out)
    else:
        out = []
        for j, (port, child) in enumerate(step.children):
            v = placeholder_move(index, j)
            binding[v.name] = ("move", j)
            out.append((behavior.move_action(port), v))
        moves = tuple(out)
    return ArgObs(step.label, tails, moves, self_t), binding


# ---------------------------------------------------------------------------
# Rules, contexts, and definitions


@dataclass(frozen=True)
class GsosRule:
    """One rule: op symbol plus a total conclusion function.

    ``conclude(op, args)`` receives the concrete symbol (carrying the family
    parameter, if any) and one ArgObs per argument; it must return a Step
    whose continuations are terms over the declared placeholders and the
    table's signature.  ``probe_params`` supplies example parameters so
    parametric families can be validated.
    """

    op: OpSym
    conclude: Callable
    probe_params: tuple = (None,)


@dataclass(frozen=True)
class CtxApp:
    """Outer context node: a given symbol over sub-contexts."""

    op: OpSym
    args: tuple


@dataclass(frozen=True)
class CtxGuard:
    """Guard leaf: a full one-step observation over continuation terms."""

    step: Step


Context = object  # CtxApp | CtxGuard; a bare Term is an unguarded leaf


@dataclass(frozen=True)
class RpsDef:
    """Recursively defined operations whose bodies are one guarded step.

    Conclusion terms range over the sum of the base signature and
    ``new_sig``; form the sum with ``sig_sum(table.sig, new_sig)`` when
    authoring the rules.
    """

    new_sig: Signature
    rules: Mapping[str, GsosRule]


@dataclass(frozen=True)
class SrpsDef:
    """Sandwiched definitions: the guard may sit inside a context of givens.

    ``contexts`` maps each new symbol to a host function
    ``(op, args) -> Context``; every path from the context root to a
    continuation term must pass exactly one guard.
    """

    new_sig: Signature
    contexts: Mapping[str, Callable]
    probe_params: Mapping[str, tuple] = field(default_factory=dict)


@dataclass(frozen=True)
class _SrpsEntry:
    fn: Callable
    outer_names: frozenset
    probe_params: tuple = (None,)


@dataclass(frozen=True)
class TableReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


class RuleTable:
    """An abstract GSOS rule as an executable table, one rule per symbol."""

    __slots__ = ("kind", "sig", "rules", "srps", "_report")

    def __init__(self, kind, sig: Signature, rules, srps=None):
        self.kind = kind
        self.sig = sig
        self.rules = dict(rules)
        self.srps = dict(srps or {})
        self._report = None

    def rule_for(self, name: str) -> GsosRule:
        try:
            return self.rules[name]
        except KeyError:
            raise MissingRule(f"no rule for symbol {name!r}") from None

    def srps_backed(self, name: str) -> bool:
        return name in self.srps

    def op(self, name: str, param=None) -> OpSym:
        return self.sig.op(name, param)

    def validation(self) -> TableReport:
        if self._report is None:
            self._report = validate_table(self)
        return self._report


# ---------------------------------------------------------------------------
# Probing: run a rule on synthetic premises and check its conclusion


def _probe_labels(kind, rng: random.Random):
    if isinstance(kind, behavior.LanguageKind):
        return rng.choice([True, False])
    if isinstance(kind, behavior.ProcessKind):
        return None
    return Fraction(rng.randint(-3, 3), rng.randint(1, 4))


def _synthetic_args(kind, arity: int, rng: random.Random):
    args = []
    names = set()
    for i in range(arity):
        if kind.deterministic:
            step = Step(_probe_labels(kind, rng),
                        tuple((p, None) for p in kind.ports))
        else:
            n = rng.randint(0, 2)
            step = Step(None, tuple(
                (rng.choice(kind.actions), None) for _ in range(n)))
        obs, binding = arg_obs(kind, i, step)
        args.append(obs)
        names.update(binding)
    return args, names


def _check_conclusion(table_sig: Signature, kind, step: Step, names):
    if not isinstance(step, Step):
        raise KindMismatch(f"rule conclusion is not a Step: {step!r}")
    check_step(kind, step)
    for _, t in step.children:
        if not isinstance(t, Term):
            raise KindMismatch(f"conclusion continuation is not a term: {t!r}")
        loose = free_vars(t) - names
        if loose:
            raise ForeignSymbol(f"undeclared placeholders in conclusion: {loose}")
        for node_op in _ops_of(t):
            if not table_sig.contains(node_op):
                raise ForeignSymbol(
                    f"conclusion uses {node_op!r} outside the table signature")


def _ops_of(t: Term):
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, App):
            yield n.op
            stack.extend(n.args)


def _probe_rule(kind, sig: Signature, name: str, rule: GsosRule,
                rng: random.Random, rounds: int = 3):
    decl = sig.decl(name)
    for param in rule.probe_params:
        op = sig.op(name, param) if decl.parametric else sig.op(name)
        for _ in range(rounds):
            args, names = _synthetic_args(kind, op.arity, rng)
            step = rule.conclude(op, tuple(args))
            _check_conclusion(sig, kind, step, names)


def _walk_context(ctx, on_guard, outer_names, path=()):
    if isinstance(ctx, CtxGuard):
        on_guard(ctx.step, path)
        return
    if isinstance(ctx, CtxApp):
        if ctx.op.name not in outer_names:
            raise ForeignSymbol(
                f"srps outer context uses {ctx.op!r}, not a given symbol")
        if len(ctx.args) != ctx.op.arity:
            raise ArityMismatch(f"{ctx.op!r} in context applied to "
                                f"{len(ctx.args)} arguments")
        for i, sub in enumerate(ctx.args):
            _walk_context(sub, on_guard, outer_names, path + (i,))
        return
    raise UnguardedPath(f"context path {path} ends in {ctx!r} with no guard")


def _probe_srps(kind, sig: Signature, name: str, entry: _SrpsEntry,
                rng: random.Random, rounds: int = 3):
    decl = sig.decl(name)
    for param in entry.probe_params:
        op = sig.op(name, param) if decl.parametric else sig.op(name)
        for _ in range(rounds):
            args, names = _synthetic_args(kind, op.arity, rng)
            ctx = entry.fn(op, tuple(args))
            _walk_context(
                ctx,
                lambda step, path: _check_conclusion(sig, kind, step, names),
                entry.outer_names,
            )


# ---------------------------------------------------------------------------
# Table construction and extension


def build_table(kind, sig: Signature, rules) -> RuleTable:
    """Validated table from one rule per declared symbol."""
    by_name = {}
    for r in rules:
        if r.op.name in by_name:
            raise DuplicateRule(f"two rules for {r.op.name!r}")
        if r.op.name not in sig.names:
            raise ForeignSymbol(f"rule for {r.op!r} outside the signature")
        by_name[r.op.name] = r
    missing = [n for n in sig.names if n not in by_name]
    if missing:
        raise MissingRule(f"no rule for symbols {missing}")
    table = RuleTable(kind, sig, by_name)
    rng = random.Random(0xC0)
    for name, r in by_name.items():
        _probe_rule(kind, sig, name, r, rng)
    return table


def _embed_step(step: Step, into: Signature) -> Step:
    return Step(step.label,
                tuple((p, embed_signature(t, into)) for p, t in step.children))


def _embed_rule(rule: GsosRule, old_sig: Signature, into: Signature,
                emb: Mapping[str, str], new_op: OpSym) -> GsosRule:
    # The inner rule must see its symbol as it knew it, so conclusions are
    # built over the old signature and then injected into the sum.
    inner = rule.conclude
    inv = {new: old for old, new in emb.items()}

    def conclude(op, args):
        inner_op = OpSym(inv[op.name], op.arity, old_sig.sig_id, op.param)
        return _embed_step(inner(inner_op, args), into)

    return GsosRule(new_op, conclude, rule.probe_params)


def _embed_context(ctx, into: Signature, emb: Mapping[str, str]):
    if isinstance(ctx, CtxGuard):
        return CtxGuard(_embed_step(ctx.step, into))
    if isinstance(ctx, CtxApp):
        op = OpSym(emb[ctx.op.name], ctx.op.arity, into.sig_id, ctx.op.param)
        return CtxApp(op, tuple(_embed_context(a, into, emb) for a in ctx.args))
    return ctx


def _embed_srps(entry: _SrpsEntry, old_sig: Signature, into: Signature,
                emb: Mapping[str, str]) -> _SrpsEntry:
    inner = entry.fn
    inv = {new: old for old, new in emb.items()}

    def fn(op, args):
        inner_op = OpSym(inv[op.name], op.arity, old_sig.sig_id, op.param)
        return _embed_context(inner(inner_op, args), into, emb)

    outer = frozenset(emb.get(n, n) for n in entry.outer_names)
    return _SrpsEntry(fn, outer, entry.probe_params)


def _carry_over(table: RuleTable, sum_sig: Signature, emb: Mapping[str, str]):
    rules = {}
    for name, r in table.rules.items():
        new_name = emb[name]
        rules[new_name] = _embed_rule(r, table.sig, sum_sig, emb,
                                      sum_sig.template(new_name))
    srps = {emb[name]: _embed_srps(entry, table.sig, sum_sig, emb)
            for name, entry in table.srps.items()}
    return rules, srps


def extend_with_rps(table: RuleTable, rps: RpsDef) -> RuleTable:
    """Adjoin recursively defined symbols; old interpretations carry over."""
    sum_sig = sig_sum(table.sig, rps.new_sig)
    emb_old = sum_sig.embedding_from(table.sig)
    emb_new = sum_sig.embedding_from(rps.new_sig)
    rules, srps = _carry_over(table, sum_sig, emb_old)
    rng = random.Random(0xC1)
    for name, rule in rps.rules.items():
        if name not in rps.new_sig.names:
            raise ForeignSymbol(f"rps rule for undeclared symbol {name!r}")
        new_name = emb_new[name]
        placed = GsosRule(sum_sig.template(new_name), rule.conclude,
                          rule.probe_params)
        _probe_rule(table.kind, sum_sig, new_name, placed, rng)
        rules[new_name] = placed
    missing = [n for n in rps.new_sig.names if emb_new[n] not in rules]
    if missing:
        raise MissingRule(f"rps lacks rules for {missing}")
    return RuleTable(table.kind, sum_sig, rules, srps)


def register_srps(table: RuleTable, srps_def: SrpsDef) -> RuleTable:
    """Adjoin sandwiched definitions; their behavior is produced at solve
    time by guard elaboration."""
    sum_sig = sig_sum(table.sig, srps_def.new_sig)
    emb_old = sum_sig.embedding_from(table.sig)
    emb_new = sum_sig.embedding_from(srps_def.new_sig)
    rules, srps = _carry_over(table, sum_sig, emb_old)
    outer = frozenset(emb_old[n] for n in table.sig.names)
    rng = random.Random(0xC2)
    for name, fn in srps_def.contexts.items():
        if name not in srps_def.new_sig.names:
            raise ForeignSymbol(f"srps context for undeclared symbol {name!r}")
        entry = _SrpsEntry(fn, outer,
                           tuple(srps_def.probe_params.get(name, (None,))))
        _probe_srps(table.kind, sum_sig, emb_new[name], entry, rng)
        srps[emb_new[name]] = entry
    missing = [n for n in srps_def.new_sig.names if emb_new[n] not in srps]
    if missing:
        raise MissingRule(f"srps lacks contexts for {missing}")
    return RuleTable(table.kind, sum_sig, rules, srps)


def add_rule(table: RuleTable, rule: GsosRule) -> RuleTable:
    """Incremental table building: one more symbol with an ordinary rule.

    The symbol is treated as a parametric family exactly when the rule
    carries non-default ``probe_params``.
    """
    name = rule.op.name
    if name in table.sig.names:
        raise DuplicateRule(f"symbol {name!r} already has a rule")
    parametric = rule.probe_params != (None,)
    one = signature((name, rule.op.arity, parametric))
    return extend_with_rps(table, RpsDef(one, {name: rule}))


def validate_table(table: RuleTable) -> TableReport:
    """Report-based check of totality, arity, ports, and srps guardedness."""
    violations = []
    rng = random.Random(0xC3)
    for name in table.sig.names:
        if name not in table.rules and name not in table.srps:
            violations.append(f"missing rule for {name!r}")
    for name, r in table.rules.items():
        if name not in table.sig.names:
            violations.append(f"rule for foreign symbol {name!r}")
            continue
        try:
            _probe_rule(table.kind, table.sig, name, r, rng)
        except Exception as exc:  # noqa: BLE001 - collected into the report
            violations.append(f"rule {name!r}: {exc}")
    for name, entry in table.srps.items():
        try:
            _probe_srps(table.kind, table.sig, name, entry, rng)
        except Exception as exc:  # noqa: BLE001
            violations.append(f"srps {name!r}: {exc}")
    return TableReport(tuple(violations))


# ---------------------------------------------------------------------------
# Label expressions (compiled by the frontends for deterministic kinds)


@dataclass(frozen=True)
class LConst:
    value: object


@dataclass(frozen=True)
class LArg:
    index: int


@dataclass(frozen=True)
class LAdd:
    a: object
    b: object


@dataclass(frozen=True)
class LMul:
    a: object
    b: object


@dataclass(frozen=True)
class LAnd:
    a: object
    b: object


@dataclass(frozen=True)
class LOr:
    a: object
    b: object


@dataclass(frozen=True)
class LNot:
    a: object


def eval_label_expr(expr, labels):
    if isinstance(expr, LConst):
        return expr.value
    if isinstance(expr, LArg):
        return labels[expr.index]
    if isinstance(expr, LAdd):
        return eval_label_expr(expr.a, labels) + eval_label_expr(expr.b, labels)
    if isinstance(expr, LMul):
        return eval_label_expr(expr.a, labels) * eval_label_expr(expr.b, labels)
    if isinstance(expr, LAnd):
        return eval_label_expr(expr.a, labels) and eval_label_expr(expr.b, labels)
    if isinstance(expr, LOr):
        return eval_label_expr(expr.a, labels) or eval_label_expr(expr.b, labels)
    if isinstance(expr, LNot):
        return not eval_label_expr(expr.a, labels)
    raise TypeError(f"not a label expression: {expr!r}")

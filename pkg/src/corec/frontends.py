"""Parsers, printers, and compilers for the input file formats.

Equation systems, behavioral differential equations, CCS agent files, and
grammars are line-oriented text with `#` comments; circuits are JSON.
Rational literals accept `p/q`, decimal, and integer forms and are read
exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .behavior import (
    LanguageKind,
    Step,
    process_actions,
    process_step,
    stream_step,
)
from .errors import (
    DanglingPort,
    InvalidCircuit,
    NotGnf,
    ParseError,
    Unguarded,
    UnknownSymbol,
)
from .rules import (
    CtxApp,
    CtxGuard,
    GsosRule,
    LAdd,
    LArg,
    LConst,
    LMul,
    RpsDef,
    RuleTable,
    eval_label_expr,
    extend_with_rps,
)
from .solver import FlatRhs, GuardedRhs, System
from .terms import App, Term, Var, is_reserved_name, mk_app, sig_sum, signature
from . import instances


def format_rat(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# Lexer


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<num>-?\d+(?:/\d+|\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<sym>[().,;:=+*|\\{}\[\]])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str):
    toks = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            toks.append(Tok("nl", value, line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(Tok(kind, value, line, col))
            col += len(value)
        pos = m.end()
    toks.append(Tok("eof", "", line, col))
    return toks


class TokenStream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self) -> Tok:
        return self.toks[self.i]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def skip_newlines(self):
        while self.peek().kind == "nl":
            self.next()

    def expect(self, kind, value=None) -> Tok:
        t = self.next()
        if t.kind != kind or (value is not None and t.value != value):
            want = value or kind
            raise ParseError(t.line, t.col, f"expected {want!r}, got {t.value!r}")
        return t

    def at_sym(self, value) -> bool:
        t = self.peek()
        return t.kind in ("sym", "arrow") and t.value == value

    def eat_sym(self, value) -> bool:
        if self.at_sym(value):
            self.next()
            return True
        return False

    def end_line(self):
        t = self.peek()
        if t.kind not in ("nl", "eof"):
            raise ParseError(t.line, t.col, f"junk at end of line: {t.value!r}")
        self.skip_newlines()


def _num_value(tok: Tok) -> Fraction:
    return Fraction(tok.value)


# ---------------------------------------------------------------------------
# Expressions for the deterministic kinds
#
# Parse nodes: ("num", r, tok)  ("var", name, tok)  ("call", name, args, tok)
# ("guard", ("num", r) | ("letter", a), payload-list, tok)


_PARAM_TYPE = {
    "stream": {"const": "rat", "mult": "rat", "register": "rat"},
    "tree": {"const": "rat"},
    "language": {"char": "letter", "prefix": "letter", "cons": "bit"},
}


def _parse_expr(ts: TokenStream):
    t = ts.peek()
    if t.kind == "num":
        ts.next()
        value = _num_value(t)
        if ts.eat_sym("."):
            return ("guard", ("num", value), _parse_payload(ts), t)
        return ("num", value, t)
    if t.kind == "ident":
        ts.next()
        if ts.eat_sym("("):
            args = []
            if not ts.at_sym(")"):
                args.append(_parse_expr(ts))
                while ts.eat_sym(","):
                    args.append(_parse_expr(ts))
            ts.expect("sym", ")")
            return ("call", t.value, args, t)
        if ts.eat_sym("."):
            return ("guard", ("letter", t.value), _parse_payload(ts), t)
        return ("var", t.value, t)
    raise ParseError(t.line, t.col, f"expected a term, got {t.value!r}")


def _parse_payload(ts: TokenStream):
    if ts.eat_sym("("):
        out = [_parse_expr(ts)]
        while ts.eat_sym(","):
            out.append(_parse_expr(ts))
        ts.expect("sym", ")")
        return out
    return [_parse_expr(ts)]


class _DetCompiler:
    """Turns parse nodes into terms and guarded contexts over a table."""

    def __init__(self, table: RuleTable, variables):
        self.table = table
        self.kind = table.kind
        self.vars = set(variables)
        self.param_type = _PARAM_TYPE[self.kind.name]

    def _op(self, name, args, tok):
        try:
            decl = self.table.sig.decl(name)
        except UnknownSymbol:
            raise ParseError(tok.line, tok.col,
                             f"unknown operation {name!r}") from None
        if not decl.parametric:
            return self.table.sig.op(name), args
        if not args:
            raise ParseError(tok.line, tok.col,
                             f"{name!r} needs a leading parameter")
        head, rest = args[0], args[1:]
        ptype = self.param_type.get(name)
        if ptype == "rat" and head[0] == "num":
            param = head[1]
        elif ptype == "letter" and head[0] == "var":
            param = head[1]
        elif ptype == "bit" and head[0] == "num" and head[1] in (0, 1):
            param = bool(head[1])
        else:
            raise ParseError(tok.line, tok.col,
                             f"bad parameter for {name!r}")
        return self.table.sig.op(name, param), rest

    def term(self, node) -> Term:
        tag = node[0]
        if tag == "num":
            if self.kind.name == "language":
                raise ParseError(node[2].line, node[2].col,
                                 "no numeric constants in language terms")
            return mk_app(self.table.sig.op("const", node[1]), ())
        if tag == "var":
            name = node[1]
            if name in self.vars:
                return Var(name)
            if name in self.table.sig.names:
                op, _ = self._op(name, [], node[2])
                return mk_app(op, ())
            raise ParseError(node[2].line, node[2].col,
                             f"unknown name {name!r}")
        if tag == "call":
            _, name, args, tok = node
            if name in self.vars:
                raise ParseError(tok.line, tok.col,
                                 f"variable {name!r} applied to arguments")
            op, rest = self._op(name, args, tok)
            if len(rest) != op.arity:
                raise ParseError(tok.line, tok.col,
                                 f"{name!r} expects {op.arity} arguments")
            return mk_app(op, tuple(self.term(a) for a in rest))
        # guard in term position: register for streams, prefixing for languages
        _, label, payload, tok = node
        if len(payload) == 1 and self.kind.name == "stream" \
                and label[0] == "num":
            return mk_app(self.table.sig.op("register", label[1]),
                          (self.term(payload[0]),))
        if len(payload) == 1 and self.kind.name == "language" \
                and label[0] == "letter":
            return mk_app(self.table.sig.op("prefix", label[1]),
                          (self.term(payload[0]),))
        raise ParseError(tok.line, tok.col,
                         f"no term-level guard like this for {self.kind.name}")

    def guard_step(self, node) -> Step:
        _, label, payload, tok = node
        kind = self.kind
        if kind.name == "stream":
            if label[0] != "num" or len(payload) != 1:
                raise ParseError(tok.line, tok.col,
                                 "stream guard is `rational . term`")
            return stream_step(label[1], self.term(payload[0]))
        if kind.name == "tree":
            if label[0] != "num" or len(payload) != 2:
                raise ParseError(tok.line, tok.col,
                                 "tree guard is `rational . (left, right)`")
            return Step(label[1], (("L", self.term(payload[0])),
                                   ("R", self.term(payload[1]))))
        letters = kind.alphabet
        if label[0] == "letter":
            if label[1] not in letters:
                raise ParseError(tok.line, tok.col,
                                 f"{label[1]!r} is not an alphabet letter")
            if len(payload) != 1:
                raise ParseError(tok.line, tok.col,
                                 "letter guard takes one continuation")
            empty = mk_app(self.table.sig.op("empty"), ())
            kids = {a: empty for a in letters}
            kids[label[1]] = self.term(payload[0])
            return Step(False, tuple((a, kids[a]) for a in letters))
        if label[1] not in (0, 1) or len(payload) != len(letters):
            raise ParseError(
                tok.line, tok.col,
                f"language guard is `0/1 . ({len(letters)} terms)`")
        return Step(bool(label[1]),
                    tuple((a, self.term(p))
                          for a, p in zip(letters, payload)))

    def context(self, node, path=()):
        tag = node[0]
        if tag == "guard":
            return CtxGuard(self.guard_step(node))
        if tag == "var":
            if node[1] in self.vars:
                raise Unguarded(node[1], path)
            return CtxApp(self.term(node).op, ())
        if tag == "call":
            _, name, args, tok = node
            if name in self.vars:
                raise ParseError(tok.line, tok.col,
                                 f"variable {name!r} applied to arguments")
            op, rest = self._op(name, args, tok)
            if len(rest) != op.arity:
                raise ParseError(tok.line, tok.col,
                                 f"{name!r} expects {op.arity} arguments")
            return CtxApp(op, tuple(self.context(a, path + (i,))
                                    for i, a in enumerate(rest)))
        # a bare constant is a closed given term, vacuously guarded
        return CtxApp(self.term(node).op, ())

    def rhs(self, node):
        if node[0] == "guard":
            return FlatRhs(self.guard_step(node))
        if node[0] == "var" and node[1] in self.vars:
            raise Unguarded(node[1], ())
        return GuardedRhs(self.context(node))


# ---------------------------------------------------------------------------
# Equation-system files for the deterministic kinds


def _table_for(kind_name: str, alphabet: Optional[str]) -> RuleTable:
    if kind_name == "stream":
        return instances.stream_table()
    if kind_name == "tree":
        return instances.tree_table()
    if kind_name == "language":
        if not alphabet:
            raise ParseError(1, 1, "language systems need an alphabet")
        return instances.language_table(alphabet)
    raise ParseError(1, 1, f"unknown kind {kind_name!r}")


def _parse_kind_header(ts: TokenStream):
    ts.skip_newlines()
    t = ts.peek()
    if t.kind == "ident" and t.value == "kind":
        ts.next()
        kind_tok = ts.expect("ident")
        alphabet = None
        if kind_tok.value == "language":
            alphabet = ts.expect("ident").value
        ts.end_line()
        return kind_tok.value, alphabet
    return None, None


def parse_system(text: str, kind=None) -> System:
    """Parse a flat or sandwiched equation system over a built-in table.

    The file may declare its kind (`kind stream`, `kind tree`,
    `kind language ab`); otherwise ``kind`` must name one ("stream",
    "tree", "language:<letters>", or a kind object).
    """
    ts = TokenStream(tokenize(text))
    kind_name, alphabet = _parse_kind_header(ts)
    if kind_name is None:
        if kind is None:
            raise ParseError(1, 1, "no kind header and no kind argument")
        if isinstance(kind, str):
            kind_name, _, alphabet = kind.partition(":")
        elif isinstance(kind, LanguageKind):
            kind_name, alphabet = "language", "".join(kind.alphabet)
        else:
            kind_name = getattr(kind, "name", str(kind))
    if kind_name == "process":
        return parse_ccs(text)
    table = _table_for(kind_name, alphabet)

    entries = []
    ts.skip_newlines()
    while ts.peek().kind != "eof":
        name_tok = ts.expect("ident")
        ts.expect("sym", "=")
        node = _parse_expr(ts)
        ts.end_line()
        entries.append((name_tok, node))
    if not entries:
        raise ParseError(1, 1, "empty system")

    variables = []
    for tok, _ in entries:
        if tok.value in table.sig.names or is_reserved_name(tok.value):
            raise ParseError(tok.line, tok.col,
                             f"variable {tok.value!r} shadows an operation")
        if tok.value in variables:
            raise ParseError(tok.line, tok.col,
                             f"variable {tok.value!r} defined twice")
        variables.append(tok.value)

    comp = _DetCompiler(table, variables)
    rhs = {tok.value: comp.rhs(node) for tok, node in entries}
    return System(table.kind, table, tuple(variables), rhs)


def format_term(table: RuleTable, t: Term) -> str:
    kind = table.kind
    if isinstance(t, Var):
        return t.name
    if not isinstance(t, App):
        raise ValueError(f"term {t!r} has no textual form")
    name, param = t.op.name, t.op.param
    if name == "const":
        return format_rat(param)
    if name == "register" and kind.name == "stream":
        return f"{format_rat(param)} . {format_term(table, t.args[0])}"
    if name == "prefix" and kind.name == "language":
        return f"{param} . {format_term(table, t.args[0])}"
    parts = []
    if param is not None:
        ptype = _PARAM_TYPE.get(kind.name, {}).get(name)
        if ptype == "rat":
            parts.append(format_rat(param))
        elif ptype == "bit":
            parts.append("1" if param else "0")
        else:
            parts.append(str(param))
    parts.extend(format_term(table, a) for a in t.args)
    return f"{name}({', '.join(parts)})"


def _format_step(table: RuleTable, step: Step) -> str:
    kind = table.kind
    if kind.name == "stream":
        return (f"{format_rat(step.label)} . "
                f"{format_term(table, step.children[0][1])}")
    inner = ", ".join(format_term(table, c) for _, c in step.children)
    if kind.name == "tree":
        return f"{format_rat(step.label)} . ({inner})"
    return f"{1 if step.label else 0} . ({inner})"


def _format_ctx(table: RuleTable, ctx) -> str:
    if isinstance(ctx, CtxGuard):
        return _format_step(table, ctx.step)
    if not ctx.args:
        return format_term(table, mk_app(ctx.op, ()))
    args = ", ".join(_format_ctx(table, a) for a in ctx.args)
    return f"{ctx.op.name}({args})"


def format_system(system: System) -> str:
    """Textual form of a system over a built-in table; parses back equal."""
    kind = system.kind
    if kind.name == "process":
        return format_ccs_system(system)
    header = f"kind {kind.name}"
    if kind.name == "language":
        header += " " + "".join(kind.alphabet)
    lines = [header]
    for v in system.vars:
        rhs = system.rhs[v]
        if isinstance(rhs, FlatRhs):
            lines.append(f"{v} = {_format_step(system.table, rhs.step)}")
        elif isinstance(rhs, GuardedRhs):
            lines.append(f"{v} = {_format_ctx(system.table, rhs.ctx)}")
        else:
            raise ValueError(f"rhs of {v!r} has no textual form")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Behavioral differential equations


@dataclass(frozen=True)
class BdeProgram:
    """Parsed operation definitions plus the table of given operations."""

    kind: object
    given: RuleTable
    rps: RpsDef
    names: tuple

    def extended_table(self) -> RuleTable:
        return extend_with_rps(self.given, self.rps)


_PORT_CLAUSES = {"stream": (("tail", "tail"),),
                 "tree": (("left", "L"), ("right", "R"))}
_HEAD_CLAUSE = {"stream": "head", "tree": "root"}


def _scan_bde_headers(toks):
    """First pass: definition names and arities, for mutual recursion."""
    ts = TokenStream(list(toks))
    ts.skip_newlines()
    _parse_kind_header(ts)
    headers = []
    while ts.peek().kind != "eof":
        t = ts.peek()
        if t.kind == "ident" and t.value in ("given",):
            while ts.peek().kind not in ("nl", "eof"):
                ts.next()
            ts.skip_newlines()
            continue
        if t.kind != "ident":
            raise ParseError(t.line, t.col, "expected a definition")
        name = ts.next().value
        ts.expect("sym", "(")
        arity = 0
        if not ts.at_sym(")"):
            ts.expect("ident")
            arity = 1
            while ts.eat_sym(","):
                ts.expect("ident")
                arity += 1
        ts.expect("sym", ")")
        headers.append((name, arity))
        while ts.peek().kind not in ("nl", "eof"):
            ts.next()
        ts.skip_newlines()
    return headers


def _parse_head_expr(ts: TokenStream, head_kw, params):
    def atom():
        t = ts.peek()
        if t.kind == "num":
            ts.next()
            return LConst(_num_value(t))
        if ts.eat_sym("("):
            e = add()
            ts.expect("sym", ")")
            return e
        if t.kind == "ident" and t.value == head_kw:
            ts.next()
            ts.expect("sym", "(")
            var = ts.expect("ident")
            ts.expect("sym", ")")
            if var.value not in params:
                raise ParseError(var.line, var.col,
                                 f"unknown argument {var.value!r}")
            return LArg(params.index(var.value))
        raise ParseError(t.line, t.col,
                         f"bad initial-value expression at {t.value!r}")

    def mul():
        e = atom()
        while ts.eat_sym("*"):
            e = LMul(e, atom())
        return e

    def add():
        e = mul()
        while ts.eat_sym("+"):
            e = LAdd(e, mul())
        return e

    return add()


def _parse_bde_term(ts: TokenStream, kind_name, params, sum_sig):
    """Term AST: ("self", i) ("port", i, p) ("head", i) ("lit", r)
    ("app", opname, param-or-None, args) where a "rat" param may itself be
    ("lit", r) or ("head", i)."""
    head_kw = _HEAD_CLAUSE[kind_name]
    ports = dict(_PORT_CLAUSES[kind_name])

    def term():
        t = ts.peek()
        if t.kind == "num":
            ts.next()
            value = _num_value(t)
            if ts.eat_sym("."):
                if kind_name != "stream":
                    raise ParseError(t.line, t.col,
                                     "prefix terms are stream-only")
                return ("app", "register", ("lit", value), [term()])
            return ("lit", value)
        if t.kind != "ident":
            raise ParseError(t.line, t.col, f"expected a term, got {t.value!r}")
        ts.next()
        name = t.value
        if name == head_kw or name in ports:
            ts.expect("sym", "(")
            var = ts.expect("ident")
            ts.expect("sym", ")")
            if var.value not in params:
                raise ParseError(var.line, var.col,
                                 f"unknown argument {var.value!r}")
            i = params.index(var.value)
            return ("head", i) if name == head_kw else ("port", i, ports[name])
        if ts.eat_sym("("):
            args = []
            if not ts.at_sym(")"):
                args.append(term())
                while ts.eat_sym(","):
                    args.append(term())
            ts.expect("sym", ")")
            try:
                decl = sum_sig.decl(name)
            except UnknownSymbol:
                raise ParseError(t.line, t.col,
                                 f"unknown operation {name!r}") from None
            if decl.parametric:
                if not args or args[0][0] not in ("lit", "head"):
                    raise ParseError(t.line, t.col,
                                     f"{name!r} needs a rational parameter")
                return ("app", name, args[0], args[1:])
            return ("app", name, None, args)
        if name in params:
            return ("self", params.index(name))
        raise ParseError(t.line, t.col, f"unknown name {name!r}")

    return term()


def _bde_build(sum_sig, ast, args):
    tag = ast[0]
    if tag == "self":
        return args[ast[1]].self_term
    if tag == "port":
        return args[ast[1]].at(ast[2])
    if tag == "head":
        return mk_app(sum_sig.op("const", args[ast[1]].head), ())
    if tag == "lit":
        return mk_app(sum_sig.op("const", ast[1]), ())
    _, name, param_ast, sub = ast
    if param_ast is not None:
        param = param_ast[1] if param_ast[0] == "lit" \
            else args[param_ast[1]].head
        op = sum_sig.op(name, param)
    else:
        op = sum_sig.op(name)
    return mk_app(op, tuple(_bde_build(sum_sig, a, args) for a in sub))


def parse_bde(text: str) -> BdeProgram:
    """Behavioral differential equations over the staged given table.

    Stream definitions have the shape
    ``f(x, y): head = <expr>; tail = <term>``; tree definitions provide
    ``root``, ``left``, and ``right`` clauses.  ``head(x)``/``root(x)``
    inside a term denotes the argument's current output as a constant.
    """
    toks = tokenize(text)
    ts = TokenStream(toks)
    kind_name, _ = _parse_kind_header(ts)
    if kind_name is None:
        kind_name = "stream"
    if kind_name not in ("stream", "tree"):
        raise ParseError(1, 1, "bde files are `kind stream` or `kind tree`")
    given = instances.stream_table() if kind_name == "stream" \
        else instances.tree_table()
    kind = given.kind

    headers = _scan_bde_headers(toks)
    names = [n for n, _ in headers]
    for n in names:
        if names.count(n) > 1:
            raise ParseError(1, 1, f"operation {n!r} defined twice")
        if n in given.sig.names:
            raise ParseError(1, 1, f"operation {n!r} shadows a given")
    new_sig = signature(*headers)
    sum_sig = sig_sum(given.sig, new_sig)

    ts.skip_newlines()
    if ts.peek().kind == "ident" and ts.peek().value == "given":
        ts.next()
        while ts.peek().kind == "ident":
            g = ts.next()
            if g.value not in given.sig.names:
                raise ParseError(g.line, g.col,
                                 f"no given operation {g.value!r}")
        ts.end_line()

    head_kw = _HEAD_CLAUSE[kind_name]
    rules = {}
    while ts.peek().kind != "eof":
        name_tok = ts.expect("ident")
        ts.expect("sym", "(")
        params = []
        if not ts.at_sym(")"):
            params.append(ts.expect("ident").value)
            while ts.eat_sym(","):
                params.append(ts.expect("ident").value)
        ts.expect("sym", ")")
        ts.expect("sym", ":")
        kw = ts.expect("ident")
        if kw.value != head_kw:
            raise ParseError(kw.line, kw.col,
                             f"definition must start with `{head_kw} =`")
        ts.expect("sym", "=")
        head_expr = _parse_head_expr(ts, head_kw, params)
        derivs = []
        for clause, _port in _PORT_CLAUSES[kind_name]:
            if not ts.eat_sym(";"):
                t = ts.peek()
                raise ParseError(t.line, t.col, f"missing `{clause} =` clause")
            kw = ts.expect("ident")
            if kw.value != clause:
                raise ParseError(kw.line, kw.col,
                                 f"expected clause {clause!r}")
            ts.expect("sym", "=")
            derivs.append(_parse_bde_term(ts, kind_name, params, sum_sig))
        ts.end_line()

        def make_rule(head_expr=head_expr, derivs=tuple(derivs)):
            def conclude(op, args):
                labels = [a.head for a in args]
                label = eval_label_expr(head_expr, labels)
                terms = [_bde_build(sum_sig, d, args) for d in derivs]
                if kind_name == "stream":
                    return stream_step(label, terms[0])
                return Step(label, (("L", terms[0]), ("R", terms[1])))

            return conclude

        rules[name_tok.value] = GsosRule(sum_sig.template(name_tok.value),
                                         make_rule())

    if set(rules) != set(names):
        raise ParseError(1, 1, "definition headers and bodies disagree")
    return BdeProgram(kind, given, RpsDef(new_sig, rules), tuple(names))


# ---------------------------------------------------------------------------
# CCS agent files
#
# AST as in `instances.ccs_term`: ("pref", a, t) ("sum", (t...)) ("par", l, r)
# ("seq", l, r) ("alt", l, r) ("relabel", pairs, t) ("restrict", names, t)
# ("ref", name)


_CCS_RESERVED = {"alt", "seq", "tau", "kind"}


def _parse_ccs_expr(ts: TokenStream, variables):
    def atom():
        t = ts.peek()
        if t.kind == "num" and t.value == "0":
            ts.next()
            return ("sum", ())
        if ts.eat_sym("("):
            e = expr()
            ts.expect("sym", ")")
            return e
        if t.kind != "ident":
            raise ParseError(t.line, t.col, f"expected an agent, got {t.value!r}")
        ts.next()
        name = t.value
        if name in ("alt", "seq") and ts.at_sym("("):
            ts.next()
            a = expr()
            ts.expect("sym", ",")
            b = expr()
            ts.expect("sym", ")")
            return (name, a, b)
        if ts.at_sym("."):
            if name in variables:
                raise ParseError(t.line, t.col,
                                 f"{name!r} is an agent, not an action")
            ts.next()
            return ("pref", name, prefix())
        if name in variables:
            return ("ref", name)
        raise ParseError(t.line, t.col, f"unknown agent {name!r}")

    def postfix():
        e = atom()
        while True:
            if ts.eat_sym("["):
                pairs = []
                a = ts.expect("ident").value
                ts.expect("arrow", "->")
                pairs.append((a, ts.expect("ident").value))
                while ts.eat_sym(","):
                    a = ts.expect("ident").value
                    ts.expect("arrow", "->")
                    pairs.append((a, ts.expect("ident").value))
                ts.expect("sym", "]")
                e = ("relabel", tuple(pairs), e)
            elif ts.eat_sym("\\"):
                ts.expect("sym", "{")
                names = []
                if not ts.at_sym("}"):
                    names.append(ts.expect("ident").value)
                    while ts.eat_sym(","):
                        names.append(ts.expect("ident").value)
                ts.expect("sym", "}")
                e = ("restrict", tuple(sorted(names)), e)
            else:
                return e

    def prefix():
        t = ts.peek()
        if t.kind == "ident" and t.value not in variables \
                and t.value not in ("alt", "seq"):
            nxt = ts.toks[ts.i + 1]
            if nxt.kind == "sym" and nxt.value == ".":
                ts.next()
                ts.next()
                return ("pref", t.value, prefix())
        return postfix()

    def seq_level():
        e = prefix()
        while ts.eat_sym(";"):
            e = ("seq", e, prefix())
        return e

    def par_level():
        e = seq_level()
        while ts.eat_sym("|"):
            e = ("par", e, seq_level())
        return e

    def expr():
        e = par_level()
        if ts.at_sym("+"):
            parts = [e]
            while ts.eat_sym("+"):
                parts.append(par_level())
            return ("sum", tuple(parts))
        return e

    return expr()


def _ccs_actions_of(ast, out):
    tag = ast[0]
    if tag == "pref":
        out.add(ast[1])
        _ccs_actions_of(ast[2], out)
    elif tag == "sum":
        for sub in ast[1]:
            _ccs_actions_of(sub, out)
    elif tag in ("par", "seq", "alt"):
        _ccs_actions_of(ast[1], out)
        _ccs_actions_of(ast[2], out)
    elif tag == "relabel":
        for a, b in ast[1]:
            out.update((a, b))
        _ccs_actions_of(ast[2], out)
    elif tag == "restrict":
        out.update(ast[1])
        _ccs_actions_of(ast[2], out)


def _ccs_flat_moves(table, ast):
    """Moves when the agent is a sum of prefixed agents, else None."""
    tag = ast[0]
    if tag == "pref":
        return [(ast[1], instances.ccs_term(table, ast[2]))]
    if tag == "sum":
        moves = []
        for sub in ast[1]:
            inner = _ccs_flat_moves(table, sub)
            if inner is None:
                return None
            moves.extend(inner)
        return moves
    return None


def _ccs_context(table, ast, path=()):
    tag = ast[0]
    if tag == "pref":
        return CtxGuard(process_step(
            ((ast[1], instances.ccs_term(table, ast[2])),)))
    if tag == "ref":
        raise Unguarded(ast[1], path)
    if tag == "sum":
        op = table.op("sum", len(ast[1]))
        return CtxApp(op, tuple(_ccs_context(table, s, path + (i,))
                                for i, s in enumerate(ast[1])))
    if tag in ("par", "seq", "alt"):
        return CtxApp(table.op(tag), (
            _ccs_context(table, ast[1], path + (0,)),
            _ccs_context(table, ast[2], path + (1,))))
    if tag == "relabel":
        op = table.op("relabel",
                      instances.relabel_param(table.kind, dict(ast[1])))
        return CtxApp(op, (_ccs_context(table, ast[2], path + (0,)),))
    if tag == "restrict":
        op = table.op("restrict",
                      instances.restrict_param(table.kind, ast[1]))
        return CtxApp(op, (_ccs_context(table, ast[2], path + (0,)),))
    raise ParseError(1, 1, f"cannot place {ast!r} in a guarded context")


def parse_ccs(text: str) -> System:
    """Parse mutually recursive agent definitions into a process system.

    Right-hand sides admit the prefix combinator anywhere inside terms;
    every agent variable must occur weakly guarded.  Agent constants
    require an explicit `.0` (`c.0`, not `c`).
    """
    ts = TokenStream(tokenize(text))
    ts.skip_newlines()
    entries = []
    while ts.peek().kind != "eof":
        name_tok = ts.expect("ident")
        if name_tok.value in _CCS_RESERVED or is_reserved_name(name_tok.value):
            raise ParseError(name_tok.line, name_tok.col,
                             f"{name_tok.value!r} cannot name an agent")
        ts.expect("sym", "=")
        entries.append((name_tok, ts.i))
        depth = 0
        while ts.peek().kind not in ("nl", "eof") or depth:
            tok = ts.next()
            if tok.kind == "eof":
                break
            if tok.kind == "sym" and tok.value == "(":
                depth += 1
            elif tok.kind == "sym" and tok.value == ")":
                depth -= 1
        ts.skip_newlines()
    if not entries:
        raise ParseError(1, 1, "empty agent file")
    variables = []
    for tok, _ in entries:
        if tok.value in variables:
            raise ParseError(tok.line, tok.col,
                             f"agent {tok.value!r} defined twice")
        variables.append(tok.value)

    asts = {}
    for tok, pos in entries:
        sub = TokenStream(ts.toks)
        sub.i = pos
        asts[tok.value] = _parse_ccs_expr(sub, set(variables))
        t = sub.peek()
        if t.kind not in ("nl", "eof"):
            raise ParseError(t.line, t.col, f"junk after agent: {t.value!r}")

    actions = set()
    for ast in asts.values():
        _ccs_actions_of(ast, actions)
    bases = sorted({a.rstrip("'") for a in actions} - {"tau"})
    kind = process_actions(*bases)
    table = instances.ccs_table(kind)

    rhs = {}
    for v in variables:
        moves = _ccs_flat_moves(table, asts[v])
        if moves is not None:
            rhs[v] = FlatRhs(process_step(tuple(moves)))
        else:
            rhs[v] = GuardedRhs(_ccs_context(table, asts[v]))
    return System(kind, table, tuple(variables), rhs)


def _format_ccs_term(kind, t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    name, param = t.op.name, t.op.param
    if name == "pref":
        sub = _format_ccs_term(kind, t.args[0])
        inner = t.args[0]
        atomic = isinstance(inner, Var) or (
            isinstance(inner, App) and inner.op.name in ("pref",)
        ) or (isinstance(inner, App) and inner.op.name == "sum"
              and not inner.args)
        return f"{param}.{sub}" if atomic else f"{param}.({sub})"
    if name == "sum":
        if not t.args:
            return "0"
        if len(t.args) == 1:
            raise ValueError("one-armed sums have no textual form")
        return "(" + " + ".join(_format_ccs_term(kind, a)
                                for a in t.args) + ")"
    if name == "par":
        return (f"({_format_ccs_term(kind, t.args[0])} | "
                f"{_format_ccs_term(kind, t.args[1])})")
    if name in ("seq", "alt"):
        return (f"{name}({_format_ccs_term(kind, t.args[0])}, "
                f"{_format_ccs_term(kind, t.args[1])})")
    if name == "relabel":
        pairs = [f"{a}->{b}" for a, b in param
                 if a != b and not a.endswith("'") and a != kind.tau]
        return f"({_format_ccs_term(kind, t.args[0])})[{', '.join(pairs)}]"
    if name == "restrict":
        return (f"({_format_ccs_term(kind, t.args[0])})"
                "\\{" + ", ".join(param) + "}")
    raise ValueError(f"no textual form for {t!r}")


def _format_ccs_ctx(kind, ctx) -> str:
    if isinstance(ctx, CtxGuard):
        moves = ctx.step.children
        if not moves:
            return "0"
        parts = []
        for port, term in moves:
            action = port[0] if isinstance(port, tuple) else port
            sub = _format_ccs_term(kind, term)
            atomic = isinstance(term, Var) or (
                isinstance(term, App) and term.op.name == "sum"
                and not term.args)
            parts.append(f"{action}.{sub}" if atomic else f"{action}.({sub})")
        return "(" + " + ".join(parts) + ")" if len(parts) > 1 else parts[0]
    name, param = ctx.op.name, ctx.op.param
    if name == "sum":
        if not ctx.args:
            return "0"
        if len(ctx.args) == 1:
            raise ValueError("one-armed sums have no textual form")
        return "(" + " + ".join(_format_ccs_ctx(kind, a)
                                for a in ctx.args) + ")"
    if name == "par":
        return (f"({_format_ccs_ctx(kind, ctx.args[0])} | "
                f"{_format_ccs_ctx(kind, ctx.args[1])})")
    if name in ("seq", "alt"):
        return (f"{name}({_format_ccs_ctx(kind, ctx.args[0])}, "
                f"{_format_ccs_ctx(kind, ctx.args[1])})")
    if name == "relabel":
        pairs = [f"{a}->{b}" for a, b in param
                 if a != b and not a.endswith("'") and a != kind.tau]
        return f"({_format_ccs_ctx(kind, ctx.args[0])})[{', '.join(pairs)}]"
    if name == "restrict":
        return (f"({_format_ccs_ctx(kind, ctx.args[0])})"
                "\\{" + ", ".join(param) + "}")
    raise ValueError(f"no textual form for {ctx!r}")


def format_ccs_system(system: System) -> str:
    lines = []
    for v in system.vars:
        rhs = system.rhs[v]
        if isinstance(rhs, FlatRhs):
            body = _format_ccs_ctx(system.kind, CtxGuard(rhs.step))
        elif isinstance(rhs, GuardedRhs):
            body = _format_ccs_ctx(system.kind, rhs.ctx)
        else:
            raise ValueError(f"rhs of {v!r} has no textual form")
        lines.append(f"{v} = {body}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Grammars in Greibach normal form


@dataclass(frozen=True)
class GnfFile:
    terminals: tuple
    nonterminals: tuple
    start: str
    productions: tuple  # ((lhs, (symbol, ...)), ...)


def _check_gnf_shape(g: GnfFile):
    terms, nonterms = set(g.terminals), set(g.nonterminals)
    for lhs, rhs in g.productions:
        shown = f"{lhs} -> {' '.join(rhs) if rhs else 'ε'}"
        if lhs not in nonterms:
            raise NotGnf(shown)
        if not rhs or rhs[0] not in terms:
            raise NotGnf(shown)
        if any(s not in nonterms for s in rhs[1:]):
            raise NotGnf(shown)


def parse_gnf(text: str) -> GnfFile:
    """Parse a grammar file; productions must be in Greibach normal form."""
    ts = TokenStream(tokenize(text))
    header = {}
    ts.skip_newlines()
    for key in ("terminals", "nonterminals", "start"):
        kw = ts.expect("ident")
        if kw.value != key:
            raise ParseError(kw.line, kw.col, f"expected `{key}:` header")
        ts.expect("sym", ":")
        names = []
        while ts.peek().kind == "ident":
            names.append(ts.next().value)
        ts.end_line()
        header[key] = tuple(names)
    if len(header["start"]) != 1:
        raise ParseError(1, 1, "exactly one start symbol")
    for t in header["terminals"]:
        if len(t) != 1:
            raise ParseError(1, 1, f"terminals are single letters, got {t!r}")

    productions = []
    while ts.peek().kind != "eof":
        lhs = ts.expect("ident")
        ts.expect("arrow", "->")
        rhs = []
        while ts.peek().kind == "ident":
            rhs.append(ts.next().value)
        ts.end_line()
        productions.append((lhs.value, tuple(rhs)))

    g = GnfFile(header["terminals"], header["nonterminals"],
                header["start"][0], tuple(productions))
    if g.start not in g.nonterminals:
        raise ParseError(1, 1, f"start symbol {g.start!r} is not declared")
    _check_gnf_shape(g)
    return g


def format_gnf(g: GnfFile) -> str:
    lines = [
        "terminals: " + " ".join(g.terminals),
        "nonterminals: " + " ".join(g.nonterminals),
        "start: " + g.start,
    ]
    for lhs, rhs in g.productions:
        lines.append(f"{lhs} -> {' '.join(rhs)}")
    return "\n".join(lines) + "\n"


def compile_gnf(g: GnfFile) -> System:
    """One variable per nonterminal; the start variable solves to the
    generated language.  Each production `n -> a w` contributes the
    observation accepting nothing now and continuing after `a` with the
    concatenation of `w` (the empty product is the empty-word language)."""
    _check_gnf_shape(g)
    table = instances.language_table("".join(g.terminals))
    for n in g.nonterminals:
        if n in table.sig.names:
            raise NotGnf(f"nonterminal {n!r} shadows a language operation")
    letters = table.kind.alphabet
    empty = mk_app(table.op("empty"), ())

    def production_guard(terminal, body):
        if body:
            term = Var(body[0])
            for n in body[1:]:
                term = mk_app(table.op("concat"), (term, Var(n)))
        else:
            term = mk_app(table.op("eps"), ())
        kids = {a: empty for a in letters}
        kids[terminal] = term
        return CtxGuard(Step(False, tuple((a, kids[a]) for a in letters)))

    rhs = {}
    for n in g.nonterminals:
        prods = [(a_rhs[0], a_rhs[1:]) for lhs, a_rhs in g.productions
                 if lhs == n]
        if not prods:
            rhs[n] = GuardedRhs(CtxApp(table.op("empty"), ()))
            continue
        ctx = production_guard(*prods[0])
        for terminal, body in prods[1:]:
            ctx = CtxApp(table.op("union"),
                         (ctx, production_guard(terminal, body)))
        rhs[n] = GuardedRhs(ctx)
    return System(table.kind, table, tuple(g.nonterminals), rhs)


# ---------------------------------------------------------------------------
# Stream circuits (JSON)


_PORTS = {
    "input": (0, 1),
    "output": (1, 0),
    "adder": (2, 1),
    "copier": (1, 2),
    "mult": (1, 1),
    "register": (1, 1),
}


@dataclass(frozen=True)
class CircuitNode:
    id: str
    kind: str
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class CircuitFile:
    nodes: tuple
    edges: tuple


def load_circuit(text: str) -> CircuitFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.colno, f"bad JSON: {exc.msg}") from None
    nodes = []
    for item in raw.get("nodes", ()):
        kind = item.get("kind")
        if kind not in _PORTS:
            raise InvalidCircuit(f"unknown node kind {kind!r}")
        value = item.get("value")
        if kind in ("mult", "register"):
            if value is None:
                raise InvalidCircuit(f"{kind} node {item.get('id')!r} needs "
                                     "a value")
            value = Fraction(str(value))
        elif value is not None:
            raise InvalidCircuit(f"{kind} node {item.get('id')!r} takes no "
                                 "value")
        node_id = item.get("id")
        if not isinstance(node_id, str) or not re.fullmatch(
                r"[A-Za-z_][A-Za-z0-9_]*", node_id):
            raise InvalidCircuit(f"bad node id {node_id!r}")
        nodes.append(CircuitNode(node_id, kind, value))
    ids = [n.id for n in nodes]
    if len(set(ids)) != len(ids):
        raise InvalidCircuit("duplicate node ids")
    edges = []
    for src, dst in raw.get("edges", ()):
        if src not in ids or dst not in ids:
            raise DanglingPort(f"edge {src!r} -> {dst!r} misses a node")
        edges.append((src, dst))
    return CircuitFile(tuple(nodes), tuple(edges))


def format_circuit(cf: CircuitFile) -> str:
    nodes = []
    for n in cf.nodes:
        item = {"id": n.id, "kind": n.kind}
        if n.value is not None:
            item["value"] = format_rat(n.value)
        nodes.append(item)
    return json.dumps({"nodes": nodes, "edges": [list(e) for e in cf.edges]},
                      indent=2)


@dataclass(frozen=True)
class CompiledCircuit:
    """One operation per output (`f_<id>`) and per register (`g_<id>`),
    each taking the backward-reachable input streams in circuit order."""

    rps: RpsDef
    inputs: tuple
    outputs: tuple  # ((symbol, output node id, (input ids...)), ...)
    registers: tuple  # ((symbol, register id, (input ids...)), ...)

    def table(self) -> RuleTable:
        return extend_with_rps(instances.stream_table(), self.rps)


def compile_circuit(cf: CircuitFile) -> CompiledCircuit:
    by_id = {n.id: n for n in cf.nodes}
    incoming = {n.id: [] for n in cf.nodes}
    outgoing = {n.id: [] for n in cf.nodes}
    for src, dst in cf.edges:
        incoming[dst].append(src)
        outgoing[src].append(dst)
    for n in cf.nodes:
        want_in, want_out = _PORTS[n.kind]
        if len(incoming[n.id]) != want_in or len(outgoing[n.id]) != want_out:
            raise DanglingPort(
                f"{n.kind} node {n.id!r} has {len(incoming[n.id])} inputs "
                f"and {len(outgoing[n.id])} outputs, needs "
                f"{want_in}/{want_out}")

    # validity: every loop must pass through a register
    loop = _register_free_loop(cf, incoming)
    if loop is not None:
        raise InvalidCircuit(
            "register-free loop through " + " -> ".join(loop), loop=loop)

    inputs = tuple(n.id for n in cf.nodes if n.kind == "input")
    input_pos = {nid: i for i, nid in enumerate(inputs)}

    def reachable_inputs(start):
        seen, stack, found = set(), [start], set()
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            node = by_id[cur]
            if node.kind == "input":
                found.add(cur)
                continue
            stack.extend(incoming[cur])
        return tuple(sorted(found, key=input_pos.__getitem__))

    def back_term(src):
        node = by_id[src]
        if node.kind == "input":
            return ("in", src)
        if node.kind == "register":
            return ("reg", src)
        if node.kind == "copier":
            return back_term(incoming[src][0])
        if node.kind == "mult":
            return ("mult", node.value, back_term(incoming[src][0]))
        if node.kind == "adder":
            return ("plus", back_term(incoming[src][0]),
                    back_term(incoming[src][1]))
        raise InvalidCircuit(f"cannot traverse through {node.kind!r}")

    registers = tuple(n for n in cf.nodes if n.kind == "register")
    outputs = tuple(n for n in cf.nodes if n.kind == "output")
    reg_args = {r.id: reachable_inputs(r.id) for r in registers}
    reg_term = {r.id: back_term(incoming[r.id][0]) for r in registers}
    out_args = {o.id: reachable_inputs(o.id) for o in outputs}
    out_term = {o.id: back_term(incoming[o.id][0]) for o in outputs}

    base = instances.stream_table()
    decls = [(f"g_{r.id}", len(reg_args[r.id])) for r in registers]
    decls += [(f"f_{o.id}", len(out_args[o.id])) for o in outputs]
    new_sig = signature(*decls)
    sum_sig = sig_sum(base.sig, new_sig)

    def whole_input(arg_obs):
        # the input stream itself, rebuilt as head.tail
        return mk_app(sum_sig.op("register", arg_obs.head), (arg_obs.tail,))

    def register_call(reg_id, args, arg_of):
        sub = tuple(whole_input(args[arg_of[i]]) for i in reg_args[reg_id])
        return mk_app(sum_sig.op(f"g_{reg_id}"), sub)

    def build_tail(ast, args, arg_of, input_leaf):
        tag = ast[0]
        if tag == "in":
            return input_leaf(args[arg_of[ast[1]]])
        if tag == "reg":
            return register_call(ast[1], args, arg_of)
        if tag == "mult":
            return mk_app(sum_sig.op("mult", ast[1]),
                          (build_tail(ast[2], args, arg_of, input_leaf),))
        return mk_app(sum_sig.op("plus"),
                      (build_tail(ast[1], args, arg_of, input_leaf),
                       build_tail(ast[2], args, arg_of, input_leaf)))

    def eval_head(ast, args, arg_of):
        tag = ast[0]
        if tag == "in":
            return args[arg_of[ast[1]]].head
        if tag == "reg":
            return by_id[ast[1]].value
        if tag == "mult":
            return ast[1] * eval_head(ast[2], args, arg_of)
        return eval_head(ast[1], args, arg_of) + eval_head(ast[2], args, arg_of)

    rules = {}
    for r in registers:
        arg_of = {nid: i for i, nid in enumerate(reg_args[r.id])}

        def reg_rule(op, args, r=r, arg_of=arg_of):
            term = build_tail(reg_term[r.id], args, arg_of, whole_input)
            return stream_step(r.value, term)

        rules[f"g_{r.id}"] = GsosRule(sum_sig.template(f"g_{r.id}"), reg_rule)

    for o in outputs:
        arg_of = {nid: i for i, nid in enumerate(out_args[o.id])}

        def out_rule(op, args, o=o, arg_of=arg_of):
            head = eval_head(out_term[o.id], args, arg_of)

            # the derivative replaces inputs by their tails and registers
            # by the tails of their defining streams
            def build(ast):
                tag = ast[0]
                if tag == "in":
                    return args[arg_of[ast[1]]].tail
                if tag == "reg":
                    return build_tail(reg_term[ast[1]], args, arg_of,
                                      whole_input)
                if tag == "mult":
                    return mk_app(sum_sig.op("mult", ast[1]), (build(ast[2]),))
                return mk_app(sum_sig.op("plus"),
                              (build(ast[1]), build(ast[2])))

            return stream_step(head, build(out_term[o.id]))

        rules[f"f_{o.id}"] = GsosRule(sum_sig.template(f"f_{o.id}"), out_rule)

    rps = RpsDef(new_sig, rules)
    return CompiledCircuit(
        rps,
        inputs,
        tuple((f"f_{o.id}", o.id, out_args[o.id]) for o in outputs),
        tuple((f"g_{r.id}", r.id, reg_args[r.id]) for r in registers),
    )


def _register_free_loop(cf: CircuitFile, incoming):
    """A cycle avoiding all registers, as a node-id list, or None."""
    blocked = {n.id for n in cf.nodes if n.kind == "register"}
    graph = {n.id: [s for s in incoming[n.id] if s not in blocked]
             for n in cf.nodes if n.id not in blocked}
    state = {}
    stack = []

    def visit(nid):
        state[nid] = 1
        stack.append(nid)
        for nxt in graph.get(nid, ()):
            if state.get(nxt) == 1:
                i = stack.index(nxt)
                return stack[i:] + [nxt]
            if nxt not in state:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        state[nid] = 2
        return None

    for nid in graph:
        if nid not in state:
            found = visit(nid)
            if found:
                return found
    return None


# ---------------------------------------------------------------------------
# Stream argument specs for the command line


def parse_stream_spec(spec: str):
    """Eventually periodic stream literal: `pre1;pre2|c1;c2`, `ones`,
    `zeros`, or a plain rational list (continued with zeros)."""
    spec = spec.strip()
    if spec == "ones":
        return (), (Fraction(1),)
    if spec == "zeros":
        return (), (Fraction(0),)
    pre_txt, bar, cyc_txt = spec.partition("|")

    def parts(txt):
        txt = txt.strip()
        if not txt:
            return ()
        return tuple(Fraction(p.strip()) for p in txt.split(";"))

    try:
        pre, cyc = parts(pre_txt), parts(cyc_txt)
    except (ValueError, ZeroDivisionError):
        raise ParseError(1, 1, f"bad stream literal {spec!r}") from None
    if not bar:
        return pre, (Fraction(0),)
    return pre, cyc or (Fraction(0),)

"""Signatures and finite terms over them.

A signature is a finite list of operation symbol declarations.  Terms are
immutable trees whose leaves are variables or references to already-solved
states (parameters), shared by reference and compared structurally.  Sums of
signatures rename colliding symbols and record the embedding, so terms built
over a summand can be injected into the sum.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional

from .errors import ArityMismatch, ForeignSymbol, NotASummand, UnknownSymbol

# Variable names starting with this prefix are reserved for engine-generated
# placeholders and fresh states; user-facing formats reject them.
RESERVED_PREFIX = "~"


def is_reserved_name(name: str) -> bool:
    return name.startswith(RESERVED_PREFIX)


@dataclass(frozen=True)
class OpDecl:
    """Declaration of one operation symbol or symbol family.

    ``parametric`` families instantiate one concrete symbol per parameter
    value (e.g. one constant per rational).  ``arity=None`` means the arity
    is the (integer) parameter itself, used for finite n-ary summation.
    """

    name: str
    arity: Optional[int]
    parametric: bool = False


@dataclass(frozen=True)
class OpSym:
    name: str
    arity: int
    sig_id: str
    param: Hashable = None

    def __repr__(self):
        if self.param is None:
            return f"{self.name}/{self.arity}"
        return f"{self.name}[{self.param}]/{self.arity}"


def _decl(spec) -> OpDecl:
    if isinstance(spec, OpDecl):
        return spec
    name, arity = spec[0], spec[1]
    parametric = bool(spec[2]) if len(spec) > 2 else False
    return OpDecl(name, arity, parametric)


class Signature:
    """A finite ordered family of operation declarations.

    Identity is structural: two signatures built from the same declarations
    and summand structure are the same signature.  This keeps sums
    reproducible, so rule authors and table constructors can independently
    form ``sig_sum(k, v)`` and obtain interchangeable symbols.
    """

    __slots__ = ("decls", "summands", "sig_id", "_by_name")

    def __init__(self, decls: Iterable, summands=()):
        decls = tuple(_decl(d) for d in decls)
        by_name = {}
        for d in decls:
            if d.name in by_name:
                raise ForeignSymbol(f"duplicate symbol {d.name!r} in signature")
            by_name[d.name] = d
        self.decls = decls
        self.summands = tuple(summands)
        self._by_name = by_name
        self.sig_id = self._compute_id()

    def _compute_id(self) -> str:
        h = hashlib.sha1()
        for d in self.decls:
            h.update(f"{d.name}/{d.arity}/{int(d.parametric)};".encode())
        for sub, renames in self.summands:
            h.update(f"[{sub.sig_id}:{sorted(renames.items())}]".encode())
        return h.hexdigest()[:12]

    def __eq__(self, other):
        return isinstance(other, Signature) and self.sig_id == other.sig_id

    def __hash__(self):
        return hash(self.sig_id)

    def __repr__(self):
        return f"Signature({[d.name for d in self.decls]})"

    @property
    def names(self):
        return tuple(d.name for d in self.decls)

    def decl(self, name: str) -> OpDecl:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownSymbol(f"no symbol {name!r} in signature") from None

    def op(self, name: str, param: Hashable = None) -> OpSym:
        """Instantiate a concrete symbol, supplying the parameter for families."""
        d = self.decl(name)
        if d.parametric:
            if param is None:
                raise UnknownSymbol(f"symbol family {name!r} needs a parameter")
            arity = d.arity if d.arity is not None else int(param)
        else:
            if param is not None:
                raise UnknownSymbol(f"symbol {name!r} takes no parameter")
            arity = d.arity
        return OpSym(name, arity, self.sig_id, param)

    def template(self, name: str) -> OpSym:
        """Parameter-less symbol used when declaring rules for families."""
        d = self.decl(name)
        return OpSym(name, d.arity if d.arity is not None else 0, self.sig_id)

    def contains(self, op: OpSym) -> bool:
        if op.sig_id != self.sig_id or op.name not in self._by_name:
            return False
        d = self._by_name[op.name]
        expected = d.arity if d.arity is not None else op.param
        return op.arity == expected

    def embedding_from(self, source: "Signature") -> Mapping[str, str]:
        """Name translation of ``source``'s symbols into this signature.

        Raises NotASummand when ``source`` is not this signature or a
        (possibly nested) recorded summand.  When the same signature occurs
        as several summands the leftmost occurrence wins.
        """
        m = self._find_embedding(source.sig_id)
        if m is None:
            raise NotASummand(f"{source!r} is not a summand of {self!r}")
        return m

    def _find_embedding(self, sig_id: str):
        if sig_id == self.sig_id:
            return {d.name: d.name for d in self.decls}
        for sub, renames in self.summands:
            inner = sub._find_embedding(sig_id)
            if inner is not None:
                return {orig: renames.get(mid, mid) for orig, mid in inner.items()}
        return None


def signature(*decls) -> Signature:
    """Build a base signature from ``(name, arity[, parametric])`` specs."""
    return Signature(decls)


def sig_sum(left: Signature, right: Signature) -> Signature:
    """Disjoint sum of two signatures; right-hand collisions get primed names."""
    used = set(left.names)
    renames = {}
    decls = list(left.decls)
    for d in right.decls:
        name = d.name
        while name in used:
            name += "'"
        used.add(name)
        renames[d.name] = name
        decls.append(OpDecl(name, d.arity, d.parametric))
    return Signature(
        decls,
        summands=(
            (left, {n: n for n in left.names}),
            (right, renames),
        ),
    )


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Param(Term):
    """Leaf referencing an already-solved state (a constant parameter)."""

    ref: object

    def __repr__(self):
        return f"<param {self.ref!r}>"


@dataclass(frozen=True)
class App(Term):
    op: OpSym
    args: tuple

    def __repr__(self):
        if not self.args:
            return repr(self.op)
        return f"{self.op!r}({', '.join(map(repr, self.args))})"


def mk_var(name: str) -> Var:
    return Var(name)


def mk_app(op: OpSym, args) -> App:
    args = tuple(args)
    if len(args) != op.arity:
        raise ArityMismatch(
            f"{op!r} applied to {len(args)} arguments"
        )
    for a in args:
        if isinstance(a, App) and a.op.sig_id != op.sig_id:
            raise ForeignSymbol(
                f"argument head {a.op!r} is not in the signature of {op!r}"
            )
        if not isinstance(a, Term):
            raise TypeError(f"not a term: {a!r}")
    return App(op, args)


def substitute(t: Term, env: Mapping[str, Term]) -> Term:
    """Simultaneous replacement of variables; missing entries stay in place."""
    if isinstance(t, Var):
        return env.get(t.name, t)
    if isinstance(t, Param):
        return t
    changed = False
    new_args = []
    for a in t.args:
        n = substitute(a, env)
        changed = changed or n is not a
        new_args.append(n)
    return App(t.op, tuple(new_args)) if changed else t


def embed_signature(t: Term, into: Signature) -> Term:
    """Rename the symbols of ``t`` into the sum signature ``into``."""
    cache = {}

    def emb_op(op: OpSym) -> OpSym:
        if op.sig_id == into.sig_id:
            return op
        try:
            renames = cache[op.sig_id]
        except KeyError:
            renames = into._find_embedding(op.sig_id)
            if renames is None:
                raise NotASummand(
                    f"signature of {op!r} is not a summand of {into!r}"
                ) from None
            cache[op.sig_id] = renames
        return OpSym(renames[op.name], op.arity, into.sig_id, op.param)

    def walk(node: Term) -> Term:
        if isinstance(node, (Var, Param)):
            return node
        return App(emb_op(node.op), tuple(walk(a) for a in node.args))

    return walk(t)


def free_vars(t: Term) -> frozenset:
    out = set()
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, App):
            stack.extend(n.args)
    return frozenset(out)


def term_params(t: Term):
    """All Param leaves, in left-to-right order."""
    out = []
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, Param):
            out.append(n)
        elif isinstance(n, App):
            stack.extend(reversed(n.args))
    return out


def term_ops(t: Term):
    out = []
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, App):
            out.append(n.op)
            stack.extend(reversed(n.args))
    return out


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


def term_depth(t: Term) -> int:
    if isinstance(t, App) and t.args:
        return 1 + max(term_depth(a) for a in t.args)
    return 1 if isinstance(t, App) else 0

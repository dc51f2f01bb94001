"""Behavior kinds, one-step observations, and finite observation trees.

A behavior kind fixes the label domain and the port discipline of one-step
observations.  Four kinds are built in: streams and infinite binary trees
over exact rationals, formal languages over a finite alphabet, and finitely
branching processes over an action set with involutive complement.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from .errors import BadActionStructure, KindMismatch


def rat(value) -> Fraction:
    """Exact rational from int, Fraction, or a `p/q` / decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational label")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


@dataclass(frozen=True)
class StreamKind:
    name = "stream"
    deterministic = True
    ports: Tuple[str, ...] = ("tail",)

    def check_label(self, label):
        if not isinstance(label, Fraction):
            raise KindMismatch(f"stream label must be a Fraction, got {label!r}")


@dataclass(frozen=True)
class TreeKind:
    name = "tree"
    deterministic = True
    ports: Tuple[str, ...] = ("L", "R")

    def check_label(self, label):
        if not isinstance(label, Fraction):
            raise KindMismatch(f"tree label must be a Fraction, got {label!r}")


@dataclass(frozen=True)
class LanguageKind:
    alphabet: Tuple[str, ...]
    name = "language"
    deterministic = True

    @property
    def ports(self):
        return self.alphabet

    def check_label(self, label):
        if not isinstance(label, bool):
            raise KindMismatch(f"language label must be a bool, got {label!r}")


@dataclass(frozen=True)
class ProcessKind:
    """Finitely branching labelled transitions; label slot unused (None)."""

    actions: Tuple[str, ...]
    complement: Tuple[Tuple[str, str], ...]
    tau: str
    name = "process"
    deterministic = False

    def __post_init__(self):
        comp = dict(self.complement)
        if set(comp) != set(self.actions):
            raise BadActionStructure("complement must be total on the actions")
        for a, b in comp.items():
            if b not in comp or comp[b] != a:
                raise BadActionStructure(f"complement not involutive at {a!r}")
        if self.tau not in comp or comp[self.tau] != self.tau:
            raise BadActionStructure("tau must be its own complement")

    def co(self, action: str) -> str:
        for a, b in self.complement:
            if a == action:
                return b
        raise KindMismatch(f"unknown action {action!r}")

    def action_index(self, action: str) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise KindMismatch(f"unknown action {action!r}") from None

    def check_label(self, label):
        if label is not None:
            raise KindMismatch("process observations carry no label")


STREAM = StreamKind()
TREE = TreeKind()


def process_actions(*base_names, tau="tau") -> ProcessKind:
    """Action structure with a primed complement for every base name."""
    actions = []
    comp = []
    for n in sorted(base_names):
        co = n + "'"
        actions.extend([n, co])
        comp.extend([(n, co), (co, n)])
    actions.append(tau)
    comp.append((tau, tau))
    return ProcessKind(tuple(actions), tuple(comp), tau)


@dataclass(frozen=True)
class Step:
    """One observation: a label plus a finite port-indexed family of children.

    For deterministic kinds the ports are exactly the kind's ports, once
    each, in order.  For processes the ports are (action, index) pairs at
    the node level; rule conclusions may use bare action strings, which the
    engine canonicalizes.
    """

    label: object
    children: tuple

    def child(self, port):
        for p, x in self.children:
            if p == port:
                return x
        raise KeyError(port)


def stream_step(label, tail) -> Step:
    return Step(rat(label), (("tail", tail),))


def tree_step(label, left, right) -> Step:
    return Step(rat(label), (("L", left), ("R", right)))


def language_step(accepting, children, alphabet) -> Step:
    """children: mapping letter -> continuation, total on the alphabet."""
    return Step(bool(accepting), tuple((a, children[a]) for a in alphabet))


def process_step(moves) -> Step:
    return Step(None, tuple(moves))


def step_map(step: Step, f) -> Step:
    return Step(step.label, tuple((p, f(x)) for p, x in step.children))


def move_action(port):
    """Action name of a process port, which is either `a` or `(a, index)`."""
    return port[0] if isinstance(port, tuple) else port


def canonicalize_step(kind, step: Step, key=None) -> Step:
    """Set semantics for process steps: sort, deduplicate, index ports.

    Children are ordered by (action order, child key) and exact duplicates
    (same action, same child) collapse; deterministic kinds pass through
    unchanged.  ``key`` must give a total order on children; the engine
    passes node ids, plain orderable values work as-is.
    """
    if kind.deterministic:
        return step
    if key is None:
        key = lambda x: x
    seen = set()
    moves = []
    for port, child in step.children:
        action = move_action(port)
        k = (kind.action_index(action), key(child))
        if (action, key(child)) in seen:
            continue
        seen.add((action, key(child)))
        moves.append((k, action, child))
    moves.sort(key=lambda m: m[0])
    counts = {}
    out = []
    for _, action, child in moves:
        idx = counts.get(action, 0)
        counts[action] = idx + 1
        out.append(((action, idx), child))
    return Step(None, tuple(out))


def check_step(kind, step: Step):
    """Port-discipline check; raises KindMismatch on violation."""
    kind.check_label(step.label)
    if kind.deterministic:
        ports = tuple(p for p, _ in step.children)
        if ports != tuple(kind.ports):
            raise KindMismatch(
                f"{kind.name} step must cover ports {kind.ports}, got {ports}"
            )
    else:
        for p, _ in step.children:
            kind.action_index(move_action(p))


def label_eq(kind, l1, l2) -> bool:
    """Exact label comparison within one kind."""
    kind.check_label(l1)
    kind.check_label(l2)
    return l1 == l2


@dataclass(frozen=True)
class ObservationTree:
    """Finite unfolding of steps; leaves below the depth bound are cuts."""

    label: object = None
    children: tuple = ()
    cut: bool = False

    def __repr__(self):
        if self.cut:
            return "#"
        inner = ", ".join(f"{p}:{c!r}" for p, c in self.children)
        return f"({self.label} {inner})"


CUT = ObservationTree(cut=True)


def truncate(tree: ObservationTree, depth: int) -> ObservationTree:
    if tree.cut or depth <= 0:
        return CUT
    return ObservationTree(
        tree.label,
        tuple((p, truncate(c, depth - 1)) for p, c in tree.children),
    )


def tree_depth(tree: ObservationTree) -> int:
    if tree.cut:
        return 0
    if not tree.children:
        return 1
    return 1 + max(tree_depth(c) for _, c in tree.children)


def is_prefix(shallow: ObservationTree, deep: ObservationTree) -> bool:
    """True when ``shallow`` is a cut-truncation of ``deep``."""
    if shallow.cut:
        return True
    if deep.cut or shallow.label != deep.label:
        return False
    if len(shallow.children) != len(deep.children):
        return False
    return all(
        p == q and is_prefix(c, d)
        for (p, c), (q, d) in zip(shallow.children, deep.children)
    )


def stream_prefix(tree: ObservationTree):
    """Labels along the single tail port, up to the cut."""
    out = []
    while not tree.cut:
        out.append(tree.label)
        tree = tree.children[0][1]
    return out

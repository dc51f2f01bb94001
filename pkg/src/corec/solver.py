"""Lazy memoized unfolding of terms over states and equation solving.

The engine owns an arena of nodes: equation variables, operation symbols
applied to child nodes, and guard states holding a precomputed step.  Every
node's one-step behavior is computed at most once and memoized; syntactically
equal terms over the same states share a node.  Solving a system is cheap:
it allocates one node per variable, and all behavior is produced on demand
by `unfold`/`observe`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import behavior
from .behavior import CUT, ObservationTree, Step, canonicalize_step, check_step
from .errors import (
    ArityMismatch,
    ForeignSymbol,
    InvalidHandle,
    KindMismatch,
    RuleDiverged,
    UnguardedPath,
    UnknownSymbol,
    ValidationFailed,
    VariableClash,
)
from .rules import CtxApp, CtxGuard, RuleTable, arg_obs
from .terms import App, Param, Term, Var, free_vars, is_reserved_name


@dataclass
class EngineConfig:
    """Operational limits; the fuse bounds rule applications per step."""

    unfold_fuse: int = 1_000_000


# --- right-hand sides of equation systems ---------------------------------


@dataclass(frozen=True)
class FlatRhs:
    """One guarded step whose continuations are terms over vars/params."""

    step: Step


@dataclass(frozen=True)
class GuardedRhs:
    """A guarded context of given operations (sandwiched format)."""

    ctx: object


@dataclass(frozen=True)
class ConstRhs:
    """A constant parameter: an already-solved state."""

    ref: "SolutionHandle"


@dataclass(frozen=True)
class ExternalRhs:
    """Reference to another system's variable; only valid under composition."""

    var: str


@dataclass(frozen=True, eq=True)
class System:
    kind: object
    table: RuleTable
    vars: tuple
    rhs: dict

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))


@dataclass(frozen=True)
class SolutionHandle:
    """A state of the solved coalgebra; valid while its engine lives."""

    engine: "Engine"
    node: int
    kind: object

    def __repr__(self):
        return f"<state {self.node} of engine {id(self.engine):#x}>"


class _Node:
    __slots__ = ("tag", "kind", "table", "op", "children", "step", "var",
                 "rhs", "binding")

    def __init__(self, tag, kind, table=None, op=None, children=(),
                 step=None, var=None, rhs=None, binding=None):
        self.tag = tag
        self.kind = kind
        self.table = table
        self.op = op
        self.children = children
        self.step = step
        self.var = var
        self.rhs = rhs
        self.binding = binding


class Engine:
    """Single-owner arena of state graphs plus the unfolding machinery."""

    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig()
        self._nodes = []
        self._memo = {}
        self._cons = {}
        self._work = 0
        self._fresh = 0

    # -- bookkeeping --------------------------------------------------------

    def fresh_var(self) -> str:
        self._fresh += 1
        return f"~g{self._fresh}"

    def _tick(self):
        self._work += 1
        if self._work > self.config.unfold_fuse:
            raise RuleDiverged(
                f"more than {self.config.unfold_fuse} rule applications in "
                "one step; the input table is ill-formed")

    def _add(self, node: _Node) -> int:
        self._nodes.append(node)
        return len(self._nodes) - 1

    def _term_node(self, table: RuleTable, op, child_ids) -> int:
        key = ("t", id(table), op.name, op.param, tuple(child_ids))
        nid = self._cons.get(key)
        if nid is None:
            nid = self._add(_Node("term", table.kind, table=table, op=op,
                                  children=tuple(child_ids)))
            self._cons[key] = nid
        return nid

    def _guard_node(self, kind, step: Step) -> int:
        step = canonicalize_step(kind, step)
        key = ("g", kind, step.label, step.children)
        nid = self._cons.get(key)
        if nid is None:
            nid = self._add(_Node("guard", kind, step=step))
            self._cons[key] = nid
        return nid

    def _check_handle(self, h: SolutionHandle):
        if not isinstance(h, SolutionHandle) or h.engine is not self:
            raise InvalidHandle(f"handle {h!r} does not belong to this engine")
        if not (0 <= h.node < len(self._nodes)):
            raise InvalidHandle(f"stale node id {h.node}")

    def _handle(self, nid: int) -> SolutionHandle:
        return SolutionHandle(self, nid, self._nodes[nid].kind)

    # -- term and context instantiation -------------------------------------

    def _term_to_node(self, table: RuleTable, t: Term, binding) -> int:
        if isinstance(t, Var):
            try:
                return binding[t.name]
            except KeyError:
                raise UnknownSymbol(f"unbound variable {t.name!r}") from None
        if isinstance(t, Param):
            ref = t.ref
            self._check_handle(ref)
            if ref.kind != table.kind:
                raise KindMismatch(
                    f"parameter of kind {ref.kind.name} in a "
                    f"{table.kind.name} term")
            return ref.node
        if isinstance(t, App):
            if not table.sig.contains(t.op):
                raise ForeignSymbol(f"{t.op!r} is not in the table signature")
            children = [self._term_to_node(table, a, binding) for a in t.args]
            return self._term_node(table, t.op, children)
        raise TypeError(f"not a term: {t!r}")

    def _instantiate_step(self, table: RuleTable, step: Step, binding) -> Step:
        children = tuple((p, self._term_to_node(table, t, binding))
                         for p, t in step.children)
        out = canonicalize_step(table.kind, Step(step.label, children))
        check_step(table.kind, out)
        return out

    def _ctx_to_node(self, table: RuleTable, ctx, binding) -> int:
        if isinstance(ctx, CtxGuard):
            return self._guard_node(
                table.kind, self._instantiate_step(table, ctx.step, binding))
        if isinstance(ctx, CtxApp):
            if not table.sig.contains(ctx.op):
                raise ForeignSymbol(f"{ctx.op!r} is not in the table signature")
            children = [self._ctx_to_node(table, a, binding) for a in ctx.args]
            return self._term_node(table, ctx.op, children)
        raise UnguardedPath(f"context leaf {ctx!r} has no guard")

    # -- unfolding -----------------------------------------------------------

    def _unfold(self, nid: int) -> Step:
        step = self._memo.get(nid)
        if step is not None:
            return step
        self._tick()
        node = self._nodes[nid]
        if node.tag == "guard":
            step = node.step
        elif node.tag == "term":
            step = self._apply_rule(node)
        else:
            step = self._eqvar_step(node)
        self._memo[nid] = step
        return step

    def _premises(self, kind, child_ids):
        args = []
        binding = {}
        for i, cid in enumerate(child_ids):
            st = self._unfold(cid)
            obs, _ = arg_obs(kind, i, st)
            binding[obs.self_term.name] = cid
            pairs = obs.tails if kind.deterministic else obs.moves
            for (_, var), (_, child) in zip(pairs, st.children):
                binding[var.name] = child
            args.append(obs)
        return tuple(args), binding

    def _apply_rule(self, node: _Node) -> Step:
        table, op = node.table, node.op
        args, binding = self._premises(node.kind, node.children)
        if table.srps_backed(op.name):
            ctx = table.srps[op.name].fn(op, args)
            return self._elaborate(table, ctx, binding)
        rule = table.rule_for(op.name)
        return self._instantiate_step(table, rule.conclude(op, args), binding)

    def _elaborate(self, table: RuleTable, ctx, binding) -> Step:
        return self._unfold(self._ctx_to_node(table, ctx, binding))

    def _eqvar_step(self, node: _Node) -> Step:
        rhs = node.rhs
        if isinstance(rhs, FlatRhs):
            return self._instantiate_step(node.table, rhs.step, node.binding)
        if isinstance(rhs, GuardedRhs):
            return self._elaborate(node.table, rhs.ctx, node.binding)
        raise ValidationFailed(f"unsolvable right-hand side {rhs!r}")

    def _observe(self, nid: int, depth: int) -> ObservationTree:
        if depth <= 0:
            return CUT
        step = self._unfold(nid)
        return ObservationTree(
            step.label,
            tuple((p, self._observe(c, depth - 1)) for p, c in step.children))

    # -- public operations ---------------------------------------------------

    def unfold(self, h: SolutionHandle) -> Step:
        """One observation of a state; memoized, identical on re-query."""
        self._check_handle(h)
        self._work = 0
        step = self._unfold(h.node)
        return Step(step.label,
                    tuple((p, self._handle(c)) for p, c in step.children))

    def observe(self, h: SolutionHandle, depth: int) -> ObservationTree:
        """Depth-bounded unfolding; deeper behavior is cut off."""
        self._check_handle(h)
        self._work = 0
        return self._observe(h.node, depth)

    def interpret_op(self, table: RuleTable, op, args) -> SolutionHandle:
        """The state denoting ``op`` applied to already-solved states."""
        args = tuple(args)
        if not table.sig.contains(op):
            raise ForeignSymbol(f"{op!r} is not in the table signature")
        if len(args) != op.arity:
            raise ArityMismatch(f"{op!r} applied to {len(args)} states")
        for h in args:
            self._check_handle(h)
            if h.kind != table.kind:
                raise KindMismatch(
                    f"argument of kind {h.kind.name} for a "
                    f"{table.kind.name} operation")
        nid = self._term_node(table, op, [h.node for h in args])
        return self._handle(nid)

    def interpret_term(self, table: RuleTable, t: Term,
                       env: Optional[Mapping[str, SolutionHandle]] = None
                       ) -> SolutionHandle:
        """State for a closed term over parameters and ``env`` variables."""
        binding = {v: h.node for v, h in (env or {}).items()}
        self._work = 0
        return self._handle(self._term_to_node(table, t, binding))

    def elaborate_guards(self, table: RuleTable, ctx,
                         binding: Mapping[str, SolutionHandle]) -> Step:
        """One step of a guarded context over already-solved states."""
        node_binding = {}
        for v, h in binding.items():
            self._check_handle(h)
            node_binding[v] = h.node
        self._work = 0
        step = self._elaborate(table, ctx, node_binding)
        return Step(step.label,
                    tuple((p, self._handle(c)) for p, c in step.children))

    def solve(self, system: System) -> dict:
        """Solutions of a flat or sandwiched equation system.

        Returns one handle per variable; unfolding the handles satisfies
        the defining equations (see `checking.diagram_check`).
        """
        self._validate_system(system)
        binding = {}
        for v in system.vars:
            rhs = system.rhs[v]
            if isinstance(rhs, ConstRhs):
                binding[v] = rhs.ref.node
            else:
                nid = self._add(_Node("eqvar", system.kind, table=system.table,
                                      var=v, rhs=rhs, binding=binding))
                binding[v] = nid
        return {v: self._handle(binding[v]) for v in system.vars}

    def _validate_system(self, system: System):
        report = system.table.validation()
        if not report.ok:
            raise ValidationFailed(f"table invalid: {report.violations}")
        if system.kind != system.table.kind:
            raise KindMismatch("system kind differs from its table's kind")
        if len(set(system.vars)) != len(system.vars):
            raise VariableClash("duplicate variable names")
        allowed = set(system.vars)
        for v in system.vars:
            if is_reserved_name(v):
                raise ValidationFailed(f"variable name {v!r} is reserved")
            if v not in system.rhs:
                raise ValidationFailed(f"no right-hand side for {v!r}")
            self._validate_rhs(system, system.rhs[v], allowed)

    def _validate_rhs(self, system: System, rhs, allowed):
        if isinstance(rhs, ConstRhs):
            self._check_handle(rhs.ref)
            if rhs.ref.kind != system.kind:
                raise KindMismatch("constant parameter of the wrong kind")
            return
        if isinstance(rhs, ExternalRhs):
            raise ValidationFailed(
                "external variable references are only solvable through "
                "compose_systems")
        if isinstance(rhs, FlatRhs):
            self._validate_rhs_step(system, rhs.step, allowed)
            return
        if isinstance(rhs, GuardedRhs):
            self._validate_ctx(system, rhs.ctx, allowed)
            return
        raise ValidationFailed(f"unrecognized right-hand side {rhs!r}")

    def _validate_rhs_step(self, system: System, step: Step, allowed):
        kind = system.kind
        kind.check_label(step.label)
        if kind.deterministic:
            ports = tuple(p for p, _ in step.children)
            if ports != tuple(kind.ports):
                raise ValidationFailed(
                    f"step must cover ports {kind.ports}, got {ports}")
        for p, t in step.children:
            if not kind.deterministic:
                kind.action_index(behavior.move_action(p))
            self._validate_rhs_term(system, t, allowed)

    def _validate_rhs_term(self, system: System, t: Term, allowed):
        loose = free_vars(t) - allowed
        if loose:
            raise ValidationFailed(f"undeclared variables {loose} in rhs")
        for leaf in _params_of(t):
            self._check_handle(leaf.ref)
            if leaf.ref.kind != system.kind:
                raise KindMismatch("parameter of the wrong kind in rhs")
        for node in _apps_of(t):
            if not system.table.sig.contains(node.op):
                raise ValidationFailed(
                    f"rhs uses {node.op!r} outside the table signature")

    def _validate_ctx(self, system: System, ctx, allowed):
        if isinstance(ctx, CtxGuard):
            self._validate_rhs_step(system, ctx.step, allowed)
            return
        if isinstance(ctx, CtxApp):
            if not system.table.sig.contains(ctx.op):
                raise ValidationFailed(
                    f"context uses {ctx.op!r} outside the table signature")
            if len(ctx.args) != ctx.op.arity:
                raise ValidationFailed(f"{ctx.op!r} misapplied in context")
            for sub in ctx.args:
                self._validate_ctx(system, sub, allowed)
            return
        raise UnguardedPath(f"context leaf {ctx!r} has no guard")

    # -- rhs re-application, used by the solution-diagram check -------------

    def materialize_rhs(self, system: System, var: str,
                        sol: Mapping[str, SolutionHandle]) -> SolutionHandle:
        """State obtained by applying ``var``'s rhs to the solved states."""
        rhs = system.rhs[var]
        if isinstance(rhs, ConstRhs):
            return rhs.ref
        binding = {v: sol[v].node for v in system.vars}
        self._work = 0
        if isinstance(rhs, FlatRhs):
            step = self._instantiate_step(system.table, rhs.step, binding)
            return self._handle(self._guard_node(system.kind, step))
        if isinstance(rhs, GuardedRhs):
            return self._handle(
                self._ctx_to_node(system.table, rhs.ctx, binding))
        raise ValidationFailed(f"unsolvable right-hand side {rhs!r}")

    # -- composition of systems ----------------------------------------------

    def compose_systems(self, f: System, e: System, depth: int = 4):
        """Simultaneous system vs. solve-then-substitute, checked to depth.

        ``f`` may use constant parameters; ``e`` may in addition map a
        variable directly to one of ``f``'s variables (ExternalRhs).
        Returns the combined system and whether both solution routes agree
        on every variable to the given depth.
        """
        from . import checking

        if f.table is not e.table or f.kind != e.kind:
            raise ValidationFailed("composed systems must share one table")
        clash = set(f.vars) & set(e.vars)
        if clash:
            raise VariableClash(f"variables {sorted(clash)} appear twice")
        for v in f.vars:
            if isinstance(f.rhs[v], ExternalRhs):
                raise ValidationFailed("the base system has no externals")
        combined_rhs = {}
        for v in e.vars:
            rhs = e.rhs[v]
            if isinstance(rhs, ExternalRhs):
                if rhs.var not in f.vars:
                    raise ValidationFailed(
                        f"external {rhs.var!r} is not a base variable")
                combined_rhs[v] = f.rhs[rhs.var]
            else:
                combined_rhs[v] = rhs
        for v in f.vars:
            combined_rhs[v] = f.rhs[v]
        combined = System(f.kind, f.table, tuple(e.vars) + tuple(f.vars),
                          combined_rhs)

        f_sol = self.solve(f)
        staged_rhs = {}
        for v in e.vars:
            rhs = e.rhs[v]
            if isinstance(rhs, ExternalRhs):
                staged_rhs[v] = ConstRhs(f_sol[rhs.var])
            else:
                staged_rhs[v] = rhs
        staged_sol = self.solve(System(e.kind, e.table, e.vars, staged_rhs))
        combined_sol = self.solve(combined)

        ok = all(
            checking.bounded_equal(combined_sol[v], staged_sol[v], depth)
            for v in e.vars
        ) and all(
            checking.bounded_equal(combined_sol[v], f_sol[v], depth)
            for v in f.vars
        )
        return combined, ok


def _params_of(t: Term):
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, Param):
            yield n
        elif isinstance(n, App):
            stack.extend(n.args)


def _apps_of(t: Term):
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, App):
            yield n
            stack.extend(n.args)


# Module-level conveniences mirroring the engine methods.

def unfold(h: SolutionHandle) -> Step:
    return h.engine.unfold(h)


def observe(h: SolutionHandle, depth: int) -> ObservationTree:
    return h.engine.observe(h, depth)


def solve_system(system: System, engine: Optional[Engine] = None) -> dict:
    return (engine or Engine()).solve(system)


def interpret_op(table: RuleTable, op, args, engine: Optional[Engine] = None
                 ) -> SolutionHandle:
    if engine is None:
        engine = args[0].engine if args else Engine()
    return engine.interpret_op(table, op, args)

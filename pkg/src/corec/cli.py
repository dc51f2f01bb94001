"""Command-line interface.

Subcommands: `solve` (equation systems), `bde` (behavioral differential
equations), `circuit` (stream circuits), `member` (grammar membership),
`ccs` (process systems), and `check` (property suites).  Exit code 0 on
success, 1 when a check fails, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import checking, frontends, instances
from .behavior import ObservationTree
from .errors import CorecError
from .solver import Engine


def _obs_json(tree: ObservationTree):
    if tree.cut:
        return {"cut": True}
    label = tree.label
    if isinstance(label, Fraction):
        label = frontends.format_rat(label)
    return {
        "label": label,
        "children": [[_port_str(p), _obs_json(c)] for p, c in tree.children],
    }


def _port_str(port):
    return port[0] if isinstance(port, tuple) else str(port)


def _obs_text(kind, tree: ObservationTree) -> str:
    if kind.name == "stream":
        out = []
        while not tree.cut:
            out.append(frontends.format_rat(tree.label))
            tree = tree.children[0][1]
        return " ".join(out)
    return _obs_sexpr(kind, tree)


def _obs_sexpr(kind, tree) -> str:
    if tree.cut:
        return "#"
    if kind.name == "process":
        inner = " ".join(f"{_port_str(p)}.{_obs_sexpr(kind, c)}"
                         for p, c in tree.children)
        return "{" + inner + "}"
    label = tree.label
    if isinstance(label, Fraction):
        label = frontends.format_rat(label)
    elif isinstance(label, bool):
        label = "1" if label else "0"
    inner = " ".join(f"{p}:{_obs_sexpr(kind, c)}" for p, c in tree.children)
    return f"({label} {inner})"


def _emit(args, payload_text, payload_json):
    if args.format == "json":
        print(json.dumps(payload_json, indent=2))
    else:
        print(payload_text)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _stream_arg(engine: Engine, spec: str):
    pre, cyc = frontends.parse_stream_spec(spec)
    return instances.periodic_stream(engine, pre, cyc)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_solve(args) -> int:
    system = frontends.parse_system(_read(args.file), args.kind)
    engine = Engine()
    sol = engine.solve(system)
    requests = args.observe or [f"{v}:4" for v in system.vars]
    lines = []
    blob = {}
    for req in requests:
        var, _, depth_txt = req.partition(":")
        if var not in sol:
            raise CorecError(f"no variable {var!r} in the system")
        depth = int(depth_txt) if depth_txt else 4
        tree = engine.observe(sol[var], depth)
        lines.append(f"{var}: {_obs_text(system.kind, tree)}")
        blob[var] = _obs_json(tree)
    _emit(args, "\n".join(lines), blob)
    return 0


def _cmd_bde(args) -> int:
    program = frontends.parse_bde(_read(args.file))
    table = program.extended_table()
    engine = Engine()
    name, _, arg_txt = args.apply.partition(":")
    if name not in program.names:
        raise CorecError(f"no defined operation {name!r}")
    arg_specs = [s for s in arg_txt.split(",") if s.strip()] if arg_txt else []
    if program.kind.name == "stream":
        handles = [_stream_arg(engine, s) for s in arg_specs]
    else:
        handles = [
            engine.interpret_op(table, table.op("const", Fraction(s.strip())),
                                [])
            for s in arg_specs
        ]
    op = table.op(name)
    result = engine.interpret_op(table, op, handles)
    tree = engine.observe(result, args.prefix)
    _emit(args, f"{name}: {_obs_text(program.kind, tree)}", _obs_json(tree))
    return 0


def _cmd_circuit(args) -> int:
    compiled = frontends.compile_circuit(
        frontends.load_circuit(_read(args.file)))
    table = compiled.table()
    engine = Engine()
    given = dict(pair.split("=", 1) for pair in args.input or [])
    feeds = {}
    for input_id in compiled.inputs:
        feeds[input_id] = _stream_arg(engine, given.pop(input_id, "zeros"))
    if given:
        raise CorecError(f"unknown inputs: {sorted(given)}")
    wanted = [o for o in compiled.outputs
              if args.output in (None, o[0], o[1])]
    if not wanted:
        raise CorecError(f"no output {args.output!r}")
    lines = []
    blob = {}
    for symbol, node_id, input_ids in wanted:
        handle = engine.interpret_op(table, table.op(symbol),
                                     [feeds[i] for i in input_ids])
        tree = engine.observe(handle, args.prefix)
        lines.append(f"{node_id}: {_obs_text(table.kind, tree)}")
        blob[node_id] = _obs_json(tree)
    _emit(args, "\n".join(lines), blob)
    return 0


def _cmd_member(args) -> int:
    grammar = frontends.parse_gnf(_read(args.grammar))
    system = frontends.compile_gnf(grammar)
    engine = Engine()
    sol = engine.solve(system)
    word = args.word
    for letter in word:
        if letter not in grammar.terminals:
            raise CorecError(f"letter {letter!r} is not a terminal")
    verdict = instances.language_member(sol[grammar.start], word)
    _emit(args, "true" if verdict else "false",
          {"word": word, "member": verdict})
    return 0


def _cmd_ccs(args) -> int:
    system = frontends.parse_ccs(_read(args.file))
    engine = Engine()
    sol = engine.solve(system)
    if args.bisim:
        left, right = args.bisim
        for name in (left, right):
            if name not in sol:
                raise CorecError(f"no agent {name!r}")
        same = checking.bounded_equal(sol[left], sol[right], args.depth)
        _emit(args, "true" if same else "false",
              {"left": left, "right": right, "depth": args.depth,
               "bisimilar": same})
        return 0 if same else 1
    agent = args.agent or system.vars[0]
    if agent not in sol:
        raise CorecError(f"no agent {agent!r}")
    tree = engine.observe(sol[agent], args.depth)
    _emit(args, f"{agent}: {_obs_text(system.kind, tree)}",
          {agent: _obs_json(tree)})
    return 0


def _cmd_check(args) -> int:
    names = [args.suite] if args.suite else list(checking.suite_names())
    reports = []
    for name in names:
        reports.extend(checking.run_suite(name, seed=args.seed))
    if args.format == "json":
        print(checking.reports_to_json(reports))
    else:
        print(checking.reports_to_text(reports))
    return 0 if all(r.passed for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corec",
        description="corecursion engine: unique solutions of guarded "
                    "equation systems over streams, trees, languages, "
                    "and processes")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an equation-system file")
    p.add_argument("file")
    p.add_argument("--kind", help="kind when the file has no header")
    p.add_argument("--observe", action="append", metavar="VAR:DEPTH")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("bde", help="apply an operation defined by "
                                   "behavioral differential equations")
    p.add_argument("file")
    p.add_argument("--apply", required=True, metavar="F:ARG,ARG")
    p.add_argument("--prefix", type=int, default=8)
    p.set_defaults(fn=_cmd_bde)

    p = sub.add_parser("circuit", help="run a compiled stream circuit")
    p.add_argument("file")
    p.add_argument("--input", action="append", metavar="NAME=SPEC")
    p.add_argument("--prefix", type=int, default=8)
    p.add_argument("--output", help="restrict to one output")
    p.set_defaults(fn=_cmd_circuit)

    p = sub.add_parser("member", help="grammar membership via derivatives")
    p.add_argument("grammar")
    p.add_argument("word")
    p.set_defaults(fn=_cmd_member)

    p = sub.add_parser("ccs", help="solve a process definition file")
    p.add_argument("file")
    p.add_argument("--agent")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--bisim", nargs=2, metavar=("P", "Q"))
    p.set_defaults(fn=_cmd_ccs)

    p = sub.add_parser("check", help="run property suites")
    p.add_argument("--suite", choices=checking.suite_names())
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_check)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.fn(args)
    except (CorecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

"""Command-line driver: ``rolebind parse|verify|compile|simulate``.

Exit codes: 0 success, 1 usage error, 2 parse error, 3 inconsistent policy,
4 runtime operation rejected.
"""
from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from .codegen import compile_all
from .core import PolicyError, RoleRef, UnknownRole, build_role_table
from .net import DEFAULT_STATE_CAP, NetError, build_nomination_net, check_consistency, export_dot
from .parser import PolicySyntaxError, parse_policy, render_policy
from .process import SchemaError, UnknownTask, cross_validate, load_process
from .runtime import BindingError, CaseState, create_case

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INCONSISTENT, EXIT_REJECTED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class ScriptError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    ap = _ArgumentParser(prog="rolebind", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("parse", help="print the canonical policy and its role table")
    p.add_argument("policy")
    p.add_argument("--process", help="process descriptor used for scope resolution")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("verify", help="check policy consistency on the nomination net")
    p.add_argument("policy")
    p.add_argument("--dot", help="write the nomination net as Graphviz text")
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true", help="reject release statements")

    p = sub.add_parser("compile", help="emit BindingPolicy and TaskRoleMap sources")
    p.add_argument("policy")
    p.add_argument("process")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("simulate", help="replay a binding script against a fresh case")
    p.add_argument("policy")
    p.add_argument("process")
    p.add_argument("script")
    p.add_argument("--state", help="write the final case state as JSON")
    p.add_argument("--from-state", help="continue from a saved case state")
    p.add_argument("--json", action="store_true")
    return ap


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _state_cap() -> int:
    raw = os.environ.get("ROLEBIND_STATE_CAP")
    if not raw:
        return DEFAULT_STATE_CAP
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ROLEBIND_STATE_CAP must be an integer, got {raw!r}") from None


def _load(policy_path: str, process_path: Optional[str] = None):
    process = load_process(_read(process_path)) if process_path else None
    policy = parse_policy(_read(policy_path), process)
    table = build_role_table(policy, process)
    return policy, table, process


def _cmd_parse(args, out) -> int:
    policy, table, process = _load(args.policy, args.process)
    diagnostics = cross_validate(policy, process) if process is not None else []
    for d in diagnostics:
        print(f"warning: {d}", file=sys.stderr)
    rows = [
        {"index": e.index, "role": str(e.ref), "caseCreator": e.is_case_creator, "multi": e.is_multi}
        for e in table
    ]
    if args.json:
        print(json.dumps({"policy": render_policy(policy), "roles": rows, "diagnostics": diagnostics}, indent=2), file=out)
        return EXIT_OK
    out.write(render_policy(policy))
    print(file=out)
    for r in rows:
        flags = [f for f, on in (("case-creator", r["caseCreator"]), ("multi", r["multi"])) if on]
        print(f"{r['index']:>3}  {r['role']}" + (f"  [{', '.join(flags)}]" if flags else ""), file=out)
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    policy, table, _ = _load(args.policy)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        net = build_nomination_net(policy, table, strict=args.strict)
    for ignored in net.ignored:
        print(f"warning: ignored release statement: {ignored}", file=sys.stderr)
    result = check_consistency(net, _state_cap())
    if args.dot:
        Path(args.dot).write_text(export_dot(net), encoding="utf-8")
    if args.json:
        doc = result.to_json()
        doc["net"] = {"places": len(net.places), "transitions": len(net.transitions), "arcs": len(net.arcs)}
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
    else:
        print(result.report(), file=out)
    return EXIT_OK if result.consistent else EXIT_INCONSISTENT


def _cmd_compile(args, out) -> int:
    policy, table, process = _load(args.policy, args.process)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    contracts = compile_all(policy, table, process, Path(args.policy).stem)
    manifest = {"roles": [str(r) for r in table.refs], "contracts": []}
    for c in contracts:
        path = c.write(outdir)
        manifest["contracts"].append(c.manifest_json())
        print(f"wrote {path}", file=out)
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def parse_script(text: str) -> list[tuple[int, str, list[str]]]:
    """Split a simulation script into ``(line, op, args)`` tuples."""
    arity = {"create": 1, "nominate": 3, "release": 3, "vote": 3, "task": 2}
    ops = []
    for lineno, line in enumerate(text.splitlines(), 1):
        try:
            words = shlex.split(line, comments=True)
        except ValueError as exc:
            raise ScriptError(f"line {lineno}: {exc}") from None
        if not words:
            continue
        op, rest = words[0], words[1:]
        if op not in arity:
            raise ScriptError(f"line {lineno}: unknown operation {op!r}")
        if len(rest) != arity[op]:
            raise ScriptError(f"line {lineno}: {op} takes {arity[op]} arguments")
        if op == "vote" and rest[2] not in ("accept", "reject"):
            raise ScriptError(f"line {lineno}: vote must be accept or reject")
        ops.append((lineno, op, rest))
    return ops


def _cmd_simulate(args, out) -> int:
    policy, table, process = _load(args.policy, args.process)
    ops = parse_script(_read(args.script))
    case: Optional[CaseState] = None
    if args.from_state:
        try:
            case = CaseState.from_json(policy, table, json.loads(_read(args.from_state)))
        except (ValueError, KeyError) as exc:
            raise ScriptError(f"bad state file {args.from_state}: {exc}") from None
    events, tasks = [], []
    rejected = 0
    for lineno, op, a in ops:
        if op == "create":
            if case is not None:
                raise ScriptError(f"line {lineno}: the case already exists")
            case = create_case(policy, table, a[0])
            events.append(case.log[-1].describe())
            continue
        if case is None:
            raise ScriptError(f"line {lineno}: {op} before create")
        if op == "task":
            try:
                allowed = case.can_perform(a[1], a[0], process)
            except (UnknownTask, UnknownRole) as exc:
                raise ScriptError(f"line {lineno}: {exc}") from None
            tasks.append({"line": lineno, "task": a[0], "account": a[1], "allowed": allowed})
            events.append(f"task {a[0]!r} by {a[1]}: {'allowed' if allowed else 'denied'}")
            continue
        try:
            role = RoleRef.parse(a[0])
            if op == "nominate":
                case.nominate(a[1], a[2], role)
            elif op == "release":
                case.release(a[1], role, a[2])
            else:
                case.vote(a[1], role, a[2] == "accept")
            events.append(case.log[-1].describe())
        except BindingError:
            rejected += 1
            events.append(case.log[-1].describe())
        except (UnknownRole, ValueError) as exc:
            rejected += 1
            events.append(f"line {lineno}: {op} rejected: {exc}")
    if case is None:
        raise ScriptError("script never creates a case")
    if args.state:
        Path(args.state).write_text(case.dumps(), encoding="utf-8")
    if args.json:
        doc = {"events": events, "tasks": tasks, "rejected": rejected, "final": case.to_json()}
        print(json.dumps(doc, indent=2, sort_keys=True), file=out)
    else:
        for line in events:
            print(line, file=out)
        print(file=out)
        for e, rec in zip(table, case.records):
            accounts = ", ".join(sorted(rec.bound))
            print(f"{str(e.ref):<32} {rec.state.value:<10} {accounts}", file=out)
    return EXIT_REJECTED if rejected else EXIT_OK


_COMMANDS = {"parse": _cmd_parse, "verify": _cmd_verify, "compile": _cmd_compile, "simulate": _cmd_simulate}


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = _parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"rolebind: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PolicySyntaxError as exc:
        print(f"rolebind: syntax error at {exc.diagnostic}", file=sys.stderr)
        return EXIT_PARSE
    except (PolicyError, SchemaError, ScriptError) as exc:
        print(f"rolebind: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NetError as exc:
        print(f"rolebind: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


def main() -> None:
    sys.exit(run())

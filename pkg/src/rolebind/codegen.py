"""Smart-contract source generation for binding policies and task maps.

The emitted text follows Solidity syntax but is never compiled here. All
role masks come from :mod:`rolebind.core`, and the if-chains follow policy
statement order, so output is byte-stable for a given input.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import (
    MAX_ROLES,
    DnfConstraint,
    Kind,
    Polarity,
    Policy,
    RoleLimitExceeded,
    RoleTable,
    to_dnf,
)
from .process import ProcessDescriptor

PRAGMA = "pragma solidity ^0.5.0;"
HEADER = "// Generated by rolebind. Do not edit."
STATE_CODES = (("UNBOUND", 0), ("NOMINATED", 1), ("BOUND", 2), ("RELEASING", 3))


@dataclass(frozen=True)
class GeneratedContract:
    name: str
    source: str
    manifest: tuple[tuple[str, tuple[int, ...]], ...]
    file_name: str = ""

    def write(self, directory) -> Path:
        path = Path(directory) / self.file_name
        path.write_bytes(self.source.encode("utf-8"))
        return path

    def manifest_json(self) -> dict:
        return {
            "contract": self.name,
            "file": self.file_name,
            "functions": [{"name": fn, "masks": [str(m) for m in masks]} for fn, masks in self.manifest],
        }


def contract_name(name: str) -> str:
    ident = re.sub(r"[^A-Za-z0-9_]", "", name.title() if " " in name else name)
    if not ident or ident[0].isdigit():
        ident = "P" + ident
    return ident


def _bit(i: int) -> str:
    return f"(1 << {i})"


def _mask_expr(mask: int) -> str:
    bits = [i for i in range(MAX_ROLES) if mask >> i & 1]
    if len(bits) == 1:
        return _bit(bits[0])
    return "(" + " | ".join(_bit(i) for i in bits) + ")"


def _inclusion(var: str, dnf: DnfConstraint) -> str:
    return " || ".join(f"{var} & {_mask_expr(m)} == {_mask_expr(m)}" for m in dnf.masks)


class _Writer:
    def __init__(self):
        self.lines: list[str] = []
        self.depth = 0

    def __call__(self, text: str = "") -> None:
        self.lines.append(("    " * self.depth + text) if text else "")

    def open(self, text: str) -> None:
        self(text + " {")
        self.depth += 1

    def close(self) -> None:
        self.depth -= 1
        self("}")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class _Rules:
    """First statement per (nominator, nominee) pair, for one statement kind."""

    def __init__(self, policy: Policy, table: RoleTable, kind: Kind):
        self.pairs: list[tuple[int, int, object]] = []
        seen = set()
        for s in policy.statements:
            if s.kind is not kind:
                continue
            pair = (table.index(s.nominator), table.index(s.nominee))
            if pair in seen:
                continue
            seen.add(pair)
            self.pairs.append((*pair, s))
        keys: dict[int, int] = {}
        for nr, ne, _ in self.pairs:
            k = (1 << nr) | (1 << ne)
            keys[k] = keys.get(k, 0) + 1
        self._shared = {k for k, n in keys.items() if n > 1}

    def nominators(self) -> list[tuple[int, int]]:
        masks: dict[int, int] = {}
        for nr, ne, _ in self.pairs:
            masks[nr] = masks.get(nr, 0) | (1 << ne)
        return list(masks.items())

    def key_test(self, nr: int, ne: int) -> str:
        key = _mask_expr((1 << nr) | (1 << ne))
        test = f"((1 << rNominator) | (1 << rNominee)) == {key}"
        # (A, B) and (B, A) share a key; the nominator tells them apart.
        if (1 << nr) | (1 << ne) in self._shared:
            test += f" && rNominator == {nr}"
        return test


def _check_size(table: RoleTable) -> None:
    if len(table) > MAX_ROLES:
        raise RoleLimitExceeded(f"{len(table)} roles exceed the {MAX_ROLES}-bit word")


def _emit_can(w: _Writer, fn: str, rules: _Rules, manifest: list) -> None:
    w.open(f"function {fn}(uint rNominator, uint rNominee) public pure returns (bool)")
    used = []
    for nr, mask in rules.nominators():
        w(f"if (rNominator == {nr})")
        w(f"    return {mask} & (1 << rNominee) != 0;")
        used.append(mask)
    w("return false;")
    w.close()
    manifest.append((fn, tuple(used)))


def _emit_constraint(w: _Writer, fn: str, rules: _Rules, table: RoleTable, manifest: list) -> None:
    w.open(f"function {fn}(uint rNominator, uint rNominee, uint nomineeRoles) public pure returns (bool)")
    used = []
    for nr, ne, stmt in rules.pairs:
        bc = stmt.binding_constraint
        if bc is None:
            continue
        dnf = to_dnf(bc.expr, table)
        used += dnf.masks
        test = _inclusion("nomineeRoles", dnf)
        if bc.polarity is Polarity.NOT_IN:
            test = f"!({test})"
        w(f"if ({rules.key_test(nr, ne)})")
        w(f"    return {test};")
    w("return true;")
    w.close()
    manifest.append((fn, tuple(used)))


def _emit_vote(w: _Writer, fn: str, rules: _Rules, table: RoleTable, kind: Kind, manifest: list) -> None:
    if kind is Kind.NOMINATES:
        done, failed, pending = "BOUND", "UNBOUND", "NOMINATED"
    else:
        done, failed, pending = "UNBOUND", "BOUND", "RELEASING"
    w.open(
        f"function {fn}(uint rNominator, uint rNominee, uint endorserRoles, "
        "uint endorsedBy, uint rejectedBy, bool isAccepted) public pure returns (uint)"
    )
    used = []
    for nr, ne, stmt in rules.pairs:
        if stmt.endorsement is None:
            continue
        dnf = to_dnf(stmt.endorsement, table)
        used += dnf.masks
        w.open(f"if ({rules.key_test(nr, ne)})")
        w(f'require(endorserRoles & {dnf.support} != 0, "not an endorser");')
        w("uint voterRoles = endorserRoles & ~(endorsedBy | rejectedBy);")
        w(f'require(voterRoles & {dnf.support} != 0, "already voted");')
        w("if (isAccepted)")
        w("    endorsedBy = endorsedBy | voterRoles;")
        w("else")
        w("    rejectedBy = rejectedBy | voterRoles;")
        w("if (" + " || ".join(f"endorsedBy & {m} == {m}" for m in dnf.masks) + ")")
        w(f"    return {done};")
        w("if (" + " && ".join(f"rejectedBy & {m} != 0" for m in dnf.masks) + ")")
        w(f"    return {failed};")
        w(f"return {pending};")
        w.close()
    w('revert("no endorsement required");')
    w.close()
    manifest.append((fn, tuple(used)))


def gen_binding_policy(policy: Policy, table: RoleTable, name: str = "Policy") -> GeneratedContract:
    """Emit the BindingPolicy contract for ``policy``."""
    _check_size(table)
    cname = f"{contract_name(name)}_BindingPolicy"
    w = _Writer()
    w(HEADER)
    w(PRAGMA)
    w()
    w("// Role indices:")
    for e in table:
        flags = " (case-creator)" if e.is_case_creator else ""
        w(f"//   {e.index}: {e.ref}{flags}")
    w()
    w.open(f"contract {cname}")
    for state, code in STATE_CODES:
        w(f"uint constant {state} = {code};")
    manifest: list = []
    w()
    w.open("function isCaseCreator(uint rIndex) public pure returns (bool)")
    w(f"return {table.case_creator_mask} & (1 << rIndex) != 0;")
    w.close()
    manifest.append(("isCaseCreator", (table.case_creator_mask,)))
    for kind, prefix in ((Kind.NOMINATES, "N"), (Kind.RELEASES, "R")):
        rules = _Rules(policy, table, kind)
        w()
        _emit_can(w, "canNominate" if kind is Kind.NOMINATES else "canRelease", rules, manifest)
        w()
        _emit_constraint(w, f"assert{prefix}Constraint", rules, table, manifest)
        w()
        _emit_vote(w, f"assert{prefix}Vote", rules, table, kind, manifest)
    w.close()
    return GeneratedContract(cname, w.text(), tuple(manifest), f"{contract_name(name)}_BindingPolicy.sol")


def gen_task_role_map(process: ProcessDescriptor, table: RoleTable) -> GeneratedContract:
    """Emit the TaskRoleMap contract: task index (declaration order) to role index."""
    _check_size(table)
    cname = f"{contract_name(process.name)}_TaskRoleMap"
    w = _Writer()
    w(HEADER)
    w(PRAGMA)
    w()
    w.open(f"contract {cname}")
    w.open("function taskRole(uint taskIndex) public pure returns (uint)")
    mapping = []
    for i, task in enumerate(process.tasks):
        r = table.index(task.role)
        mapping.append(r)
        w(f"if (taskIndex == {i})")
        w(f"    return {r};  // {task.id} -> {task.role}")
    w('revert("unknown task");')
    w.close()
    w.close()
    manifest = (("taskRole", tuple(mapping)),)
    return GeneratedContract(cname, w.text(), manifest, f"{contract_name(process.name)}_TaskRoleMap.sol")


def compile_all(
    policy: Policy, table: RoleTable, process: ProcessDescriptor, name: Optional[str] = None
) -> list[GeneratedContract]:
    return [gen_binding_policy(policy, table, name or process.name), gen_task_role_map(process, table)]

"""Process descriptor: the task/role skeleton of a collaborative process.

The descriptor is a small JSON document standing in for a BPMN model::

    {"name": "Order2Cash",
     "subprocesses": ["Shipment"],
     "roles": [{"name": "Customer"}, {"name": "Candidate", "scope": "Shipment", "multi": true}],
     "tasks": [{"id": "Submit PO", "role": "Customer"}]}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from .core import Kind, Policy, RoleRef


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path


class UnknownTask(KeyError):
    def __str__(self) -> str:
        return f"unknown task {self.args[0]!r}"


@dataclass(frozen=True)
class Task:
    id: str
    role: RoleRef


@dataclass(frozen=True)
class ProcessDescriptor:
    name: str
    tasks: tuple[Task, ...]
    roles: tuple[tuple[RoleRef, bool], ...]
    subprocesses: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise SchemaError("/tasks", "task ids must be unique")
        declared = {r for r, _ in self.roles}
        for i, t in enumerate(self.tasks):
            if t.role not in declared:
                raise SchemaError(f"/tasks/{i}/role", f"role {t.role} is not declared")
        for i, (r, _) in enumerate(self.roles):
            if r.scope is not None and r.scope not in self.subprocesses:
                raise SchemaError(f"/roles/{i}/scope", f"scope {r.scope!r} is not a subprocess")

    @property
    def role_refs(self) -> list[RoleRef]:
        return [r for r, _ in self.roles]

    def task_index(self, task_id: str) -> int:
        for i, t in enumerate(self.tasks):
            if t.id == task_id:
                return i
        raise UnknownTask(task_id)


def _expect(node: Any, typ, path: str, what: str):
    if not isinstance(node, typ) or (typ is str and not node):
        raise SchemaError(path, f"expected {what}")
    return node


def _role_ref(name: str, scope: Optional[str], path: str) -> RoleRef:
    try:
        return RoleRef(scope, name)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def load_process(text) -> ProcessDescriptor:
    """Parse and validate descriptor JSON; errors carry a JSON-pointer path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None
    _expect(doc, dict, "", "an object")
    unknown = set(doc) - {"name", "subprocesses", "roles", "tasks"}
    if unknown:
        raise SchemaError("", f"unknown keys {sorted(unknown)}")
    name = _expect(doc.get("name"), str, "/name", "a non-empty string")

    subs = _expect(doc.get("subprocesses", []), list, "/subprocesses", "an array")
    for i, s in enumerate(subs):
        _expect(s, str, f"/subprocesses/{i}", "a non-empty string")
    if len(set(subs)) != len(subs):
        raise SchemaError("/subprocesses", "duplicate subprocess names")

    roles = []
    for i, r in enumerate(_expect(doc.get("roles"), list, "/roles", "an array")):
        path = f"/roles/{i}"
        _expect(r, dict, path, "an object")
        rname = _expect(r.get("name"), str, f"{path}/name", "a non-empty string")
        scope = r.get("scope")
        if scope is not None:
            _expect(scope, str, f"{path}/scope", "a non-empty string")
            if scope not in subs:
                raise SchemaError(f"{path}/scope", f"scope {scope!r} is not a subprocess")
        multi = r.get("multi", False)
        if not isinstance(multi, bool):
            raise SchemaError(f"{path}/multi", "expected a boolean")
        ref = _role_ref(rname, scope, path)
        if any(ref == other for other, _ in roles):
            raise SchemaError(path, f"duplicate role {ref}")
        roles.append((ref, multi))
    declared = {ref for ref, _ in roles}

    tasks = []
    seen_ids = set()
    for i, t in enumerate(_expect(doc.get("tasks"), list, "/tasks", "an array")):
        path = f"/tasks/{i}"
        _expect(t, dict, path, "an object")
        tid = _expect(t.get("id"), str, f"{path}/id", "a non-empty string")
        if tid in seen_ids:
            raise SchemaError(f"{path}/id", f"duplicate task id {tid!r}")
        seen_ids.add(tid)
        rname = _expect(t.get("role"), str, f"{path}/role", "a non-empty string")
        scope = t.get("scope")
        if scope is not None:
            _expect(scope, str, f"{path}/scope", "a non-empty string")
        ref = _role_ref(rname, scope, path)
        if ref not in declared:
            raise SchemaError(f"{path}/role", f"role {ref} is not declared")
        tasks.append(Task(tid, ref))

    return ProcessDescriptor(name, tuple(tasks), tuple(roles), tuple(subs))


def role_of_task(process: ProcessDescriptor, task_id: str) -> RoleRef:
    return process.tasks[process.task_index(task_id)].role


def cross_validate(policy: Policy, process: ProcessDescriptor) -> list[str]:
    """Human-readable misalignments between a policy and a process.

    An empty list means every process role can be bound, every policy role
    exists in the process and every statement scope is a declared
    subprocess.
    """
    diags = []
    nominated = {s.nominee for s in policy.statements if s.kind is Kind.NOMINATES}
    creators = set(policy.case_creators)
    for ref, _ in process.roles:
        if ref not in creators and ref not in nominated:
            diags.append(f"role {ref} has no nominator")
    declared = set(process.role_refs)
    for ref in policy.roles():
        if ref not in declared:
            diags.append(f"policy role {ref} is not declared by process {process.name}")
    reported = set()
    scopes = [s.scope for s in policy.statements] + [r.scope for r in policy.case_creators]
    for scope in scopes:
        if scope is not None and scope not in process.subprocesses and scope not in reported:
            reported.add(scope)
            diags.append(f"scope {scope!r} is not a subprocess of {process.name}")
    return diags

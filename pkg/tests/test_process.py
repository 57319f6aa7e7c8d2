from __future__ import annotations

import json
import random

import pytest

from conftest import load_fixture
from rolebind import RoleRef, cross_validate, load_process, parse_policy, role_of_task
from rolebind.process import SchemaError, UnknownTask

DOC = json.loads(load_fixture("order2cash.json"))


def doc_with(**changes) -> str:
    d = json.loads(json.dumps(DOC))
    d.update(changes)
    return json.dumps(d)


def test_load_fixture(o2c_process):
    p = o2c_process
    assert p.name == "Order2Cash"
    assert len(p.roles) == 8 and len(p.tasks) == 10
    assert (RoleRef("Shipment", "Candidate"), True) in p.roles
    assert role_of_task(p, "Ship Goods") == RoleRef("Shipment", "Carrier")
    assert role_of_task(p, "Submit PO") == RoleRef(None, "Customer")
    assert p.task_index("Review PO") == 1


def test_unknown_task(o2c_process):
    with pytest.raises(UnknownTask) as info:
        role_of_task(o2c_process, "Dance")
    assert str(info.value) == "unknown task 'Dance'"
    assert isinstance(info.value, KeyError)


@pytest.mark.parametrize(
    "text, path",
    [
        ("[1, 2]", ""),
        ("{not json", ""),
        (doc_with(name=""), "/name"),
        (doc_with(extra=1), ""),
        (doc_with(roles={}), "/roles"),
        (doc_with(roles=[{"name": "A", "scope": "Nowhere"}], tasks=[]), "/roles/0/scope"),
        (doc_with(roles=[{"name": "A", "multi": "yes"}], tasks=[]), "/roles/0/multi"),
        (doc_with(roles=[{"name": "A"}, {"name": "A"}], tasks=[]), "/roles/1"),
        (doc_with(roles=[{"name": "A"}], tasks=[{"id": "t", "role": "B"}]), "/tasks/0/role"),
        (doc_with(roles=[{"name": "A"}], tasks=[{"id": "t", "role": "A"}, {"id": "t", "role": "A"}]), "/tasks/1/id"),
        (doc_with(subprocesses=["S", "S"]), "/subprocesses"),
        (doc_with(roles=[{"name": "9lives"}], tasks=[]), "/roles/0"),
    ],
)
def test_schema_errors(text, path):
    with pytest.raises(SchemaError) as info:
        load_process(text)
    assert info.value.path == path


def test_order2cash_aligns_with_process(o2c, o2c_process):
    policy, _ = o2c
    assert cross_validate(policy, o2c_process) == []


def test_dropped_statement_is_reported(o2c_process):
    lines = [ln for ln in load_fixture("order2cash.pol").splitlines() if "nominates Carrier" not in ln]
    policy = parse_policy("\n".join(lines), o2c_process)
    diags = cross_validate(policy, o2c_process)
    assert "role Shipment::Carrier has no nominator" in diags


def test_misspelt_scope_is_reported(o2c_process):
    text = load_fixture("order2cash.pol").replace("Under Shipment, Supplier nominates Candidate", "Under Shipmnt, Supplier nominates Candidate")
    policy = parse_policy(text, o2c_process)
    diags = cross_validate(policy, o2c_process)
    assert "scope 'Shipmnt' is not a subprocess of Order2Cash" in diags
    assert "policy role Shipmnt::Candidate is not declared by process Order2Cash" in diags
    assert "role Shipment::Candidate has no nominator" in diags


def test_cross_validate_soundness():
    rng = random.Random(5)
    names = ["A", "B", "C", "D", "E"]
    for _ in range(300):
        used = rng.sample(names, rng.randint(2, 5))
        creator, rest = used[0], used[1:]
        stmts = [f"{rng.choice(used)} nominates {r};" for r in rest if rng.random() < 0.8]
        policy = parse_policy("{ " + f"{creator} is case-creator; " + " ".join(stmts) + " }")
        declared = rng.sample(names, rng.randint(1, 5))
        process = load_process(
            json.dumps({"name": "P", "roles": [{"name": n} for n in declared], "tasks": []})
        )
        if cross_validate(policy, process) == []:
            bindable = set(policy.case_creators) | {s.nominee for s in policy.nominations}
            assert {r for r, _ in process.roles} <= bindable
            assert set(policy.roles()) <= {r for r, _ in process.roles}

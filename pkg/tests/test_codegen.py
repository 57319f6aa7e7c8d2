from __future__ import annotations

import json
import random

import pytest

from conftest import GOLDENS, load_fixture
from oracles import check_contract_agreement, random_nomination_policy
from rolebind import build_role_table, gen_binding_policy, gen_task_role_map, parse_policy
from rolebind.codegen import compile_all, contract_name
from rolebind.core import MAX_ROLES, RoleEntry, RoleRef, RoleTable
from rolebind.symeval import EvalError, Revert, load

MIXED = """{
  A is case-creator;
  A nominates B endorsed-by A;
  B nominates A;
  A nominates C in B or D and E endorsed-by A and B or B and D;
  C nominates D not in A and B endorsed-by C or E;
  C nominates D endorsed-by A;
  B nominates E, endorsed-by (A or C) and (D or F);
  E nominates F in A;
  A releases B endorsed-by C and D or E;
  B releases C not in D;
  F releases A;
}"""


def compiled(text: str):
    policy = parse_policy(text)
    table = build_role_table(policy)
    return policy, table, gen_binding_policy(policy, table)


def test_nomination_mask_snippet():
    text = "{ R0 is case-creator; R0 nominates R1; R0 nominates R2; R0 nominates R3; R3 nominates R1; R3 nominates R2; }"
    policy, table, c = compiled(text)
    assert table.index(RoleRef(None, "R3")) == 3
    assert "        if (rNominator == 3)\n            return 6 & (1 << rNominee) != 0;\n" in c.source


def test_order2cash_goldens(o2c, o2c_process):
    policy, table = o2c
    first = compile_all(policy, table, o2c_process, "order2cash")
    fresh = parse_policy(load_fixture("order2cash.pol"), o2c_process)
    second = compile_all(fresh, build_role_table(fresh, o2c_process), o2c_process, "order2cash")
    for a, b in zip(first, second):
        assert a.source == b.source
        assert a.source.encode("utf-8") == (GOLDENS / a.file_name).read_bytes()
    manifest = json.loads((GOLDENS / "manifest.json").read_text())
    assert manifest["roles"][3] == "Shipment::Carrier"


def test_source_shape(o2c):
    src = gen_binding_policy(*o2c, name="order2cash").source
    assert src.startswith("// Generated by rolebind. Do not edit.\npragma solidity ^0.5.0;\n")
    assert "contract order2cash_BindingPolicy {" in src
    assert "//   3: Shipment::Carrier" in src
    assert src.count("uint constant") == 4


def test_interpreted_order2cash(o2c):
    policy, table = o2c
    c = load(gen_binding_policy(policy, table).source)
    assert c.call("isCaseCreator", 0) and not c.call("isCaseCreator", 1)
    assert c.call("canNominate", 1, 3)  # Supplier -> Carrier
    assert not c.call("canNominate", 0, 3)
    assert not c.call("canNominate", 7, 0)
    assert c.call("assertNConstraint", 1, 3, 1 << 2)
    assert not c.call("assertNConstraint", 1, 3, 1 << 1)
    assert c.call("assertNVote", 1, 3, 1, 0, 0, True) == c.constants["BOUND"]
    assert c.call("assertNVote", 1, 3, 1, 0, 0, False) == c.constants["UNBOUND"]
    assert c.call("assertNVote", 3, 4, 2, 0, 0, True) == c.constants["NOMINATED"]
    with pytest.raises(Revert, match="not an endorser"):
        c.call("assertNVote", 1, 3, 2, 0, 0, True)
    with pytest.raises(Revert, match="already voted"):
        c.call("assertNVote", 3, 4, 2, 2, 0, True)
    with pytest.raises(Revert, match="no endorsement required"):
        c.call("assertNVote", 0, 1, 1, 0, 0, True)
    assert not c.call("canRelease", 0, 1)


def test_task_role_map(o2c, o2c_process):
    _, table = o2c
    c = gen_task_role_map(o2c_process, table)
    assert c.name == "Order2Cash_TaskRoleMap"
    interp = load(c.source)
    for i, task in enumerate(o2c_process.tasks):
        assert interp.call("taskRole", i) == table.index(task.role)
    with pytest.raises(Revert, match="unknown task"):
        interp.call("taskRole", len(o2c_process.tasks))
    assert c.manifest == (("taskRole", (0, 1, 1, 2, 1, 3, 4, 5, 6, 7)),)


def test_reversed_pair_is_disambiguated():
    _, _, c = compiled(MIXED)
    assert "((1 << rNominator) | (1 << rNominee)) == ((1 << 0) | (1 << 1)) && rNominator == 0" in c.source


def test_mixed_policy_agrees_with_runtime():
    policy, table, c = compiled(MIXED)
    assert check_contract_agreement(policy, table, c.source) > 10_000


@pytest.mark.parametrize("seed", range(8))
def test_random_policies_agree_with_runtime(seed):
    policy = random_nomination_policy(random.Random(seed), max_roles=4)
    table = build_role_table(policy)
    assert check_contract_agreement(policy, table, gen_binding_policy(policy, table).source) > 0


def test_full_width_table():
    table = RoleTable(tuple(RoleEntry(RoleRef(None, f"R{i}"), i, i == 0) for i in range(MAX_ROLES)))
    text = "{ R0 is case-creator; R0 nominates R255 endorsed-by R254; }"
    c = load(gen_binding_policy(parse_policy(text), table).source)
    assert c.call("canNominate", 0, 255)
    assert c.call("assertNVote", 0, 255, 1 << 254, 0, 0, True) == 2


def test_contract_names():
    assert contract_name("Order2Cash") == "Order2Cash"
    assert contract_name("order to cash") == "OrderToCash"
    assert contract_name("2fast") == "P2fast"


def test_interpreter_precedence_and_errors():
    src = """pragma solidity ^0.5.0;
contract T {
    uint constant K = 4;
    function f(uint x) public pure returns (bool) {
        return x & K == K;
    }
    function g(uint x) public pure returns (uint) {
        uint y = ~x;
        if (x > 2) { return y & 255; } else return 1 << 255 >> 254;
    }
    function h(uint x) public pure returns (uint) {
        if (x == 0)
            return 1;
    }
}"""
    c = load(src)
    assert c.call("f", 4) and c.call("f", 5) and not c.call("f", 3)
    assert c.call("g", 3) == 252 and c.call("g", 0) == 2
    with pytest.raises(EvalError):
        c.call("h", 1)
    with pytest.raises(EvalError):
        c.call("f")
    with pytest.raises(EvalError):
        load("contract T { bogus }")

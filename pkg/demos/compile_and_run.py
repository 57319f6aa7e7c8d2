"""Generate the BindingPolicy contract and call it through the bundled interpreter."""
from __future__ import annotations

from pathlib import Path

from rolebind import build_role_table, compile_all, load_process, parse_policy
from rolebind.symeval import Revert, load

CODES = ("UNBOUND", "NOMINATED", "BOUND", "RELEASING")
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    process = load_process((FIXTURES / "order2cash.json").read_text())
    policy = parse_policy((FIXTURES / "order2cash.pol").read_text(), process)
    table = build_role_table(policy, process)
    binding, task_map = compile_all(policy, table, process)
    print(f"{binding.file_name}: {len(binding.source.splitlines())} lines")
    print(f"{task_map.file_name}: {len(task_map.source.splitlines())} lines")

    contract = load(binding.source)
    idx = {str(ref): i for i, ref in enumerate(table.refs)}
    customer, supplier = idx["Customer"], idx["Supplier"]
    candidate, carrier = idx["Shipment::Candidate"], idx["Shipment::Carrier"]

    print("Supplier may nominate a Carrier:", contract.call("canNominate", supplier, carrier))
    print("Customer may nominate a Carrier:", contract.call("canNominate", customer, carrier))
    ok = contract.call("assertNConstraint", supplier, carrier, 1 << candidate)
    bad = contract.call("assertNConstraint", supplier, carrier, 0)
    print(f"Carrier constraint: candidate -> {ok}, outsider -> {bad}")
    code = contract.call("assertNVote", supplier, carrier, 1 << customer, 0, 0, True)
    print(f"Customer accepts the Carrier: code {code} ({CODES[code]})")
    try:
        contract.call("assertNVote", supplier, carrier, 1 << supplier, 0, 0, True)
    except Revert as exc:
        print("Supplier vote reverts:", exc)


if __name__ == "__main__":
    main()

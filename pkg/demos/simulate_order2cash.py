"""Drive an order-to-cash case by hand: nominate, vote, reject and retry."""
from __future__ import annotations

from pathlib import Path

from rolebind import RoleRef, build_role_table, create_case, load_process, parse_policy
from rolebind.runtime import BindingError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    process = load_process((FIXTURES / "order2cash.json").read_text())
    policy = parse_policy((FIXTURES / "order2cash.pol").read_text(), process)
    case = create_case(policy, build_role_table(policy, process), "cust")

    supplier = RoleRef(None, "Supplier")
    candidate = RoleRef("Shipment", "Candidate")
    carrier = RoleRef("Shipment", "Carrier")

    print("Supplier:", case.nominate("cust", "sup", supplier).name)
    for acct in ("fast_freight", "slow_boat"):
        case.nominate("sup", acct, candidate)
    print("candidates bound:", sorted(case.record(candidate).bound))

    # a carrier must already be a candidate
    try:
        case.nominate("sup", "stranger", carrier)
    except BindingError as exc:
        print("rejected:", exc)

    print("Carrier nominated:", case.nominate("sup", "slow_boat", carrier).name)
    print("customer rejects:", case.vote("cust", carrier, accept=False).name)
    case.nominate("sup", "fast_freight", carrier)
    print("customer accepts retry:", case.vote("cust", carrier, accept=True).name)
    print("can fast_freight ship?", case.can_perform("fast_freight", "Ship Goods", process))
    print("can slow_boat ship?", case.can_perform("slow_boat", "Ship Goods", process))

    print(f"\n{len(case.log)} log entries; final states:")
    for role, state in case.states().items():
        print(f"  {str(role):32} {state.name}")


if __name__ == "__main__":
    main()

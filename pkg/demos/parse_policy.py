"""Parse the order-to-cash policy, print its canonical text and role table."""
from __future__ import annotations

from pathlib import Path

from rolebind import build_role_table, cross_validate, load_process, parse_policy, render_policy

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    process = load_process((FIXTURES / "order2cash.json").read_text())
    policy = parse_policy((FIXTURES / "order2cash.pol").read_text(), process)
    table = build_role_table(policy, process)

    print(render_policy(policy))
    for entry in table:
        flag = " (multi)" if entry.is_multi else ""
        print(f"  bit {entry.index}: {entry.ref}{flag}")
    issues = cross_validate(policy, process)
    print(f"\ncross-validation against {process.name}: {'clean' if not issues else issues}")


if __name__ == "__main__":
    main()

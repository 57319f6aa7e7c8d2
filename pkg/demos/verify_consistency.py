"""Check two small policies on the nomination net: one sound, one that deadlocks."""
from __future__ import annotations

from pathlib import Path

from rolebind import build_nomination_net, build_role_table, check_consistency, parse_policy

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def report(name: str) -> None:
    policy = parse_policy((FIXTURES / name).read_text())
    net = build_nomination_net(policy, build_role_table(policy))
    result = check_consistency(net)
    print(f"{name}: {len(net.places)} places, {len(net.transitions)} transitions, {len(net.arcs)} arcs")
    print(f"  explored {result.reachable_markings} markings")
    if result.consistent:
        print("  CONSISTENT: every reachable marking can still bind all roles")
    else:
        print(f"  INCONSISTENT after {list(result.trace)}")
        print(f"  stuck at {result.stuck_marking}")


if __name__ == "__main__":
    report("endorsed_chain.pol")
    report("mutual_endorsement.pol")

"""Brute-force reference implementations shared by the test modules.

None of these reuse the mask arithmetic under test: constraints are
evaluated from their syntax trees over explicit truth tables, nets are
explored by plain set search, and the runtime is driven only through its
public operations.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import replace
from itertools import product
from typing import Iterable, Optional

from rolebind import (
    And,
    BindingStatement,
    Kind,
    Or,
    Outcome,
    Policy,
    Role,
    RoleRef,
    RoleTable,
)
from rolebind import binding_check
from rolebind.core import RoleEntry, evaluate
from rolebind.runtime import (
    AlreadyVoted,
    BindingError,
    CaseState,
    ConstraintViolated,
    NotAnEndorser,
    NotAuthorized,
    State,
    create_case,
)
from rolebind.symeval import Revert
from rolebind.symeval import load as load_contract


def refs(n: int, scope: Optional[str] = None) -> list[RoleRef]:
    return [RoleRef(scope, f"R{i}") for i in range(n)]


# -- set expressions --------------------------------------------------------


def truth_table(expr, universe: list[RoleRef]) -> list[bool]:
    """``tt[a]`` is the value of ``expr`` when role ``i`` is present iff bit ``i`` of ``a``."""
    return [
        evaluate(expr, {r: bool(a >> i & 1) for i, r in enumerate(universe)})
        for a in range(1 << len(universe))
    ]


def outcome_oracle(tt: list[bool], n: int, endorsed: int, rejected: int) -> Outcome:
    """Classify a vote state by enumerating every completion of the open roles."""
    free = [i for i in range(n) if not (endorsed | rejected) >> i & 1]
    values = set()
    for bits in product((0, 1), repeat=len(free)):
        a = endorsed
        for i, on in zip(free, bits):
            a |= on << i
        values.add(tt[a])
    if values == {True}:
        return Outcome.SATISFIED
    if values == {False}:
        return Outcome.UNSATISFIABLE
    return Outcome.PENDING


def vote_states(n: int) -> Iterable[tuple[int, int]]:
    """Every (endorsed, rejected) pair of disjoint masks over ``n`` roles."""
    for digits in product((0, 1, 2), repeat=n):
        e = r = 0
        for i, d in enumerate(digits):
            if d == 1:
                e |= 1 << i
            elif d == 2:
                r |= 1 << i
        yield e, r


def _tree(rng: random.Random, leaves: list, op):
    if len(leaves) == 1:
        return leaves[0]
    k = rng.randrange(1, len(leaves))
    return op(_tree(rng, leaves[:k], op), _tree(rng, leaves[k:], op))


def random_dnf_expr(rng: random.Random, universe: list[RoleRef], max_sets: int = 4, max_size: int = 3):
    """A random or-of-ands over ``universe`` with random association."""
    sets = []
    for _ in range(rng.randint(1, max_sets)):
        members = rng.sample(universe, rng.randint(1, min(max_size, len(universe))))
        sets.append(_tree(rng, [Role(r) for r in members], And))
    return _tree(rng, sets, Or)


def random_expr(rng: random.Random, universe: list[RoleRef], depth: int = 3):
    """An arbitrary and/or tree, not necessarily in DNF shape."""
    if depth == 0 or rng.random() < 0.3:
        return Role(rng.choice(universe))
    op = And if rng.random() < 0.5 else Or
    return op(random_expr(rng, universe, depth - 1), random_expr(rng, universe, depth - 1))


def brute_minimal_sets(tt: list[bool], n: int) -> set[int]:
    """Minimal true points of a monotone truth table."""
    true = [a for a in range(1 << n) if tt[a]]
    return {a for a in true if not any(b != a and b & a == b for b in true)}


# -- nomination-only policies -----------------------------------------------


def random_nomination_policy(rng: random.Random, max_roles: int = 8, max_sets: int = 2) -> Policy:
    """Root-scoped policy with one nominating statement per nominated role."""
    n = rng.randint(1, max_roles)
    rs = refs(n)
    creators = [rs[0]] + [r for r in rs[1:] if rng.random() < 0.15]
    stmts = []
    for r in rs:
        if r in creators or rng.random() < 0.1:
            continue
        nominator = rng.choice(rs)
        endorsement = None
        if rng.random() < 0.6:
            endorsement = random_dnf_expr(rng, rs, max_sets=max_sets, max_size=3)
        stmts.append(BindingStatement(None, Kind.NOMINATES, nominator, r, None, endorsement))
    rng.shuffle(stmts)
    return Policy(tuple(creators), tuple(stmts))


def net_projections(graph, net) -> set[tuple[str, ...]]:
    """Role-state tuples of the stable reachable markings.

    A role without endorsement moves UNBOUND -> BOUND in one runtime step,
    while the net passes through ``n_r`` and an always-enabled ``en_r``.
    That ``en_r`` is treated as internal: markings still holding such an
    ``n_r`` token are skipped, since each one reaches a stable marking.
    """
    transient = [
        n for ref, (_, n, _) in net.role_places if n.replace("n_", "disj_", 1) not in net.places
    ]
    out = set()
    for i in range(len(graph.states)):
        m = graph.marking(i)
        if not any(m[n] for n in transient):
            out.add(tuple(net.role_state(m).values()))
    return out


def _runtime_key(case: CaseState) -> tuple:
    return tuple(
        (rec.state, frozenset(rec.bound), rec.pending, rec.endorsed_by, rec.rejected_by)
        for rec in case.records
    )


def runtime_projections(policy: Policy, table: RoleTable, limit: int = 200_000) -> set[tuple[str, ...]]:
    """Role-state tuples reachable by nominating fresh accounts and accepting votes.

    Every account is either the creator or the single account nominated for
    one role, named after that role, so search stays finite.
    """
    start = create_case(policy, table, "creator")
    seen = {_runtime_key(start)}
    queue = deque([start])
    out = set()
    while queue:
        case = queue.popleft()
        out.add(tuple(rec.state.value for rec in case.records))
        accounts = sorted({a for rec in case.records for a in rec.bound})
        moves = []
        for i, rec in enumerate(case.records):
            role = table.ref(i)
            if rec.state is State.UNBOUND:
                moves += [("nominate", a, f"acct{i}", role) for a in accounts]
            elif rec.state is State.NOMINATED:
                moves += [("vote", a, None, role) for a in accounts]
        for op, actor, subject, role in moves:
            nxt = case.clone(keep_log=False)
            try:
                if op == "nominate":
                    nxt.nominate(actor, subject, role)
                else:
                    nxt.vote(actor, role, True)
            except BindingError:
                continue
            key = _runtime_key(nxt)
            if key not in seen:
                if len(seen) >= limit:
                    raise RuntimeError("runtime search exceeded its limit")
                seen.add(key)
                queue.append(nxt)
    return out



# -- generated contract vs runtime ---------------------------------------------

_CODES = {0: State.UNBOUND, 1: State.NOMINATED, 2: State.BOUND, 3: State.RELEASING}
_REVERTS = {"not an endorser": NotAnEndorser, "already voted": AlreadyVoted}


def _bits(mask: int):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def _holding(policy: Policy, table: RoleTable, holdings: dict[str, int]) -> CaseState:
    """A case where each account holds exactly the roles of its mask."""
    case = CaseState(policy, table)
    for account, mask in holdings.items():
        for i in _bits(mask):
            case.records[i].bound.add(account)
            case.records[i].state = State.BOUND
    return case


def _contract_call(contract, fn: str, *args):
    try:
        return contract.call(fn, *args)
    except Revert as exc:
        return exc


def _runtime_call(fn):
    try:
        return fn()
    except BindingError as exc:
        return exc


def _same_vote(contract_result, runtime_result) -> bool:
    if isinstance(contract_result, Revert):
        expected = _REVERTS.get(str(contract_result))
        return expected is not None and isinstance(runtime_result, expected)
    return runtime_result is _CODES[contract_result]


def _dnf_passing(case: CaseState, stmt_index: int, universe: int, excluded: int) -> Optional[int]:
    bc = case._bindings[stmt_index]
    for m in range(universe + 1):
        if m & excluded == 0 and (bc is None or binding_check(bc, m)):
            return m
    return None


def check_contract_agreement(policy: Policy, table: RoleTable, source: str, kinds=("N", "R")) -> int:
    """Compare the interpreted contract with the runtime on every small input.

    Roles are treated as multi-instance on the runtime side so that one
    account can hold any combination of roles. Returns the number of
    compared calls; raises ``AssertionError`` on the first disagreement.
    """
    contract = load_contract(source)
    mtable = RoleTable(tuple(RoleEntry(e.ref, e.index, e.is_case_creator, True) for e in table))
    n = len(table)
    full = (1 << n) - 1
    checks = 0
    for kind in kinds:
        can, constraint, vote = (
            ("canNominate", "assertNConstraint", "assertNVote")
            if kind == "N"
            else ("canRelease", "assertRConstraint", "assertRVote")
        )
        for nr in range(n):
            for ne in range(n):
                ne_bit = 1 << ne
                ref = table.ref(ne)
                # authorisation
                if kind == "N":
                    case = _holding(policy, mtable, {"nr": 1 << nr})
                    got = _runtime_call(lambda: case.nominate("nr", "x", ref))
                else:
                    case = _holding(policy, mtable, {"nr": 1 << nr, "x": ne_bit})
                    got = _runtime_call(lambda: case.release("nr", ref, "x"))
                allowed = contract.call(can, nr, ne)
                assert allowed == (not isinstance(got, NotAuthorized)), (kind, nr, ne, got)
                checks += 1
                if not allowed:
                    continue
                # binding constraint over every combination of subject roles
                for m in range(full + 1):
                    if m & ne_bit:
                        continue
                    subject = m if kind == "N" else m | ne_bit
                    if kind == "N":
                        case = _holding(policy, mtable, {"nr": 1 << nr, "x": m})
                        got = _runtime_call(lambda: case.nominate("nr", "x", ref))
                    else:
                        case = _holding(policy, mtable, {"nr": 1 << nr, "x": subject})
                        got = _runtime_call(lambda: case.release("nr", ref, "x"))
                    ok = contract.call(constraint, nr, ne, subject)
                    assert ok == (not isinstance(got, ConstraintViolated)), (kind, nr, ne, m, got)
                    checks += 1
                if nr == ne:
                    continue
                idx = case._statements(
                    Kind.NOMINATES if kind == "N" else Kind.RELEASES, ref, 1 << nr
                )[0]
                m = _dnf_passing(case, idx, full, ne_bit)
                if m is None:
                    continue
                subject = m if kind == "N" else m | ne_bit
                if case._endorsements[idx] is None:
                    res = _contract_call(contract, vote, nr, ne, 0, 0, 0, True)
                    assert isinstance(res, Revert) and str(res) == "no endorsement required"
                    checks += 1
                    continue
                # votes: every voter mask, every disjoint prior vote state
                others = [i for i in range(n) if i != ne]
                for voter in range(1 << len(others)):
                    vmask = sum(1 << others[k] for k in _bits(voter))
                    base = _holding(policy, mtable, {"nr": 1 << nr, "x": subject, "v": vmask})
                    if kind == "N":
                        base.nominate("nr", "x", ref)
                    else:
                        base.release("nr", ref, "x")
                    rec = base.records[ne]
                    for e_local, r_local in vote_states(len(others)):
                        e = sum(1 << others[k] for k in _bits(e_local))
                        r = sum(1 << others[k] for k in _bits(r_local))
                        for accept in (True, False):
                            expected = _contract_call(contract, vote, nr, ne, vmask, e, r, accept)
                            case = base.clone(keep_log=False)
                            case.records[ne] = replace(rec, bound=set(rec.bound), endorsed_by=e, rejected_by=r)
                            got = _runtime_call(lambda: case.vote("v", ref, accept))
                            assert _same_vote(expected, got), (kind, nr, ne, vmask, e, r, accept, expected, got)
                            checks += 1
    return checks


__all__ = [
    "brute_minimal_sets",
    "check_contract_agreement",
    "net_projections",
    "outcome_oracle",
    "random_dnf_expr",
    "random_expr",
    "random_nomination_policy",
    "refs",
    "runtime_projections",
    "truth_table",
    "vote_states",
]

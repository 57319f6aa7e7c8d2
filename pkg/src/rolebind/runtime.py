"""Per-case role lifecycle: nominate, vote, release and task gating.

A :class:`CaseState` holds one :class:`RoleBindingRecord` per role of the
table. Every operation, accepted or rejected, is appended to the case log;
replaying the log against a fresh case reproduces the same state.
"""
from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .core import (
    DnfConstraint,
    Kind,
    Outcome,
    Policy,
    RoleRef,
    RoleTable,
    UnknownRole,
    binding_check,
    endorsement_outcome,
    to_dnf,
)
from .process import ProcessDescriptor, role_of_task


class State(enum.Enum):
    UNBOUND = "UNBOUND"
    NOMINATED = "NOMINATED"
    BOUND = "BOUND"
    RELEASING = "RELEASING"


U, N, B, R = State.UNBOUND, State.NOMINATED, State.BOUND, State.RELEASING

# Edges of the role lifecycle. BOUND->BOUND and BOUND->NOMINATED only occur
# for multi-instance roles gaining or losing one of several accounts.
LIFECYCLE = frozenset(
    {(U, N), (U, B), (N, N), (N, B), (N, U), (B, R), (B, U), (R, R), (R, B), (R, U), (B, B), (B, N)}
)


class BindingError(Exception):
    """An operation rejected by the binding runtime."""


class NotAuthorized(BindingError):
    pass


class ConstraintViolated(BindingError):
    pass


class WrongState(BindingError):
    pass


class UnknownAccount(BindingError):
    pass


class NotAnEndorser(BindingError):
    pass


class AlreadyVoted(BindingError):
    pass


class TargetNotBound(BindingError):
    pass


@dataclass
class RoleBindingRecord:
    state: State = State.UNBOUND
    bound: set[str] = field(default_factory=set)
    pending: Optional[str] = None
    endorsed_by: int = 0
    rejected_by: int = 0
    pending_constraint: Optional[DnfConstraint] = None
    pending_statement: Optional[int] = None

    def clear_pending(self) -> None:
        self.pending = None
        self.endorsed_by = self.rejected_by = 0
        self.pending_constraint = None
        self.pending_statement = None

    def check(self, multi: bool) -> None:
        under_vote = self.state in (N, R)
        assert under_vote == (self.pending is not None) == (self.pending_constraint is not None)
        assert self.endorsed_by & self.rejected_by == 0
        if not under_vote:
            assert self.endorsed_by == self.rejected_by == 0
        if self.state is B:
            assert self.bound
        if not multi:
            assert len(self.bound) <= 1
            if self.state in (U, N):
                assert not self.bound

    def to_json(self) -> dict[str, Any]:
        pc = self.pending_constraint
        return {
            "state": self.state.value,
            "bound": sorted(self.bound),
            "pending": self.pending,
            "endorsedBy": str(self.endorsed_by),
            "rejectedBy": str(self.rejected_by),
            "pendingConstraint": None if pc is None else [str(m) for m in pc.masks],
            "pendingStatement": self.pending_statement,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "RoleBindingRecord":
        pc = doc.get("pendingConstraint")
        return cls(
            State(doc["state"]),
            set(doc.get("bound", ())),
            doc.get("pending"),
            int(doc.get("endorsedBy", "0")),
            int(doc.get("rejectedBy", "0")),
            None if pc is None else DnfConstraint(tuple(int(m) for m in pc)),
            doc.get("pendingStatement"),
        )


@dataclass(frozen=True)
class LogEntry:
    seq: int
    op: str
    args: dict[str, Any]
    outcome: str
    before: Optional[str] = None
    after: Optional[str] = None
    endorsed_by: int = 0
    rejected_by: int = 0
    message: str = ""

    @property
    def accepted(self) -> bool:
        return not self.outcome.startswith("rejected:")

    def to_json(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "op": self.op,
            "args": dict(self.args),
            "outcome": self.outcome,
            "from": self.before,
            "to": self.after,
            "endorsedBy": str(self.endorsed_by),
            "rejectedBy": str(self.rejected_by),
            "message": self.message,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "LogEntry":
        return cls(
            doc["seq"],
            doc["op"],
            dict(doc["args"]),
            doc["outcome"],
            doc.get("from"),
            doc.get("to"),
            int(doc.get("endorsedBy", "0")),
            int(doc.get("rejectedBy", "0")),
            doc.get("message", ""),
        )

    def describe(self) -> str:
        args = " ".join(f"{k}={v}" for k, v in self.args.items())
        text = f"#{self.seq} {self.op} {args} -> {self.outcome}"
        if self.before is not None and self.accepted:
            text += f" ({self.before} -> {self.after})"
        if self.message:
            text += f": {self.message}"
        return text


def _account(value: Any) -> str:
    if not isinstance(value, str) or not value.strip():
        raise UnknownAccount(f"invalid account {value!r}")
    return value


class CaseState:
    """Mutable binding state of one case; callers serialise access."""

    def __init__(self, policy: Policy, table: RoleTable, case_id: str = "case-1"):
        self.policy = policy
        self.table = table
        self.case_id = case_id
        self.records = [RoleBindingRecord() for _ in table]
        self.log: list[LogEntry] = []
        self._endorsements = [
            None if s.endorsement is None else to_dnf(s.endorsement, table)
            for s in policy.statements
        ]
        self._bindings = [
            None
            if s.binding_constraint is None
            else (s.binding_constraint.polarity, to_dnf(s.binding_constraint.expr, table))
            for s in policy.statements
        ]

    # -- queries -------------------------------------------------------------
    def record(self, role: RoleRef) -> RoleBindingRecord:
        return self.records[self.table.index(role)]

    def state_of(self, role: RoleRef) -> State:
        return self.record(role).state

    def roles_of(self, account: str) -> int:
        """Bitmask of roles the account is currently bound to."""
        mask = 0
        for i, rec in enumerate(self.records):
            if account in rec.bound:
                mask |= 1 << i
        return mask

    def states(self) -> dict[RoleRef, State]:
        return {e.ref: rec.state for e, rec in zip(self.table, self.records)}

    def can_perform(self, account: str, task_id: str, process: ProcessDescriptor) -> bool:
        """True iff ``account`` currently holds the role of ``task_id``."""
        role = role_of_task(process, task_id)
        rec = self.record(role)
        return rec.state is not U and account in rec.bound

    # -- statement lookup ----------------------------------------------------
    def _statements(self, kind: Kind, role: RoleRef, holder_mask: int) -> list[int]:
        """Indices of statements authorising an account with ``holder_mask``.

        Only the first statement for each (nominator, nominee) pair counts,
        matching the one-conditional-per-pair generated contract.
        """
        seen = set()
        out = []
        for i, s in enumerate(self.policy.statements):
            if s.kind is not kind or s.nominee != role or s.nominator in seen:
                continue
            seen.add(s.nominator)
            if holder_mask & self.table.bit(s.nominator):
                out.append(i)
        return out

    def _pick(self, kind: Kind, role: RoleRef, actor: str, subject: str) -> int:
        candidates = self._statements(kind, role, self.roles_of(actor))
        if not candidates:
            raise NotAuthorized(f"{actor} holds no role that {kind.value} {role}")
        subject_roles = self.roles_of(subject)
        for i in candidates:
            bc = self._bindings[i]
            if bc is None or binding_check(bc, subject_roles):
                return i
        raise ConstraintViolated(f"binding constraint for {role} fails for {subject}")

    # -- operations ----------------------------------------------------------
    def _run(self, op: str, role: Optional[RoleRef], args: dict[str, Any], fn) -> State:
        rec = self.record(role) if role is not None else None
        before = rec.state.value if rec else None
        try:
            new_state = fn()
        except BindingError as exc:
            self.log.append(
                LogEntry(len(self.log), op, args, f"rejected:{type(exc).__name__}", before, before,
                         message=str(exc))
            )
            raise
        if rec is not None:
            edge = (State(before), rec.state)
            assert edge in LIFECYCLE, f"illegal lifecycle edge {edge}"
            rec.check(self.table.entry(role).is_multi)
        self.log.append(
            LogEntry(
                len(self.log),
                op,
                args,
                new_state.value,
                before,
                rec.state.value if rec else None,
                rec.endorsed_by if rec else 0,
                rec.rejected_by if rec else 0,
            )
        )
        return new_state

    def nominate(self, nominator: str, nominee: str, role: RoleRef) -> State:
        """Request that ``nominee`` be bound to ``role``; returns the new state."""
        args = {"role": str(role), "nominator": nominator, "nominee": nominee}
        self.table.index(role)

        def apply() -> State:
            _account(nominator)
            _account(nominee)
            rec = self.record(role)
            multi = self.table.entry(role).is_multi
            if rec.state in (N, R):
                raise WrongState(f"{role} already has a pending {rec.state.value.lower()} request")
            if rec.state is B and not multi:
                raise WrongState(f"{role} is already bound")
            if nominee in rec.bound:
                raise WrongState(f"{nominee} is already bound to {role}")
            i = self._pick(Kind.NOMINATES, role, nominator, nominee)
            eex = self._endorsements[i]
            if eex is None:
                rec.bound.add(nominee)
                rec.state = B
            else:
                rec.state = N
                rec.pending = nominee
                rec.pending_constraint = eex
                rec.pending_statement = i
                rec.endorsed_by = rec.rejected_by = 0
            return rec.state

        return self._run("nominate", role, args, apply)

    def release(self, requester: str, role: RoleRef, target: str) -> State:
        """Request that ``target`` be unbound from ``role``; returns the new state."""
        args = {"role": str(role), "requester": requester, "target": target}
        self.table.index(role)

        def apply() -> State:
            _account(requester)
            _account(target)
            rec = self.record(role)
            if rec.state is not B:
                raise WrongState(f"{role} is {rec.state.value}, not BOUND")
            if target not in rec.bound:
                raise TargetNotBound(f"{target} is not bound to {role}")
            i = self._pick(Kind.RELEASES, role, requester, target)
            eex = self._endorsements[i]
            if eex is None:
                rec.bound.discard(target)
                rec.state = B if rec.bound else U
            else:
                rec.state = R
                rec.pending = target
                rec.pending_constraint = eex
                rec.pending_statement = i
                rec.endorsed_by = rec.rejected_by = 0
            return rec.state

        return self._run("release", role, args, apply)

    def vote(self, voter: str, role: RoleRef, accept: bool) -> State:
        """Accept or reject the pending request on ``role``; returns the new state."""
        args = {"role": str(role), "voter": voter, "accept": bool(accept)}
        self.table.index(role)

        def apply() -> State:
            _account(voter)
            rec = self.record(role)
            if rec.state not in (N, R):
                raise WrongState(f"{role} has no pending request")
            support = rec.pending_constraint.support
            held = self.roles_of(voter)
            if not held & support:
                raise NotAnEndorser(f"{voter} holds no endorsing role for {role}")
            fresh = held & ~(rec.endorsed_by | rec.rejected_by)
            if not fresh & support:
                raise AlreadyVoted(f"{voter}'s roles have already voted on {role}")
            if accept:
                rec.endorsed_by |= fresh
            else:
                rec.rejected_by |= fresh
            outcome = endorsement_outcome(rec.pending_constraint, rec.endorsed_by, rec.rejected_by)
            if outcome is Outcome.PENDING:
                return rec.state
            if rec.state is N:
                if outcome is Outcome.SATISFIED:
                    rec.bound.add(rec.pending)
                rec.state = B if rec.bound else U
            else:
                if outcome is Outcome.SATISFIED:
                    rec.bound.discard(rec.pending)
                rec.state = B if rec.bound else U
            rec.clear_pending()
            return rec.state

        return self._run("vote", role, args, apply)

    def clone(self, keep_log: bool = True) -> "CaseState":
        """Independent copy; ``keep_log=False`` starts the copy with an empty log."""
        other = copy.copy(self)
        other.records = [replace(r, bound=set(r.bound)) for r in self.records]
        other.log = list(self.log) if keep_log else []
        return other

    # -- serialisation -------------------------------------------------------
    def to_json(self) -> dict[str, Any]:
        return {
            "case": self.case_id,
            "roles": [
                {"role": str(e.ref), "index": e.index, **rec.to_json()}
                for e, rec in zip(self.table, self.records)
            ],
            "log": [entry.to_json() for entry in self.log],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, policy: Policy, table: RoleTable, doc: dict[str, Any]) -> "CaseState":
        case = cls(policy, table, doc["case"])
        roles = doc["roles"]
        if [r["role"] for r in roles] != [str(ref) for ref in table.refs]:
            raise ValueError("state snapshot does not match the role table")
        case.records = [RoleBindingRecord.from_json(r) for r in roles]
        case.log = [LogEntry.from_json(e) for e in doc["log"]]
        for e, rec in zip(table, case.records):
            rec.check(e.is_multi)
        return case


def create_case(policy: Policy, table: RoleTable, creator: str, case_id: str = "case-1") -> CaseState:
    """Start a case with every case-creator role bound to ``creator``."""
    _account(creator)
    case = CaseState(policy, table, case_id)
    for entry in table:
        if entry.is_case_creator:
            rec = case.records[entry.index]
            rec.bound.add(creator)
            rec.state = B
    case.log.append(LogEntry(0, "create", {"creator": creator}, "ok"))
    return case


def apply_entry(case: CaseState, entry: LogEntry) -> None:
    """Re-run one logged operation, swallowing the rejection it recorded."""
    a = entry.args
    try:
        if entry.op == "nominate":
            case.nominate(a["nominator"], a["nominee"], RoleRef.parse(a["role"]))
        elif entry.op == "release":
            case.release(a["requester"], RoleRef.parse(a["role"]), a["target"])
        elif entry.op == "vote":
            case.vote(a["voter"], RoleRef.parse(a["role"]), a["accept"])
        else:
            raise ValueError(f"cannot replay operation {entry.op!r}")
    except BindingError:
        if entry.accepted:
            raise


def replay(policy: Policy, table: RoleTable, log: list[LogEntry], case_id: str = "case-1") -> CaseState:
    if not log or log[0].op != "create":
        raise ValueError("a case log starts with its creation entry")
    case = create_case(policy, table, log[0].args["creator"], case_id)
    for entry in log[1:]:
        apply_entry(case, entry)
    return case


__all__ = [
    "AlreadyVoted",
    "BindingError",
    "CaseState",
    "ConstraintViolated",
    "LIFECYCLE",
    "LogEntry",
    "NotAnEndorser",
    "NotAuthorized",
    "RoleBindingRecord",
    "State",
    "TargetNotBound",
    "UnknownAccount",
    "UnknownRole",
    "WrongState",
    "apply_entry",
    "create_case",
    "replay",
]

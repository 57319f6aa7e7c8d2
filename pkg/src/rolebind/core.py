"""Policy data model, scoped role table and DNF bitmask rules.

Everything here is immutable. The verifier, the runtime and the code
generator all evaluate constraints through :func:`to_dnf`,
:func:`endorsement_outcome` and :func:`binding_check`, so a mask computed
here is the mask used everywhere.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

MAX_ROLES = 256
WORD_MASK = (1 << MAX_ROLES) - 1

_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*(?: [A-Za-z0-9_]+)*$")


class PolicyError(Exception):
    """Base class for policy-level errors."""


class RoleLimitExceeded(PolicyError):
    pass


class ScopeResolutionError(PolicyError):
    pass


class UnknownRole(PolicyError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "unknown role"


class OverlapError(PolicyError, ValueError):
    pass


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class RoleRef:
    """A role name, optionally qualified by the sub-process it lives in."""

    scope: Optional[str]
    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise ValueError(f"invalid role name {self.name!r}")
        if self.scope is not None and not _NAME_RE.match(self.scope):
            raise ValueError(f"invalid scope name {self.scope!r}")

    @classmethod
    def parse(cls, text: str) -> "RoleRef":
        """Read the ``Scope::Name`` notation used by scripts and reports."""
        if "::" in text:
            scope, name = text.split("::", 1)
            return cls(scope.strip(), name.strip())
        return cls(None, text.strip())

    def __str__(self) -> str:
        return self.name if self.scope is None else f"{self.scope}::{self.name}"


@dataclass(frozen=True)
class Role:
    ref: RoleRef


@dataclass(frozen=True)
class And:
    left: "SetExpr"
    right: "SetExpr"


@dataclass(frozen=True)
class Or:
    left: "SetExpr"
    right: "SetExpr"


SetExpr = Union[Role, And, Or]


def expr_roles(expr: SetExpr) -> Iterator[RoleRef]:
    """Yield role references left to right, duplicates included."""
    if isinstance(expr, Role):
        yield expr.ref
    else:
        yield from expr_roles(expr.left)
        yield from expr_roles(expr.right)


def map_roles(expr: SetExpr, fn) -> SetExpr:
    if isinstance(expr, Role):
        return Role(fn(expr.ref))
    return type(expr)(map_roles(expr.left, fn), map_roles(expr.right, fn))


def evaluate(expr: SetExpr, present: Mapping[RoleRef, bool]) -> bool:
    """Plain boolean evaluation; the reference semantics for DNF tests."""
    if isinstance(expr, Role):
        return bool(present.get(expr.ref, False))
    if isinstance(expr, And):
        return evaluate(expr.left, present) and evaluate(expr.right, present)
    return evaluate(expr.left, present) or evaluate(expr.right, present)


class Kind(enum.Enum):
    NOMINATES = "nominates"
    RELEASES = "releases"


class Polarity(enum.Enum):
    IN = "in"
    NOT_IN = "not in"


@dataclass(frozen=True)
class BindingConstraint:
    polarity: Polarity
    expr: SetExpr


@dataclass(frozen=True)
class BindingStatement:
    scope: Optional[str]
    kind: Kind
    nominator: RoleRef
    nominee: RoleRef
    binding_constraint: Optional[BindingConstraint] = None
    endorsement: Optional[SetExpr] = None

    def roles(self) -> Iterator[RoleRef]:
        """Mention order: nominator, nominee, binding roles, endorsers."""
        yield self.nominator
        yield self.nominee
        if self.binding_constraint is not None:
            yield from expr_roles(self.binding_constraint.expr)
        if self.endorsement is not None:
            yield from expr_roles(self.endorsement)


@dataclass(frozen=True)
class Policy:
    case_creators: tuple[RoleRef, ...]
    statements: tuple[BindingStatement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "case_creators", tuple(self.case_creators))
        object.__setattr__(self, "statements", tuple(self.statements))
        if not self.case_creators:
            raise PolicyError("a policy needs at least one case-creator role")

    @property
    def nominations(self) -> tuple[BindingStatement, ...]:
        return tuple(s for s in self.statements if s.kind is Kind.NOMINATES)

    @property
    def releases(self) -> tuple[BindingStatement, ...]:
        return tuple(s for s in self.statements if s.kind is Kind.RELEASES)

    def roles(self) -> list[RoleRef]:
        """Every role reference in first-mention order, without duplicates."""
        seen: dict[RoleRef, None] = {}
        for ref in self.case_creators:
            seen.setdefault(ref, None)
        for stmt in self.statements:
            for ref in stmt.roles():
                seen.setdefault(ref, None)
        return list(seen)


# --------------------------------------------------------------------------
# Scope resolution


def resolve_scopes(policy: Policy, declared: Iterable[RoleRef] = ()) -> Policy:
    """Re-qualify every role reference in ``policy`` from its bare name.

    The nominee of a ``nominates`` statement and every case-creator live in
    the statement's scope; together with ``declared`` (roles from a process
    descriptor) they form the set of declared roles. Any other name used
    under scope ``S`` resolves to ``(S, name)`` if declared, then to the root
    role, then to the single scope that declares it. A name declared in two
    or more scopes and in neither ``S`` nor the root is ambiguous.
    """
    decl: set[RoleRef] = set(declared)
    for ref in policy.case_creators:
        decl.add(ref)
    for stmt in policy.statements:
        if stmt.kind is Kind.NOMINATES:
            decl.add(RoleRef(stmt.scope, stmt.nominee.name))

    by_name: dict[str, set[Optional[str]]] = {}
    for ref in decl:
        by_name.setdefault(ref.name, set()).add(ref.scope)

    def resolve(scope: Optional[str], name: str) -> RoleRef:
        scopes = by_name.get(name, set())
        if scope is not None and scope in scopes:
            return RoleRef(scope, name)
        if None in scopes or not scopes:
            return RoleRef(None, name)
        if len(scopes) == 1:
            return RoleRef(next(iter(scopes)), name)
        where = f" under {scope}" if scope else ""
        raise ScopeResolutionError(
            f"role {name!r}{where} is ambiguous between scopes "
            + ", ".join(sorted(s for s in scopes if s is not None))
        )

    stmts = []
    for stmt in policy.statements:
        fix = lambda ref, s=stmt.scope: resolve(s, ref.name)  # noqa: E731
        if stmt.kind is Kind.NOMINATES:
            nominee = RoleRef(stmt.scope, stmt.nominee.name)
        else:
            nominee = fix(stmt.nominee)
        bc = stmt.binding_constraint
        if bc is not None:
            bc = BindingConstraint(bc.polarity, map_roles(bc.expr, fix))
        eex = None if stmt.endorsement is None else map_roles(stmt.endorsement, fix)
        stmts.append(
            BindingStatement(stmt.scope, stmt.kind, fix(stmt.nominator), nominee, bc, eex)
        )
    return Policy(policy.case_creators, tuple(stmts))


# --------------------------------------------------------------------------
# Role table


@dataclass(frozen=True)
class RoleEntry:
    ref: RoleRef
    index: int
    is_case_creator: bool = False
    is_multi: bool = False


@dataclass(frozen=True)
class RoleTable:
    entries: tuple[RoleEntry, ...]
    _by_ref: Mapping[RoleRef, RoleEntry] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) > MAX_ROLES:
            raise RoleLimitExceeded(f"{len(entries)} roles exceed the {MAX_ROLES}-bit word")
        if [e.index for e in entries] != list(range(len(entries))):
            raise ValueError("role indices must be dense and in order")
        by_ref = {e.ref: e for e in entries}
        if len(by_ref) != len(entries):
            raise ValueError("duplicate role in table")
        object.__setattr__(self, "_by_ref", by_ref)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[RoleEntry]:
        return iter(self.entries)

    def __contains__(self, ref: object) -> bool:
        return ref in self._by_ref

    @property
    def refs(self) -> list[RoleRef]:
        return [e.ref for e in self.entries]

    def entry(self, ref: RoleRef) -> RoleEntry:
        try:
            return self._by_ref[ref]
        except KeyError:
            raise UnknownRole(f"unknown role {ref}") from None

    def index(self, ref: RoleRef) -> int:
        return self.entry(ref).index

    def ref(self, index: int) -> RoleRef:
        return self.entries[index].ref

    def bit(self, ref: RoleRef) -> int:
        return 1 << self.index(ref)

    def mask(self, refs: Iterable[RoleRef]) -> int:
        m = 0
        for ref in refs:
            m |= self.bit(ref)
        return m

    def roles_in(self, mask: int) -> list[RoleRef]:
        return [e.ref for e in self.entries if mask >> e.index & 1]

    @property
    def case_creator_mask(self) -> int:
        return self.mask(e.ref for e in self.entries if e.is_case_creator)


def build_role_table(policy: Policy, process=None) -> RoleTable:
    """Assign dense indices to every role of ``policy`` (and ``process``).

    Case-creators come first, then roles in statement order, then roles that
    only the process descriptor declares. ``process`` may be any object with
    a ``roles`` sequence of ``(RoleRef, is_multi)`` pairs.
    """
    order: dict[RoleRef, None] = dict.fromkeys(policy.roles())
    multi: dict[RoleRef, bool] = {}
    if process is not None:
        for ref, is_multi in process.roles:
            order.setdefault(ref, None)
            multi[ref] = bool(is_multi)
    if len(order) > MAX_ROLES:
        raise RoleLimitExceeded(f"{len(order)} roles exceed the {MAX_ROLES}-bit word")
    creators = set(policy.case_creators)
    return RoleTable(
        tuple(
            RoleEntry(ref, i, ref in creators, multi.get(ref, False))
            for i, ref in enumerate(order)
        )
    )


# --------------------------------------------------------------------------
# DNF


@dataclass(frozen=True)
class DnfConstraint:
    """A disjunction of conjunction sets, each encoded as a role bitmask."""

    masks: tuple[int, ...]

    def __post_init__(self) -> None:
        masks = tuple(self.masks)
        object.__setattr__(self, "masks", masks)
        if not masks:
            raise ValueError("a DNF constraint needs at least one conjunction set")
        for m in masks:
            if m <= 0 or m > WORD_MASK:
                raise ValueError(f"conjunction mask {m} out of range")
        for a in masks:
            for b in masks:
                if a != b and a & b == a:
                    raise ValueError("conjunction sets are not minimal")
        if len(set(masks)) != len(masks):
            raise ValueError("duplicate conjunction sets")

    @classmethod
    def minimal(cls, masks: Iterable[int]) -> "DnfConstraint":
        """Build a constraint from arbitrary sets, dropping absorbed ones."""
        uniq = list(dict.fromkeys(masks))
        keep = [m for m in uniq if not any(o != m and o & m == o for o in uniq)]
        return cls(tuple(keep))

    @property
    def support(self) -> int:
        """Union of all conjunction sets."""
        s = 0
        for m in self.masks:
            s |= m
        return s

    def satisfied_by(self, roles: int) -> bool:
        return any(roles & m == m for m in self.masks)


def _dnf_masks(expr: SetExpr, table: RoleTable) -> list[int]:
    if isinstance(expr, Role):
        return [table.bit(expr.ref)]
    left = _dnf_masks(expr.left, table)
    right = _dnf_masks(expr.right, table)
    if isinstance(expr, Or):
        return left + right
    return [a | b for a in left for b in right]


def to_dnf(expr: SetExpr, table: RoleTable) -> DnfConstraint:
    """Normalise a negation-free set expression to minimal DNF masks."""
    return DnfConstraint.minimal(_dnf_masks(expr, table))


class Outcome(enum.Enum):
    SATISFIED = "SATISFIED"
    UNSATISFIABLE = "UNSATISFIABLE"
    PENDING = "PENDING"


def endorsement_outcome(constraint: DnfConstraint, endorsed_by: int, rejected_by: int) -> Outcome:
    if endorsed_by & rejected_by:
        raise OverlapError("a role cannot both endorse and reject")
    if any(endorsed_by & cs == cs for cs in constraint.masks):
        return Outcome.SATISFIED
    if all(rejected_by & cs for cs in constraint.masks):
        return Outcome.UNSATISFIABLE
    return Outcome.PENDING


def binding_check(constraint: tuple[Polarity, DnfConstraint], nominee_roles: int) -> bool:
    polarity, dnf = constraint
    included = dnf.satisfied_by(nominee_roles)
    return included if polarity is Polarity.IN else not included


def mask_str(mask: int, table: RoleTable) -> str:
    return "{" + ", ".join(str(r) for r in table.roles_in(mask)) + "}"


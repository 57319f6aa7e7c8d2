"""Nomination nets and policy consistency checking.

A policy is translated into a place/transition net with three places per
role (unbound, nominated, bound) and a small disjunction gadget per endorsed
nominee. The policy is consistent when the all-bound marking stays reachable
from every reachable marking; :func:`check_consistency` decides this by
exhaustive breadth-first exploration.
"""
from __future__ import annotations

import enum
import json
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .core import Kind, Policy, RoleRef, RoleTable, to_dnf

DEFAULT_STATE_CAP = 10**6


class NetError(Exception):
    pass


class NotEnabled(NetError):
    pass


class UnsupportedStatement(NetError):
    pass


class StateSpaceLimitExceeded(NetError):
    pass


class SafetyViolation(NetError):
    pass


class Marking:
    """Immutable token assignment; places absent from the mapping hold 0."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Optional[Mapping[str, int]] = None):
        items = {}
        for place, n in (counts or {}).items():
            if n < 0:
                raise ValueError(f"negative token count on {place}")
            if n:
                items[place] = int(n)
        self._counts = items
        self._hash = hash(frozenset(items.items()))

    @classmethod
    def of(cls, *places: str) -> "Marking":
        counts: dict[str, int] = {}
        for p in places:
            counts[p] = counts.get(p, 0) + 1
        return cls(counts)

    def __getitem__(self, place: str) -> int:
        return self._counts.get(place, 0)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Marking) and self._counts == other._counts

    def __hash__(self) -> int:
        return self._hash

    def items(self):
        return self._counts.items()

    @property
    def marked(self) -> frozenset[str]:
        return frozenset(self._counts)

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __repr__(self) -> str:
        parts = [p if n == 1 else f"{p}:{n}" for p, n in sorted(self._counts.items())]
        return "{" + ", ".join(parts) + "}"


def _role_label(ref: RoleRef) -> str:
    return str(ref)


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]
    initial_marking: Marking = field(default_factory=Marking)
    # role -> (unbound, nominated, bound) place labels
    role_places: tuple[tuple[RoleRef, tuple[str, str, str]], ...] = ()
    ignored: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        pset, tset = set(self.places), set(self.transitions)
        if len(pset) != len(self.places) or len(tset) != len(self.transitions):
            raise ValueError("duplicate place or transition label")
        if pset & tset:
            raise ValueError("places and transitions share labels")
        for src, dst in self.arcs:
            if not ((src in pset and dst in tset) or (src in tset and dst in pset)):
                raise ValueError(f"arc {src}->{dst} must join a place and a transition")
        for p in self.initial_marking.marked:
            if p not in pset:
                raise ValueError(f"initial marking names unknown place {p}")

    def preset(self, t: str) -> list[str]:
        return [p for p in self.places if (p, t) in self.arcs]

    def postset(self, t: str) -> list[str]:
        return [p for p in self.places if (t, p) in self.arcs]

    @cached_property
    def _compiled(self):
        pidx = {p: i for i, p in enumerate(self.places)}
        order = sorted(range(len(self.transitions)), key=lambda i: self.transitions[i])
        pre = [[] for _ in self.transitions]
        post = [[] for _ in self.transitions]
        tidx = {t: i for i, t in enumerate(self.transitions)}
        for src, dst in self.arcs:
            if src in pidx:
                pre[tidx[dst]].append(pidx[src])
            else:
                post[tidx[src]].append(pidx[dst])
        delta = []
        for t in range(len(self.transitions)):
            d = [0] * len(self.places)
            for p in pre[t]:
                d[p] -= 1
            for p in post[t]:
                d[p] += 1
            delta.append(tuple(d))
        return pidx, order, [tuple(x) for x in pre], delta

    def vector(self, m: Marking) -> tuple[int, ...]:
        return tuple(m[p] for p in self.places)

    def marking(self, vec: Iterable[int]) -> Marking:
        return Marking(dict(zip(self.places, vec)))

    @property
    def target_marking(self) -> Marking:
        """All roles bound, every other place empty."""
        return Marking.of(*(b for _, (_, _, b) in self.role_places))

    def role_state(self, m: Marking) -> dict[RoleRef, str]:
        """Project a marking onto role lifecycle states."""
        out = {}
        for ref, (u, n, b) in self.role_places:
            out[ref] = "BOUND" if m[b] else "NOMINATED" if m[n] else "UNBOUND"
        return out


def build_nomination_net(policy: Policy, table: RoleTable, strict: bool = False) -> PetriNet:
    """Translate the nomination statements of ``policy`` into a Petri net.

    Release statements have no net encoding; they are skipped with a
    warning, or rejected with :class:`UnsupportedStatement` when ``strict``.
    Binding constraints are not represented.
    """
    places: list[str] = []
    transitions: list[str] = []
    arcs: set[tuple[str, str]] = set()
    role_places = []

    def add(seq: list[str], label: str) -> None:
        if label not in seq:
            seq.append(label)

    for entry in table:
        r = _role_label(entry.ref)
        u, n, b, nm, en = f"u_{r}", f"n_{r}", f"b_{r}", f"nm_{r}", f"en_{r}"
        places += [u, n, b]
        transitions += [nm, en]
        arcs |= {(u, nm), (nm, n), (n, en), (en, b)}
        role_places.append((entry.ref, (u, n, b)))

    ignored = []
    nominated: set[RoleRef] = set()
    for stmt in policy.statements:
        if stmt.kind is not Kind.NOMINATES:
            if strict:
                raise UnsupportedStatement(f"release statement for {stmt.nominee} has no net mapping")
            ignored.append(f"{stmt.nominator} releases {stmt.nominee}")
            continue
        nominated.add(stmt.nominee)
        b_nr = f"b_{_role_label(stmt.nominator)}"
        nm_ne = f"nm_{_role_label(stmt.nominee)}"
        arcs |= {(b_nr, nm_ne), (nm_ne, b_nr)}

    for stmt in policy.nominations:
        if stmt.endorsement is None:
            continue
        ne = _role_label(stmt.nominee)
        disj, eex = f"disj_{ne}", f"eex_{ne}"
        add(places, disj)
        add(places, eex)
        arcs |= {(f"nm_{ne}", disj), (eex, f"en_{ne}")}
        for mask in to_dnf(stmt.endorsement, table).masks:
            members = table.roles_in(mask)
            t = f"eex_{ne}[" + "&".join(_role_label(r) for r in members) + "]"
            add(transitions, t)
            for r in members:
                b = f"b_{_role_label(r)}"
                arcs |= {(b, t), (t, b)}
            arcs |= {(disj, t), (t, eex)}

    if ignored:
        warnings.warn("release statements ignored by the nomination net: " + "; ".join(ignored))

    initial = []
    for entry in table:
        r = _role_label(entry.ref)
        if entry.is_case_creator:
            initial.append(f"b_{r}")
        elif entry.ref in nominated:
            initial.append(f"u_{r}")
        # A role nobody may nominate gets no token, so it can never bind.

    return PetriNet(
        tuple(places),
        tuple(transitions),
        frozenset(arcs),
        Marking.of(*initial),
        tuple(role_places),
        tuple(ignored),
    )


def enabled_transitions(net: PetriNet, m: Marking) -> frozenset[str]:
    _, _, pre, _ = net._compiled
    vec = net.vector(m)
    return frozenset(
        t for i, t in enumerate(net.transitions) if all(vec[p] >= 1 for p in pre[i])
    )


def fire(net: PetriNet, m: Marking, t: str) -> Marking:
    if t not in net.transitions:
        raise NotEnabled(f"unknown transition {t}")
    if t not in enabled_transitions(net, m):
        raise NotEnabled(f"transition {t} is not enabled at {m!r}")
    _, _, _, delta = net._compiled
    d = delta[net.transitions.index(t)]
    return net.marking(a + b for a, b in zip(net.vector(m), d))


class Verdict(enum.Enum):
    CONSISTENT = "CONSISTENT"
    INCONSISTENT = "INCONSISTENT"


@dataclass
class ReachabilityGraph:
    net: PetriNet
    states: list[tuple[int, ...]]
    edges: list[list[tuple[str, int]]]
    parent: list[Optional[tuple[int, str]]]

    def marking(self, i: int) -> Marking:
        return self.net.marking(self.states[i])

    def path_to(self, i: int) -> list[str]:
        trace = []
        while self.parent[i] is not None:
            i, t = self.parent[i]
            trace.append(t)
        return trace[::-1]


def explore(net: PetriNet, cap: int = DEFAULT_STATE_CAP) -> ReachabilityGraph:
    """Breadth-first reachability graph; successors in transition-label order.

    Raises :class:`SafetyViolation` if any place ever holds two tokens.
    """
    _, order, pre, delta = net._compiled
    start = net.vector(net.initial_marking)
    index = {start: 0}
    states, edges, parent = [start], [[]], [None]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        vec = states[i]
        for t in order:
            if not all(vec[p] for p in pre[t]):
                continue
            nxt = tuple(a + b for a, b in zip(vec, delta[t]))
            j = index.get(nxt)
            if j is None:
                if max(nxt, default=0) > 1:
                    raise SafetyViolation(
                        f"marking {net.marking(nxt)!r} is not 1-safe"
                    )
                if len(states) >= cap:
                    raise StateSpaceLimitExceeded(f"more than {cap} reachable markings")
                j = len(states)
                index[nxt] = j
                states.append(nxt)
                edges.append([])
                parent.append((i, net.transitions[t]))
                queue.append(j)
            edges[i].append((net.transitions[t], j))
    return ReachabilityGraph(net, states, edges, parent)


@dataclass
class ConsistencyResult:
    verdict: Verdict
    trace: tuple[str, ...] = ()
    stuck_marking: Optional[Marking] = None
    reachable_markings: int = 0
    edges: int = 0
    notes: tuple[str, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.verdict is Verdict.CONSISTENT

    def to_json(self) -> dict:
        doc = {
            "verdict": self.verdict.value,
            "stats": {"reachable_markings": self.reachable_markings, "edges": self.edges},
            "notes": list(self.notes),
        }
        if not self.consistent:
            doc["counterexample"] = {
                "trace": list(self.trace),
                "marking": sorted(self.stuck_marking.marked) if self.stuck_marking else [],
            }
        return doc

    def report(self) -> str:
        lines = [
            self.verdict.value,
            f"reachable markings: {self.reachable_markings}",
            f"edges: {self.edges}",
        ]
        if not self.consistent:
            lines.append("trace: " + (", ".join(self.trace) or "(initial marking)"))
            lines.append(f"stuck marking: {self.stuck_marking!r}")
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def check_consistency(net: PetriNet, cap: int = DEFAULT_STATE_CAP) -> ConsistencyResult:
    """Decide whether the all-bound marking is a home marking of ``net``.

    For an inconsistent net the counterexample is the shortest firing
    sequence to a dead marking other than the target; if no such marking
    exists, the shortest sequence to any marking that cannot reach it.
    """
    graph = explore(net, cap)
    target = net.vector(net.target_marking)
    n = len(graph.states)
    reverse: list[list[int]] = [[] for _ in range(n)]
    for i, succ in enumerate(graph.edges):
        for _, j in succ:
            reverse[j].append(i)
    good = [False] * n
    try:
        ti = graph.states.index(target)
    except ValueError:
        ti = None
    if ti is not None:
        good[ti] = True
        stack = [ti]
        while stack:
            j = stack.pop()
            for i in reverse[j]:
                if not good[i]:
                    good[i] = True
                    stack.append(i)

    notes = ["binding constraints are not part of the nomination net"]
    if net.ignored:
        notes.append("ignored release statements: " + "; ".join(net.ignored))
    n_edges = sum(len(e) for e in graph.edges)
    if all(good):
        return ConsistencyResult(Verdict.CONSISTENT, (), None, n, n_edges, tuple(notes))
    bad = [i for i in range(n) if not good[i]]
    dead = [i for i in bad if not graph.edges[i]]
    pick = (dead or bad)[0]  # BFS order: shortest first
    return ConsistencyResult(
        Verdict.INCONSISTENT,
        tuple(graph.path_to(pick)),
        graph.marking(pick),
        n,
        n_edges,
        tuple(notes),
    )


def export_dot(net: PetriNet, m: Optional[Marking] = None) -> str:
    """Graphviz text for ``net``; tokens are taken from ``m`` or M0."""
    m = net.initial_marking if m is None else m
    lines = ["digraph nomination_net {", "  rankdir=LR;"]
    for p in net.places:
        label = f"{p}\\n{m[p]}" if m[p] else p
        lines.append(f'  "{p}" [shape=circle, label="{label}"];')
    for t in net.transitions:
        lines.append(f'  "{t}" [shape=box, label="{t}"];')
    for src, dst in sorted(net.arcs):
        lines.append(f'  "{src}" -> "{dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"

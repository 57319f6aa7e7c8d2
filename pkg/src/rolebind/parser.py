"""Recursive-descent parser and canonical renderer for binding policies.

Accepted syntax, one statement per ``;``::

    { Customer is case-creator;
      Customer nominates Supplier;
      Under Shipment, Supplier nominates Carrier in Candidate endorsed-by Customer;
    }

Identifiers may contain inner spaces (``Carrier Invoicing``): an
identifier is a run of non-keyword words on one line. ``and`` binds tighter than ``or``;
both associate to the left. A comma may precede each ``endorsed-by`` clause
and all clauses of a statement are conjoined.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    And,
    BindingConstraint,
    BindingStatement,
    Kind,
    Or,
    Polarity,
    Policy,
    PolicyError,
    Role,
    RoleRef,
    SetExpr,
    resolve_scopes,
)

KEYWORDS = frozenset(
    {
        "nominates",
        "releases",
        "in",
        "not",
        "endorsed-by",
        "and",
        "or",
        "is",
        "case-creator",
        "Under",
    }
)
_PUNCT = {"{": "'{'", "}": "'}'", ";": "';'", ",": "','", "(": "'('", ")": "')'"}

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<comment>//[^\n]*)|(?P<word>[A-Za-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)"
    r"|(?P<punct>[{};,()])"
)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += " (expected " + ", ".join(self.expected) + ")"
        return text


class PolicySyntaxError(PolicyError):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class _Tok:
    kind: str  # "kw", "word", "punct", "eof"
    text: str
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise PolicySyntaxError(
                ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}")
            )
        kind = m.lastgroup
        value = m.group()
        if kind == "word":
            if value in KEYWORDS:
                toks.append(_Tok("kw", value, line, col, line, col + len(value)))
            elif "-" in value:
                raise PolicySyntaxError(ParseDiagnostic(line, col, f"unknown keyword {value!r}"))
            else:
                toks.append(_Tok("word", value, line, col, line, col + len(value)))
        elif kind == "punct":
            toks.append(_Tok("punct", value, line, col, line, col + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1, line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "punct") and t.text == text

    def take(self, text: str) -> _Tok:
        if not self.at(text):
            self.fail([_describe(text)])
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: Iterable[str], message: Optional[str] = None) -> None:
        t = self.tok
        line, col = t.line, t.col
        prev = self.toks[self.i - 1] if self.i else None
        # A statement cut short at a line end is reported where it was cut.
        if prev is not None and prev.end_line < t.line and prev.text not in ("{", ";"):
            line, col = prev.end_line, prev.end_col
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise PolicySyntaxError(
            ParseDiagnostic(line, col, message or f"unexpected {found}", tuple(expected))
        )

    def ident(self) -> str:
        words = []
        # a name never continues onto the next line
        while self.tok.kind == "word" and (not words or self.tok.line == self.toks[self.i - 1].end_line):
            words.append(self.tok.text)
            self.i += 1
        if not words:
            self.fail(["identifier"])
        return " ".join(words)

    # -- grammar -----------------------------------------------------------
    def policy(self) -> Policy:
        self.take("{")
        creators: list[RoleRef] = []
        statements: list[BindingStatement] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail(["'}'"], "missing closing '}'")
            item = self.statement()
            if isinstance(item, RoleRef):
                creators.append(item)
            else:
                statements.append(item)
        close = self.take("}")
        if self.tok.kind != "eof":
            self.fail(["end of input"])
        if not creators:
            raise PolicySyntaxError(
                ParseDiagnostic(
                    close.line,
                    close.col,
                    "empty policy" if not statements else "policy declares no case-creator",
                    ("case-creator declaration",),
                )
            )
        return Policy(tuple(creators), tuple(statements))

    def statement(self):
        scope = None
        if self.at("Under"):
            self.i += 1
            scope = self.ident()
            self.take(",")
        if self.at("case-creator"):
            self.i += 1
            ref = RoleRef(scope, self.ident())
            self.take(";")
            return ref
        if self.tok.kind != "word":
            self.fail(["identifier", "'Under'", "'case-creator'", "'}'"])
        first = self.ident()
        if self.at("is"):
            self.i += 1
            self.take("case-creator")
            self.take(";")
            return RoleRef(scope, first)
        if self.at("nominates"):
            kind = Kind.NOMINATES
        elif self.at("releases"):
            kind = Kind.RELEASES
        else:
            self.fail(["'nominates'", "'releases'", "'is'"])
        self.i += 1
        nominee = self.ident()

        binding = None
        if self.at("in"):
            self.i += 1
            binding = BindingConstraint(Polarity.IN, self.set_expr())
        elif self.at("not"):
            self.i += 1
            self.take("in")
            binding = BindingConstraint(Polarity.NOT_IN, self.set_expr())

        endorsement: Optional[SetExpr] = None
        while True:
            if self.at(","):
                self.i += 1
                if not self.at("endorsed-by"):
                    self.fail(["'endorsed-by'"])
            if not self.at("endorsed-by"):
                break
            self.i += 1
            clause = self.set_expr()
            endorsement = clause if endorsement is None else And(endorsement, clause)

        if not self.at(";"):
            exp = ["';'", "'endorsed-by'"]
            if binding is None and endorsement is None:
                exp[1:1] = ["'in'", "'not in'"]
            self.fail(exp)
        self.i += 1
        # Names are qualified by resolve_scopes once the whole policy is known.
        return BindingStatement(
            scope, kind, RoleRef(None, first), RoleRef(scope, nominee), binding, endorsement
        )

    def set_expr(self) -> SetExpr:
        expr = self.conj()
        while self.at("or"):
            self.i += 1
            expr = Or(expr, self.conj())
        return expr

    def conj(self) -> SetExpr:
        expr = self.atom()
        while self.at("and"):
            self.i += 1
            expr = And(expr, self.atom())
        return expr

    def atom(self) -> SetExpr:
        if self.at("("):
            self.i += 1
            expr = self.set_expr()
            self.take(")")
            return expr
        if self.tok.kind != "word":
            self.fail(["identifier", "'('"])
        return Role(RoleRef(None, self.ident()))


def _describe(text: str) -> str:
    return _PUNCT.get(text, f"'{text}'")


def parse_policy(text: str, process=None) -> Policy:
    """Parse policy text into a :class:`Policy` with scope-qualified roles.

    ``process`` (a :class:`~rolebind.process.ProcessDescriptor`) adds its
    declared roles to scope resolution, so a name the policy never nominates
    can still resolve to the scoped role the process declares.

    Raises :class:`PolicySyntaxError` carrying a :class:`ParseDiagnostic`.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    raw = _Parser(text).policy()
    declared = [ref for ref, _ in process.roles] if process is not None else ()
    return resolve_scopes(raw, declared)


# --------------------------------------------------------------------------
# Rendering

_PREC = {Or: 1, And: 2, Role: 3}


def render_expr(expr: SetExpr) -> str:
    if isinstance(expr, Role):
        return expr.ref.name
    op = "or" if isinstance(expr, Or) else "and"
    prec = _PREC[type(expr)]
    left = render_expr(expr.left)
    if _PREC[type(expr.left)] < prec:
        left = f"({left})"
    right = render_expr(expr.right)
    # Right operands at equal precedence keep their parentheses so the
    # left-associative tree shape survives a round trip.
    if _PREC[type(expr.right)] <= prec:
        right = f"({right})"
    return f"{left} {op} {right}"


def render_statement(stmt: BindingStatement) -> str:
    parts = []
    if stmt.scope is not None:
        parts.append(f"Under {stmt.scope},")
    parts += [stmt.nominator.name, stmt.kind.value, stmt.nominee.name]
    if stmt.binding_constraint is not None:
        parts += [stmt.binding_constraint.polarity.value, render_expr(stmt.binding_constraint.expr)]
    if stmt.endorsement is not None:
        parts += ["endorsed-by", render_expr(stmt.endorsement)]
    return " ".join(parts) + ";"


def render_policy(policy: Policy) -> str:
    lines = ["{"]
    for ref in policy.case_creators:
        prefix = f"Under {ref.scope}, " if ref.scope is not None else ""
        lines.append(f"    {prefix}{ref.name} is case-creator;")
    for stmt in policy.statements:
        lines.append("    " + render_statement(stmt))
    lines.append("}")
    return "\n".join(lines) + "\n"

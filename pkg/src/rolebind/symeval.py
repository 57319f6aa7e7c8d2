"""A tiny interpreter for the Solidity subset that :mod:`rolebind.codegen` emits.

It executes generated ``pure`` functions directly on the source text so the
contract logic can be checked against the native runtime without a chain.
Supported: ``uint constant`` declarations, functions with ``uint``/``bool``
parameters, blocks, ``if``/``else``, ``return``, ``require``, ``revert``,
local ``uint`` declarations and assignment. Operators follow Solidity
precedence, in particular ``&`` binds tighter than ``==``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

WORD = (1 << 256) - 1

_TOKEN = re.compile(
    r"\s+|//[^\n]*|pragma[^;]*;|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<str>\"[^\"]*\")"
    r"|(?P<op><<|>>|==|!=|&&|\|\||[-+*/%&|^~!<>=(){};,^])"
)

# binary operators, loosest first
_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", ">"), ("|",), ("^",), ("&",), ("<<", ">>")]


class Revert(Exception):
    pass


class EvalError(Exception):
    pass


def _lex(src: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise EvalError(f"cannot tokenise at {src[pos:pos + 20]!r}")
        pos = m.end()
        kind = m.lastgroup
        if kind:
            out.append((kind, m.group()))
    out.append(("eof", ""))
    return out


@dataclass
class Function:
    name: str
    params: list[tuple[str, str]]
    returns: str
    body: list


class _Reader:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> str:
        return self.toks[self.i + k][1]

    def next(self) -> str:
        t = self.toks[self.i][1]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        got = self.next()
        if got != text:
            raise EvalError(f"expected {text!r}, got {got!r}")

    # -- expressions -------------------------------------------------------
    def expr(self, level: int = 0):
        if level == len(_LEVELS):
            return self.unary()
        node = self.expr(level + 1)
        while self.peek() in _LEVELS[level]:
            op = self.next()
            node = ("bin", op, node, self.expr(level + 1))
        return node

    def unary(self):
        if self.peek() in ("!", "~"):
            op = self.next()
            return ("un", op, self.unary())
        return self.primary()

    def primary(self):
        kind, text = self.toks[self.i]
        if text == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        self.i += 1
        if kind == "num":
            return ("num", int(text))
        if kind == "str":
            return ("str", text[1:-1])
        if kind == "id":
            if text in ("true", "false"):
                return ("num", text == "true")
            return ("var", text)
        raise EvalError(f"unexpected token {text!r}")

    # -- statements --------------------------------------------------------
    def block(self) -> list:
        self.expect("{")
        stmts = []
        while self.peek() != "}":
            stmts.append(self.statement())
        self.expect("}")
        return stmts

    def statement(self):
        t = self.peek()
        if t == "{":
            return ("block", self.block())
        if t == "if":
            self.next()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.statement()
            other = None
            if self.peek() == "else":
                self.next()
                other = self.statement()
            return ("if", cond, then, other)
        if t == "return":
            self.next()
            value = self.expr()
            self.expect(";")
            return ("return", value)
        if t in ("require", "revert"):
            self.next()
            self.expect("(")
            args = []
            while self.peek() != ")":
                args.append(self.expr())
                if self.peek() == ",":
                    self.next()
            self.expect(")")
            self.expect(";")
            return (t, args)
        if t in ("uint", "bool"):
            self.next()
            name = self.next()
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return ("assign", name, value)
        name = self.next()
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return ("assign", name, value)


class Contract:
    """Parsed contract: ``constants`` and ``functions`` by name."""

    def __init__(self, source: str):
        r = _Reader(_lex(source))
        # skip pragma
        while r.peek() != "contract":
            if r.peek() == "":
                raise EvalError("no contract found")
            r.next()
        r.next()
        self.name = r.next()
        self.constants: dict[str, int] = {}
        self.functions: dict[str, Function] = {}
        r.expect("{")
        while r.peek() != "}":
            if r.peek() == "uint" and r.peek(1) == "constant":
                r.next(), r.next()
                cname = r.next()
                r.expect("=")
                self.constants[cname] = self._eval(r.expr(), {})
                r.expect(";")
            elif r.peek() == "function":
                fn = self._function(r)
                self.functions[fn.name] = fn
            else:
                raise EvalError(f"unexpected {r.peek()!r} in contract body")
        r.expect("}")

    def _function(self, r: _Reader) -> Function:
        r.expect("function")
        name = r.next()
        r.expect("(")
        params = []
        while r.peek() != ")":
            typ = r.next()
            params.append((typ, r.next()))
            if r.peek() == ",":
                r.next()
        r.expect(")")
        while r.peek() != "returns":
            r.next()  # visibility and mutability
        r.next()
        r.expect("(")
        returns = r.next()
        r.expect(")")
        return Function(name, params, returns, r.block())

    def call(self, name: str, *args: Any) -> Any:
        fn = self.functions[name]
        if len(args) != len(fn.params):
            raise EvalError(f"{name} takes {len(fn.params)} arguments")
        env = {}
        for (typ, pname), value in zip(fn.params, args):
            env[pname] = bool(value) if typ == "bool" else int(value) & WORD
        done, value = self._exec(fn.body, env)
        if not done:
            raise EvalError(f"{name} fell off the end")
        return value

    def _exec(self, stmts: list, env: dict) -> tuple[bool, Any]:
        for st in stmts:
            kind = st[0]
            if kind == "return":
                return True, self._eval(st[1], env)
            if kind == "assign":
                env[st[1]] = self._eval(st[2], env)
            elif kind == "if":
                branch = st[2] if self._eval(st[1], env) else st[3]
                if branch is not None:
                    done, value = self._exec([branch], env)
                    if done:
                        return done, value
            elif kind == "block":
                done, value = self._exec(st[1], env)
                if done:
                    return done, value
            elif kind == "require":
                if not self._eval(st[1][0], env):
                    raise Revert(self._eval(st[1][1], env) if len(st[1]) > 1 else "")
            elif kind == "revert":
                raise Revert(self._eval(st[1][0], env) if st[1] else "")
        return False, None

    def _eval(self, node, env: dict) -> Any:
        kind = node[0]
        if kind in ("num", "str"):
            return node[1]
        if kind == "var":
            name = node[1]
            if name in env:
                return env[name]
            if name in self.constants:
                return self.constants[name]
            raise EvalError(f"unbound identifier {name}")
        if kind == "un":
            v = self._eval(node[2], env)
            return (not v) if node[1] == "!" else WORD ^ v
        op = node[1]
        if op == "||":
            return bool(self._eval(node[2], env)) or bool(self._eval(node[3], env))
        if op == "&&":
            return bool(self._eval(node[2], env)) and bool(self._eval(node[3], env))
        a, b = self._eval(node[2], env), self._eval(node[3], env)
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == ">":
            return a > b
        if op == "|":
            return a | b
        if op == "^":
            return a ^ b
        if op == "&":
            return a & b
        if op == "<<":
            return (a << b) & WORD if b < 256 else 0
        if op == ">>":
            return a >> b
        raise EvalError(f"unsupported operator {op}")


def load(source: str) -> Contract:
    return Contract(source)

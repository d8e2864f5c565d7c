"""Expression grammar and declarative system files.

Grammar (whitespace insignificant)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") unary)?        right associative
    atom   := NUMBER | "u" INDEX | "exp" "(" expr ")" | "(" expr ")"

``NUMBER`` is a decimal literal with optional exponent. State components are
``u1`` .. ``un`` (1-based). ``-2^2`` is ``-(2^2)``.

A system file (``.sys``) holds ``key: value`` lines; ``#`` starts a comment::

    name: diag
    n: 2
    lo: -1, -1
    hi: 1, 1
    c0: 1
    A[1,1]: u1
    A[2,2]: 2 + u2
    B[1,1]: 1 + u1^2/4
    B[2,2]: 1
    f[1]: u1^2/2          # optional; all or none
    f[2]: 2*u2 + u2^2/2

Missing matrix entries are zero.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np

from .errors import ConfigError
from .system import SystemSpec

Node = Callable[[np.ndarray], np.ndarray]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


class ExprError(ConfigError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class _Parser:
    def __init__(self, text: str, n: int, line: int, col0: int):
        self.text = text
        self.n = n
        self.line = line
        self.col0 = col0
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if m is None or m.end() == pos:
                col = pos + len(stripped[pos:]) - len(stripped[pos:].lstrip())
                self.fail(f"unexpected character {stripped[col]!r}", col)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def fail(self, message: str, pos: int):
        raise ExprError(message, self.line, self.col0 + pos + 1)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", "", len(self.text.rstrip()))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            self.fail(f"expected {value!r}, found {val or 'end of expression'!r}", pos)

    def parse(self) -> Node:
        if not self.tokens:
            self.fail("empty expression", 0)
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            self.fail(f"unexpected {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = (lambda a, b: lambda U: a(U) + b(U))(node, rhs) if op == "+" else \
                (lambda a, b: lambda U: a(U) - b(U))(node, rhs)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = (lambda a, b: lambda U: a(U) * b(U))(node, rhs) if op == "*" else \
                (lambda a, b: lambda U: a(U) / b(U))(node, rhs)
        return node

    def unary(self) -> Node:
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            inner = self.unary()
            return inner if op == "+" else (lambda a: lambda U: -a(U))(inner)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            expo = self.unary()
            return (lambda a, b: lambda U: np.power(a(U), b(U)))(base, expo)
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            c = float(val)
            return lambda U: np.full(U.shape[:-1], c)
        if kind == "name":
            if val == "exp":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return lambda U: np.exp(inner(U))
            m = re.fullmatch(r"u(\d+)", val)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.n:
                    self.fail(f"state component {val} out of range 1..{self.n}", pos)
                return lambda U: U[..., k - 1]
            self.fail(f"unknown name {val!r}", pos)
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail(f"unexpected {val or 'end of expression'!r}", pos)


def parse_expression(text: str, n: int, line: int = 1, col0: int = 0) -> Node:
    """Compile an expression in ``u1..un`` into a vectorised callable of ``U[..., n]``."""
    return _Parser(text, n, line, col0).parse()


_KEY = re.compile(r"^(?P<mat>[ABf])\[(?P<i>\d+)(?:,(?P<j>\d+))?\]$")


def _floats(text: str, n: int, line: int, key: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ExprError(f"{key} must be {n} comma-separated numbers", line, 1) from None
    if len(vals) != n:
        raise ExprError(f"{key} must have {n} entries, got {len(vals)}", line, 1)
    return np.array(vals)


def parse_system(text: str, source: str = "<string>") -> SystemSpec:
    entries: Dict[str, Tuple[str, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if ":" not in body:
            raise ExprError("expected 'key: value'", lineno, 1)
        key, value = body.split(":", 1)
        key = key.strip().replace(" ", "")
        if key in entries:
            raise ExprError(f"duplicate key {key!r}", lineno, 1)
        entries[key] = (value, lineno, len(body) - len(value))
    for required in ("n", "lo", "hi", "c0"):
        if required not in entries:
            raise ConfigError(f"{source}: missing required key {required!r}")
    try:
        n = int(entries["n"][0])
        c0 = float(entries["c0"][0])
    except ValueError:
        raise ConfigError(f"{source}: n must be an integer and c0 a number") from None
    if n < 1:
        raise ConfigError(f"{source}: n must be positive")
    lo = _floats(entries["lo"][0], n, entries["lo"][1], "lo")
    hi = _floats(entries["hi"][0], n, entries["hi"][1], "hi")
    name = entries.get("name", (Path(source).stem, 0, 0))[0].strip()

    A_ent: Dict[Tuple[int, int], Node] = {}
    B_ent: Dict[Tuple[int, int], Node] = {}
    f_ent: Dict[int, Node] = {}
    for key, (value, lineno, col0) in entries.items():
        if key in ("n", "lo", "hi", "c0", "name"):
            continue
        m = _KEY.match(key)
        if m is None:
            raise ExprError(f"unknown key {key!r}", lineno, 1)
        i = int(m.group("i"))
        j = m.group("j")
        node = parse_expression(value, n, lineno, col0)
        if m.group("mat") == "f":
            if j is not None or not 1 <= i <= n:
                raise ExprError(f"bad flux index in {key!r}", lineno, 1)
            f_ent[i - 1] = node
            continue
        if j is None or not (1 <= i <= n and 1 <= int(j) <= n):
            raise ExprError(f"bad matrix index in {key!r}", lineno, 1)
        (A_ent if m.group("mat") == "A" else B_ent)[(i - 1, int(j) - 1)] = node
    if f_ent and len(f_ent) != n:
        raise ConfigError(f"{source}: flux must define all {n} components or none")

    def matrix(ent):
        def fn(U):
            U = np.asarray(U, dtype=float)
            M = np.zeros(U.shape[:-1] + (n, n))
            for (i, j), node in ent.items():
                M[..., i, j] = node(U)
            return M
        return fn

    flux = None
    if f_ent:
        def flux(U):
            U = np.asarray(U, dtype=float)
            return np.stack([f_ent[i](U) for i in range(n)], axis=-1)

    try:
        return SystemSpec(name=name, n=n, A=matrix(A_ent), B=matrix(B_ent), lo=lo, hi=hi,
                          c0=c0, flux=flux, description=f"loaded from {source}")
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_system_file(path) -> SystemSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_system(text, source=str(path))

"""Scalar expression parser and evaluator for f(t, u, v), phi(t) and exact solutions.

Grammar (whitespace insignificant, no implicit multiplication)::

    expr    := expr ('+' | '-') expr | expr ('*' | '/') expr | expr '^' expr
             | '-' expr | '+' expr | atom
    atom    := number | 't' | 'u' | 'v' | 'pi' | 'e' | name '(' expr ')' | '(' expr ')'

Binding, loosest first: ``+ -``, ``* /``, unary minus, ``^`` (right-associative).
``**`` is accepted as a synonym for ``^``. Constants ``pi`` and ``e`` resolve at
parse time and constant subtrees are folded, so ``1/4`` is stored as ``0.25``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Union

import numpy as np

from greenfde.core.exceptions import (
    DisallowedVariable,
    ExprDomainError,
    ExprSyntaxError,
    UnknownIdentifier,
)

VARIABLES: FrozenSet[str] = frozenset({"t", "u", "v"})
F_VARS: FrozenSet[str] = VARIABLES
T_VARS: FrozenSet[str] = frozenset({"t"})
NO_VARS: FrozenSet[str] = frozenset()

CONSTANTS: Dict[str, float] = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Function:
    name: str
    scalar: Callable[[float], float]
    vector: Callable[[np.ndarray], np.ndarray]
    # Returns a mask of valid arguments; None means the whole real line.
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None
    detail: str = ""


FUNCTIONS: Dict[str, Function] = {}


def register_function(
    name: str,
    scalar: Callable[[float], float],
    vector: Callable[[np.ndarray], np.ndarray],
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    detail: str = "",
) -> None:
    """Add a one-argument function to the grammar."""
    if name in CONSTANTS or name in VARIABLES:
        raise ValueError(f"'{name}' is reserved")
    if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name):
        raise ValueError(f"invalid function name: {name!r}")
    FUNCTIONS[name] = Function(name, scalar, vector, domain, detail)


register_function("sin", math.sin, np.sin)
register_function("cos", math.cos, np.cos)
register_function("exp", math.exp, np.exp)
register_function("log", math.log, np.log, lambda x: x > 0, "argument must be positive")
register_function("sqrt", math.sqrt, np.sqrt, lambda x: x >= 0, "argument must be non-negative")
register_function("abs", abs, np.abs)


# --- tree ---


class Expr:
    """Base node. Trees are immutable and compare structurally."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr


# --- tokenizer ---

_TOKEN_RE = re.compile(
    r"""
    \s*(?:
        (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>\*\*|[-+*/^()])
    )
    """,
    re.VERBOSE | re.ASCII,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    pos: int

    def describe(self) -> str:
        return "end of input" if self.kind == "end" else f"'{self.text}'"


def _tokenize(source: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    n = len(source)
    while True:
        while pos < n and source[pos] in " \t\r\n\f\v":
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup or "op"
        text = m.group(kind)
        start = m.start(kind)
        if kind == "op" and text == "**":
            text = "^"
        tokens.append(_Token(kind, text, start))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


# --- parser ---

_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_RIGHT_ASSOC = {"^"}
_UNARY_RBP = 25


class _Parser:
    def __init__(self, source: str, allowed: FrozenSet[str]):
        self.tokens = _tokenize(source)
        self.index = 0
        self.allowed = allowed

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        if tok.kind != "end":
            self.index += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(f"expected '{text}', found {tok.describe()}", tok.pos)

    def parse(self) -> Expr:
        node = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            hint = ""
            if tok.kind in ("name", "number") or tok.text == "(":
                hint = " (implicit multiplication is not supported)"
            raise ExprSyntaxError(f"unexpected {tok.describe()}{hint}", tok.pos)
        return node

    def expression(self, rbp: int) -> Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY or _BINARY[tok.text] <= rbp:
                return left
            self.advance()
            lbp = _BINARY[tok.text]
            right = self.expression(lbp - 1 if tok.text in _RIGHT_ASSOC else lbp)
            left = _fold(BinOp(tok.text, left, right))

    def nud(self, tok: _Token) -> Expr:
        if tok.kind == "number":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number out of range {tok.text!r}", tok.pos)
            return Const(value)
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "op":
            if tok.text == "-":
                return _fold(Neg(self.expression(_UNARY_RBP)))
            if tok.text == "+":
                return self.expression(_UNARY_RBP)
            if tok.text == "(":
                inner = self.expression(0)
                self.expect(")")
                return inner
        if tok.kind == "end":
            raise ExprSyntaxError("unexpected end of input", tok.pos)
        raise ExprSyntaxError(f"unexpected {tok.describe()}", tok.pos)

    def name(self, tok: _Token) -> Expr:
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            if tok.text not in FUNCTIONS:
                raise UnknownIdentifier(tok.text, tok.pos)
            self.advance()
            arg = self.expression(0)
            self.expect(")")
            return _fold(Call(tok.text, arg))
        if tok.text in FUNCTIONS:
            raise ExprSyntaxError(f"function '{tok.text}' requires an argument", tok.pos)
        if tok.text in CONSTANTS:
            return Const(CONSTANTS[tok.text])
        if tok.text in VARIABLES:
            if tok.text not in self.allowed:
                raise DisallowedVariable(tok.text, self.allowed, tok.pos)
            return Var(tok.text)
        raise UnknownIdentifier(tok.text, tok.pos)


def _fold(node: Expr) -> Expr:
    children: Iterable[Expr]
    if isinstance(node, BinOp):
        children = (node.left, node.right)
    elif isinstance(node, Neg):
        children = (node.operand,)
    elif isinstance(node, Call):
        children = (node.arg,)
    else:
        return node
    if not all(isinstance(c, Const) for c in children):
        return node
    try:
        return Const(evaluate(node))
    except ExprDomainError:
        # Left in place; the error surfaces at evaluation time.
        return node


def parse(source: Union[str, bytes], allowed_vars: Iterable[str] = F_VARS) -> Expr:
    """Parse ``source`` into an expression tree over ``allowed_vars``."""
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as e:
            raise ExprSyntaxError("invalid UTF-8", e.start) from None
    if not isinstance(source, str):
        raise ExprSyntaxError(f"expected text, got {type(source).__name__}", 0)
    allowed = frozenset(allowed_vars)
    unknown = allowed - VARIABLES
    if unknown:
        raise ValueError(f"unsupported variables: {sorted(unknown)}")
    try:
        return _Parser(source, allowed).parse()
    except RecursionError:
        raise ExprSyntaxError("expression nested too deeply", 0) from None


# --- scalar evaluation ---


def evaluate(e: Expr, t: float = 0.0, u: float = 0.0, v: float = 0.0) -> float:
    """Evaluate at a single point with real arithmetic."""
    env = {"t": float(t), "u": float(u), "v": float(v)}
    return _eval(e, env)


def _finite(op: str, value: float, env: Mapping[str, float]) -> float:
    if not math.isfinite(value):
        raise ExprDomainError(op, env, "non-finite result", overflow=True)
    return value


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return _finite(e.name, env[e.name], env)
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        x = _eval(e.arg, env)
        if fn.domain is not None and not bool(fn.domain(np.float64(x))):
            raise ExprDomainError(e.func, env, fn.detail)
        try:
            return _finite(e.func, float(fn.scalar(x)), env)
        except (OverflowError, ValueError):
            raise ExprDomainError(e.func, env, "overflow", overflow=True) from None
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return _finite("+", a + b, env)
        if e.op == "-":
            return _finite("-", a - b, env)
        if e.op == "*":
            return _finite("*", a * b, env)
        if e.op == "/":
            if b == 0.0:
                raise ExprDomainError("/", env, "division by zero")
            return _finite("/", a / b, env)
        if e.op == "^":
            try:
                return _finite("^", math.pow(a, b), env)
            except ValueError:
                raise ExprDomainError("^", env, f"{a!r} ^ {b!r} is not real") from None
            except OverflowError:
                raise ExprDomainError("^", env, "overflow", overflow=True) from None
    raise TypeError(f"not an expression node: {e!r}")


# --- vectorized evaluation ---


def evaluate_many(e: Expr, t=0.0, u=0.0, v=0.0) -> np.ndarray:
    """Evaluate on broadcast numpy arrays; same domain rules as :func:`evaluate`.

    The first offending point (in C order) is reported on a domain error.
    """
    arrays = np.broadcast_arrays(
        np.asarray(t, dtype=float), np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    )
    env = dict(zip(("t", "u", "v"), arrays))
    with np.errstate(all="ignore"):
        out = _eval_vec(e, env)
    return np.array(np.broadcast_to(out, arrays[0].shape), dtype=float)


def _fail(
    op: str, mask: np.ndarray, env: Mapping[str, np.ndarray], detail: str, overflow: bool = False
) -> None:
    shape = env["t"].shape
    full = np.broadcast_to(mask, shape)
    if shape:
        idx = np.unravel_index(int(np.argmax(full)), shape)
        point = {k: float(arr[idx]) for k, arr in env.items()}
    else:
        point = {k: float(arr) for k, arr in env.items()}
    raise ExprDomainError(op, point, detail, overflow=overflow)


def _check_vec(op: str, value: np.ndarray, env: Mapping[str, np.ndarray]) -> np.ndarray:
    bad = ~np.isfinite(value)
    if np.any(bad):
        _fail(op, bad, env, "non-finite result", overflow=True)
    return value


def _eval_vec(e: Expr, env: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(e, Const):
        return np.float64(e.value)
    if isinstance(e, Var):
        return _check_vec(e.name, env[e.name], env)
    if isinstance(e, Neg):
        return -_eval_vec(e.operand, env)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        x = _eval_vec(e.arg, env)
        if fn.domain is not None:
            bad = ~fn.domain(x)
            if np.any(bad):
                _fail(e.func, bad, env, fn.detail)
        return _check_vec(e.func, fn.vector(x), env)
    if isinstance(e, BinOp):
        a = _eval_vec(e.left, env)
        b = _eval_vec(e.right, env)
        if e.op == "+":
            return _check_vec("+", a + b, env)
        if e.op == "-":
            return _check_vec("-", a - b, env)
        if e.op == "*":
            return _check_vec("*", a * b, env)
        if e.op == "/":
            zero = b == 0.0
            if np.any(zero):
                _fail("/", zero, env, "division by zero")
            return _check_vec("/", a / b, env)
        if e.op == "^":
            not_real = (a < 0) & (np.floor(b) != b)
            if np.any(not_real):
                _fail("^", not_real, env, "negative base with non-integer exponent")
            pole = (a == 0) & (b < 0)
            if np.any(pole):
                _fail("^", pole, env, "zero to a negative power")
            return _check_vec("^", np.power(a, b), env)
    raise TypeError(f"not an expression node: {e!r}")


# --- printing ---


def to_source(e: Expr) -> str:
    """Canonical serializer; ``parse(to_source(e))`` rebuilds an equal tree."""
    if isinstance(e, Const):
        text = repr(float(e.value))
        return f"({text})" if math.copysign(1.0, e.value) < 0 else text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> Set[str]:
    """Names of the variables the tree actually uses."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, Call):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    return set()

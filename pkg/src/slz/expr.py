"""Coefficient expressions: a tiny recursive-descent parser, evaluator and printer.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("-")? power
    power  := atom ("^" factor)?
    atom   := number | "x" | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"

``^`` binds tighter than unary minus and is right-associative, so ``-x^2``
is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "ExprNode",
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "ExprOverflowError",
    "FUNCTIONS",
    "parse_expr",
    "eval_expr",
    "pretty",
    "compile_expr",
]

FUNCTIONS = {"exp": 1, "ln": 1, "sqrt": 1, "abs": 1, "sin": 1, "cos": 1, "pow": 2}


class ExprError(ValueError):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset


class ExprDomainError(ExprError):
    pass


class ExprOverflowError(ExprError):
    pass


@dataclass(frozen=True)
class ExprNode:
    """Immutable parse-tree node.

    ``kind`` is one of ``constant``, ``variable``, ``parameter``, ``unary``,
    ``binary`` or ``call``. ``payload`` holds the number, the parameter or
    function name, or the operator symbol.
    """

    kind: str
    payload: object = None
    children: tuple["ExprNode", ...] = ()

    def params(self) -> set[str]:
        out = {self.payload} if self.kind == "parameter" else set()
        for ch in self.children:
            out |= ch.params()
        return out


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", len(src[:pos].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), len(src[:start].encode())))
        pos = m.end()
    toks.append(("end", "", len(src.encode())))
    return toks


class _Parser:
    def __init__(self, src: str, declared: set[str]):
        self.toks = _tokenize(src)
        self.i = 0
        self.declared = declared

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.take()
        if text != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", off)

    def expr(self) -> ExprNode:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = ExprNode("binary", op, (node, self.term()))
        return node

    def term(self) -> ExprNode:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = ExprNode("binary", op, (node, self.factor()))
        return node

    def factor(self) -> ExprNode:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return ExprNode("unary", "-", (self.power(),))
        return self.power()

    def power(self) -> ExprNode:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return ExprNode("binary", "^", (base, self.factor()))
        return base

    def atom(self) -> ExprNode:
        kind, text, off = self.take()
        if kind == "num":
            return ExprNode("constant", float(text))
        if kind == "id":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", off)
                self.take()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ExprSyntaxError(f"{text} takes {FUNCTIONS[text]} argument(s)", off)
                return ExprNode("call", text, tuple(args))
            if text == "x":
                return ExprNode("variable", "x")
            if text not in self.declared:
                raise ExprError(f"undeclared parameter {text!r} at offset {off}")
            return ExprNode("parameter", text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse_expr(src: str, declared_params: Iterable[str] = ()) -> ExprNode:
    """Parse ``src`` into an :class:`ExprNode` tree.

    Raises:
        ExprSyntaxError: malformed input; ``offset`` is the byte offset of the
            offending token.
        ExprError: a name that is neither ``x``, a function, nor a declared
            parameter.
    """
    p = _Parser(src, set(declared_params))
    node = p.expr()
    kind, text, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {text!r}", off)
    return node


def _check(v: float) -> float:
    if isinstance(v, complex):
        raise ExprDomainError("complex result")
    if math.isnan(v):
        raise ExprDomainError("undefined result")
    if math.isinf(v):
        raise ExprOverflowError("overflow")
    return v


def eval_expr(e: ExprNode, x: float, params: Mapping[str, float] | None = None) -> float:
    """Evaluate ``e`` at the real point ``x`` with real arithmetic.

    Domain violations (``ln`` or ``sqrt`` of a negative number, division by
    zero, non-real powers) raise :class:`ExprDomainError`; results that do
    not fit in a double raise :class:`ExprOverflowError`.
    """
    params = params or {}
    k = e.kind
    if k == "constant":
        return float(e.payload)
    if k == "variable":
        return float(x)
    if k == "parameter":
        return float(params[e.payload])
    if k == "unary":
        return -eval_expr(e.children[0], x, params)
    vals = [eval_expr(c, x, params) for c in e.children]
    try:
        if k == "binary":
            a, b = vals
            op = e.payload
            if op == "+":
                return _check(a + b)
            if op == "-":
                return _check(a - b)
            if op == "*":
                return _check(a * b)
            if op == "/":
                return _check(a / b)
            return _check(_pow(a, b))
        name = e.payload
        if name == "pow":
            return _check(_pow(*vals))
        (a,) = vals
        if name == "exp":
            return _check(math.exp(a))
        if name == "ln":
            if a <= 0:
                raise ExprDomainError(f"ln of nonpositive value {a!r}")
            return math.log(a)
        if name == "sqrt":
            if a < 0:
                raise ExprDomainError(f"sqrt of negative value {a!r}")
            return math.sqrt(a)
        if name == "abs":
            return abs(a)
        if name == "sin":
            return _check(math.sin(a))
        return _check(math.cos(a))
    except ZeroDivisionError as exc:
        raise ExprDomainError(str(exc)) from None
    except OverflowError as exc:
        raise ExprOverflowError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, ExprError):
            raise
        raise ExprDomainError(str(exc)) from None


def _pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise ExprDomainError(f"non-real power {a!r}^{b!r}")
    return a**b


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: ExprNode) -> int:
    if e.kind == "binary":
        return _PREC[e.payload]
    if e.kind == "unary":
        return 3
    return 5


def _num(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def pretty(e: ExprNode) -> str:
    """Render with the minimal parentheses needed to re-parse to the same tree."""
    k = e.kind
    if k == "constant":
        return _num(e.payload)
    if k in ("variable", "parameter"):
        return str(e.payload)
    if k == "call":
        return f"{e.payload}({', '.join(pretty(c) for c in e.children)})"
    if k == "unary":
        (c,) = e.children
        s = pretty(c)
        return "-" + (s if _prec(c) >= 4 else f"({s})")
    a, b = e.children
    op = e.payload
    sa, sb = pretty(a), pretty(b)
    if op == "^":
        sa = sa if _prec(a) == 5 else f"({sa})"
        sb = sb if _prec(b) >= 3 else f"({sb})"
        return f"{sa}^{sb}"
    p = _PREC[op]
    sa = sa if _prec(a) >= p else f"({sa})"
    sb = sb if _prec(b) > p else f"({sb})"
    return f"{sa} {op} {sb}"


_NP = {"exp": "np.exp", "ln": "np.log", "sqrt": "np.sqrt", "abs": "np.abs", "sin": "np.sin", "cos": "np.cos"}


def _source(e: ExprNode, params: Mapping[str, float]) -> str:
    k = e.kind
    if k == "constant":
        return repr(float(e.payload))
    if k == "variable":
        return "x"
    if k == "parameter":
        return f"({float(params[e.payload])!r})"
    if k == "unary":
        return f"(-{_source(e.children[0], params)})"
    if k == "call":
        args = [_source(c, params) for c in e.children]
        if e.payload == "pow":
            return f"np.power({args[0]}, {args[1]})"
        return f"{_NP[e.payload]}({args[0]})"
    a, b = (_source(c, params) for c in e.children)
    if e.payload == "^":
        return f"np.power({a}, {b})"
    return f"({a} {e.payload} {b})"


def compile_expr(e: ExprNode, params: Mapping[str, float] | None = None) -> Callable:
    """Return a fast numpy callable ``f(x)`` for scalars or arrays.

    Parameters are frozen into the generated code. The callable does not
    check for non-finite output; callers that need the checked semantics use
    :func:`eval_expr`.
    """
    params = dict(params or {})
    missing = e.params() - set(params)
    if missing:
        raise ExprError(f"undeclared parameter(s) {sorted(missing)}")
    src = _source(e, params)
    if e.params() == set() and "x" not in src:
        const = float(eval(src, {"np": np}))  # noqa: S307 - generated from a parse tree

        def f(x, _c=const):
            if isinstance(x, float):
                return _c
            return _c + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else _c

        return f
    return eval(f"lambda x: {src}", {"np": np})  # noqa: S307 - generated from a parse tree

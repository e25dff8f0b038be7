"""Small expression language for initial profiles and nonlinearities.

Expressions are parsed once into an immutable tree and evaluated over complex
numbers, numpy arrays or :class:`Dual` numbers.  Evaluating at a dual seed
gives the exact first derivative; nesting duals gives higher derivatives.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := number | 'i' | 'pi' | VAR | 'exp' '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``.  Non-integer powers use the
principal branch ``a^b = exp(b Log a)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

__all__ = [
    "Dual",
    "DualValue",
    "ProfileAst",
    "ProfileSyntaxError",
    "EvaluationError",
    "parse",
    "to_source",
    "evaluate",
    "eval_dual",
    "derivatives",
    "dexp",
    "dlog",
]


class ProfileSyntaxError(ValueError):
    """Raised for malformed expressions; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int, source: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.source = source


class EvaluationError(ArithmeticError):
    """Division by zero, 0 to a non-positive power, log of zero."""


# ---------------------------------------------------------------------------
# Dual numbers


def _base_value(v):
    while isinstance(v, Dual):
        v = v.value
    return v


def _any_zero(v) -> bool:
    return bool(np.any(_base_value(v) == 0))


class Dual:
    """Forward-mode dual number ``value + deriv * e`` with ``e**2 = 0``.

    Components may be complex scalars, numpy arrays or other duals, so
    ``Dual(Dual(x, 1), Dual(1, 0))`` carries a second derivative.
    """

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __neg__(self):
        return Dual(-self.value, -self.deriv)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.deriv + other.deriv)
        return Dual(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.deriv - other.deriv)
        return Dual(self.value - other, self.deriv)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value * other.value,
                        self.value * other.deriv + self.deriv * other.value)
        return Dual(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if _any_zero(other.value):
                raise EvaluationError("division by zero")
            q = self.value / other.value
            return Dual(q, (self.deriv - q * other.deriv) / other.value)
        if _any_zero(other):
            raise EvaluationError("division by zero")
        return Dual(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        if _any_zero(self.value):
            raise EvaluationError("division by zero")
        q = other / self.value
        return Dual(q, -q * self.deriv / self.value)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __rpow__(self, base):
        return power(base, self)


@dataclass(frozen=True)
class DualValue:
    """Value and exact first derivative of an expression at a point."""

    value: Any
    derivative: Any


def dexp(z):
    if isinstance(z, Dual):
        e = dexp(z.value)
        return Dual(e, e * z.deriv)
    return np.exp(z)


def dlog(z):
    if isinstance(z, Dual):
        if _any_zero(z.value):
            raise EvaluationError("log of zero")
        return Dual(dlog(z.value), z.deriv / z.value)
    if np.any(z == 0):
        raise EvaluationError("log of zero")
    return np.log(z)


def _integer_exponent(b):
    if isinstance(b, Dual) or isinstance(b, np.ndarray):
        return None
    b = complex(b)
    if b.imag == 0 and b.real == int(b.real) and abs(b.real) < 2**31:
        return int(b.real)
    return None


def _int_power(a, n: int):
    if n == 0:
        return 1.0 + 0j if not isinstance(a, np.ndarray) else np.ones_like(a)
    if n < 0:
        if _any_zero(a):
            raise EvaluationError("0 raised to a negative power")
        return 1.0 / _int_power(a, -n)
    if isinstance(a, Dual):
        return Dual(_int_power(a.value, n), n * _int_power(a.value, n - 1) * a.deriv)
    return a**n


def power(a, b):
    """``a ** b`` with integer fast path and principal branch otherwise."""
    n = _integer_exponent(b)
    if n is not None:
        return _int_power(a, n)
    if _any_zero(a):
        bv = _base_value(b)
        if not isinstance(b, Dual) and np.all(np.real(bv) > 1):
            # 0**b with Re b > 1: value and first derivative vanish
            return a * 0
        if not isinstance(a, Dual) and not isinstance(b, Dual) and np.real(complex(b)) > 0:
            # plain values: 0**b = 0 when Re b > 0
            if not isinstance(a, np.ndarray):
                return 0j
            out = np.zeros(a.shape, dtype=complex)
            nz = a != 0
            out[nz] = np.exp(b * np.log(a[nz].astype(complex)))
            return out
        raise EvaluationError("0 raised to a non-integer power")
    return dexp(b * dlog(a))


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "i" or "pi"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Const, Var, Neg, BinOp, Call]

_CONSTANTS = {"i": 1j, "pi": np.pi}
_FUNCTIONS = {"exp": dexp}


@dataclass(frozen=True)
class ProfileAst:
    """Immutable parsed expression in one variable.

    Calling the tree evaluates it: ``ast(x)`` accepts complex scalars,
    numpy arrays and duals.
    """

    root: Node
    variable: str = "x"
    source: str = ""

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, ProfileAst):
            return NotImplemented
        return self.root == other.root and self.variable == other.variable

    def __hash__(self):
        return hash((self.root, self.variable))

    def __str__(self):
        return to_source(self)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ProfileSyntaxError(f"unexpected character {src[start]!r}", start, src)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if text == "**":
            text = "^"
        tokens.append((kind, text, start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variable: str):
        self.src = src
        self.variable = variable
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, t, off = self.peek()
        if t != text or kind == "end":
            what = "end of input" if kind == "end" else repr(t)
            raise ProfileSyntaxError(f"expected {text!r}, found {what}", off, self.src)
        self.take()

    def parse(self):
        node = self.expr()
        kind, t, off = self.peek()
        if kind != "end":
            raise ProfileSyntaxError(f"unexpected token {t!r}", off, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, t, _ = self.peek()
        if kind == "op" and t == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and t == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, t, off = self.take()
        if kind == "num":
            return Num(float(t))
        if kind == "name":
            if t in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t, arg)
            if t in _CONSTANTS:
                return Const(t)
            if t == self.variable:
                return Var(t)
            raise ProfileSyntaxError(f"unknown identifier {t!r}", off, self.src)
        if kind == "op" and t == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(t)
        raise ProfileSyntaxError(f"unexpected {what}", off, self.src)


def parse(src: str, variable: str = "x") -> ProfileAst:
    """Parse ``src`` into a :class:`ProfileAst` over ``variable``."""
    if not src or not src.strip():
        raise ProfileSyntaxError("empty expression", 0, src)
    if variable in _CONSTANTS or variable in _FUNCTIONS:
        raise ValueError(f"variable name {variable!r} is reserved")
    return ProfileAst(_Parser(src, variable).parse(), variable, src)


def _node_source(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_node_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_node_source(node.left)} {node.op} {_node_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({_node_source(node.arg)})"
    raise TypeError(node)


def to_source(ast: ProfileAst) -> str:
    """Fully parenthesised source; ``parse(to_source(a)) == a``."""
    return _node_source(ast.root)


def _eval(node: Node, x):
    if isinstance(node, Num):
        return complex(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return _CONSTANTS[node.name] + 0j
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Call):
        return _FUNCTIONS[node.func](_eval(node.arg, x))
    a = _eval(node.left, x)
    if node.op == "^":
        return power(a, _exponent(node.right, x))
    b = _eval(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if isinstance(b, Dual):
        return a / b
    if _any_zero(b):
        raise EvaluationError("division by zero")
    return a / b


def _exponent(node: Node, x):
    # keep literal exponents exact so integer powers take the fast path
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Num):
        return -node.operand.value
    return _eval(node, x)


def _as_complex(x):
    if isinstance(x, Dual):
        return Dual(_as_complex(x.value), _as_complex(x.deriv))
    if isinstance(x, np.ndarray):
        return x.astype(complex)
    return complex(x)


def evaluate(ast: ProfileAst, x):
    """Evaluate ``ast`` at ``x`` (scalar, array or dual)."""
    with np.errstate(all="ignore"):
        out = _eval(ast.root, _as_complex(x))
    if isinstance(x, np.ndarray) and not isinstance(out, (np.ndarray, Dual)):
        out = np.full(x.shape, out, dtype=complex)
    return out


def _const(c, zero, order):
    if order == 0:
        return c
    return Dual(_const(c, zero, order - 1), _const(zero, zero, order - 1))


def _seed(x, order: int):
    if order == 0:
        return x
    one = np.ones_like(x) if isinstance(x, np.ndarray) else 1.0 + 0j
    return Dual(_seed(x, order - 1), _const(one, one * 0, order - 1))


def _component(r, n_values: int, n_derivs: int):
    for _ in range(n_values):
        r = r.value if isinstance(r, Dual) else r
    for _ in range(n_derivs):
        r = r.deriv if isinstance(r, Dual) else r * 0
    return r


def derivatives(fn, x, order: int = 1):
    """Return ``[fn(x), fn'(x), ..., fn^(order)(x)]`` via nested duals.

    ``fn`` is any callable built from dual-aware operations (a
    :class:`ProfileAst`, or a composition of them).
    """
    x = _as_complex(x)
    with np.errstate(all="ignore"):
        r = fn(_seed(x, order))
    out = []
    for k in range(order + 1):
        v = _component(r, order - k, k)
        if isinstance(x, np.ndarray) and not isinstance(v, np.ndarray):
            v = np.full(x.shape, v, dtype=complex)
        out.append(v)
    return out


def eval_dual(ast, x) -> DualValue:
    """Value and exact derivative of ``ast`` at ``x``."""
    value, deriv = derivatives(ast, x, 1)
    return DualValue(value, deriv)

"""External potentials given as closed-form expressions of x1 (and x2).

A tiny expression language covers every potential used by the solvers:
variables ``x1``, ``x2``, the constant ``pi``, numeric literals, the
functions ``sin``, ``cos``, ``exp``, and the operators ``+ - * / ^``
with unary minus.  Expressions are parsed to an AST, differentiated
symbolically, and evaluated with numpy so gradients are exact rather
than finite-differenced.
"""

import dataclasses
import math
import re

import numpy as np

__all__ = [
    "ParseError",
    "ExprAst",
    "Num",
    "Var",
    "Pi",
    "Unary",
    "Binary",
    "parse_expression",
    "derivative",
    "to_source",
    "Potential",
    "builtin_potential",
    "BUILTIN_POTENTIALS",
    "max_value",
]


class ParseError(ValueError):
    """Malformed expression text.  ``position`` is the byte offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


# ---------------------------------------------------------------------------
# AST

class ExprAst:
    """Base class for expression nodes."""

    __slots__ = ()


@dataclasses.dataclass(frozen=True)
class Num(ExprAst):
    value: float


@dataclasses.dataclass(frozen=True)
class Var(ExprAst):
    name: str  # "x1" or "x2"


@dataclasses.dataclass(frozen=True)
class Pi(ExprAst):
    pass


@dataclasses.dataclass(frozen=True)
class Unary(ExprAst):
    op: str  # "neg", "sin", "cos", "exp"
    arg: ExprAst


@dataclasses.dataclass(frozen=True)
class Binary(ExprAst):
    op: str  # "+", "-", "*", "/", "^"
    left: ExprAst
    right: ExprAst


_FUNCTIONS = ("sin", "cos", "exp")


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value:
            shown = text if text else "end of input"
            raise ParseError(f"expected {value!r}, found {shown!r}", pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r} after expression", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[1] == "^":
            self.advance()
            node = Binary("^", node, self.power_operand())
        return node

    def power_operand(self):
        # Exponents bind a leading minus: x^-2 parses as x^(-2)
        if self.peek()[1] == "-":
            self.advance()
            return Unary("neg", self.power_operand())
        return self.atom()

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "number":
            return Num(float(text))
        if kind == "name":
            if text in ("x1", "x2"):
                return Var(text)
            if text == "pi":
                return Pi()
            if text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            raise ParseError(f"unknown name {text!r}", pos)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        shown = text if text else "end of input"
        raise ParseError(f"expected a value, found {shown!r}", pos)


def parse_expression(text):
    """Parse expression text to an ``ExprAst``.

    Raises ``ParseError`` (with ``.position``) on malformed input.
    """
    if not isinstance(text, str):
        raise TypeError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation

def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Var):
        val = env.get(node.name)
        if val is None:
            raise ValueError(f"expression uses {node.name} but no value was supplied")
        return val
    if isinstance(node, Unary):
        a = _eval(node.arg, env)
        if node.op == "neg":
            return -a
        if node.op == "sin":
            return np.sin(a)
        if node.op == "cos":
            return np.cos(a)
        return np.exp(a)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return a ** b


def evaluate(node, x1, x2=None):
    """Evaluate an AST at scalar or array arguments (numpy broadcasting)."""
    env = {"x1": x1}
    if x2 is not None:
        env["x2"] = x2
    out = _eval(node, env)
    if np.ndim(out) == 0 and np.ndim(x1) > 0:
        out = np.full(np.shape(x1), float(out))
    return out


def uses_variable(node, name):
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Unary):
        return uses_variable(node.arg, name)
    if isinstance(node, Binary):
        return uses_variable(node.left, name) or uses_variable(node.right, name)
    return False


# ---------------------------------------------------------------------------
# Symbolic differentiation

def _is_zero(node):
    return isinstance(node, Num) and node.value == 0.0


def _is_one(node):
    return isinstance(node, Num) and node.value == 1.0


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Binary("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return Num(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Binary("*", a, b)


def _div(a, b):
    if _is_zero(a):
        return Num(0.0)
    if _is_one(b):
        return a
    return Binary("/", a, b)


def derivative(node, var="x1"):
    """Symbolic partial derivative with respect to ``var``.

    Accepts an AST or a ``Potential`` (differentiating its value
    expression).  The exponent of ``^`` must not involve the variables
    (the power rule with constant exponent is all the solvers need).
    """
    if isinstance(node, Potential):
        node = node.expr
    if isinstance(node, (Num, Pi)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Unary):
        da = derivative(node.arg, var)
        if node.op == "neg":
            return _neg(da)
        if node.op == "sin":
            return _mul(Unary("cos", node.arg), da)
        if node.op == "cos":
            return _neg(_mul(Unary("sin", node.arg), da))
        return _mul(Unary("exp", node.arg), da)
    dl = derivative(node.left, var)
    dr = derivative(node.right, var)
    if node.op == "+":
        return _add(dl, dr)
    if node.op == "-":
        return _sub(dl, dr)
    if node.op == "*":
        return _add(_mul(dl, node.right), _mul(node.left, dr))
    if node.op == "/":
        num = _sub(_mul(dl, node.right), _mul(node.left, dr))
        return _div(num, Binary("^", node.right, Num(2.0)))
    # power rule: d(f^c) = c * f^(c-1) * f'
    if uses_variable(node.right, "x1") or uses_variable(node.right, "x2"):
        raise ValueError("cannot differentiate a power with a variable exponent")
    exponent = node.right
    if isinstance(exponent, Num):
        new_exp = Num(exponent.value - 1.0)
    else:
        new_exp = _sub(exponent, Num(1.0))
    if _is_one(new_exp) if isinstance(new_exp, Num) else False:
        power = node.left
    else:
        power = Binary("^", node.left, new_exp)
    return _mul(_mul(exponent, power), dl)


def substitute(node, mapping):
    """Replace variables by sub-expressions; ``mapping`` maps name -> AST."""
    if isinstance(node, Var) and node.name in mapping:
        return mapping[node.name]
    if isinstance(node, Unary):
        return Unary(node.op, substitute(node.arg, mapping))
    if isinstance(node, Binary):
        return Binary(node.op, substitute(node.left, mapping),
                      substitute(node.right, mapping))
    return node


# ---------------------------------------------------------------------------
# Printing

def _precedence(node):
    if isinstance(node, Binary):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return 3
    return 9


def to_source(node):
    """Render an AST back to expression text (parseable by this module)."""
    if isinstance(node, Num):
        if node.value == int(node.value) and abs(node.value) < 1e15:
            return repr(int(node.value))
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = to_source(node.arg)
            if _precedence(node.arg) < 3 or isinstance(node.arg, Unary) and node.arg.op == "neg":
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({to_source(node.arg)})"
    lhs, rhs = to_source(node.left), to_source(node.right)
    p = _precedence(node)
    if _precedence(node.left) < p or (node.op == "^" and isinstance(node.left, Binary)):
        lhs = f"({lhs})"
    if _precedence(node.right) < p or (node.op in ("-", "/", "^") and _precedence(node.right) == p):
        rhs = f"({rhs})"
    return f"{lhs} {node.op} {rhs}" if node.op in "+-" else f"{lhs}{node.op}{rhs}"


# ---------------------------------------------------------------------------
# Potential

@dataclasses.dataclass(frozen=True)
class Potential:
    """A potential V with exact symbolic gradient.

    ``dim`` is 1 or 2.  ``grad`` holds the partial-derivative ASTs, one
    per dimension.  Instances are callable: ``V(x1)`` or ``V(x1, x2)``.
    """

    dim: int
    expr: ExprAst
    grad: tuple
    source: str = ""

    @classmethod
    def from_expression(cls, text, dim=None):
        expr = parse_expression(text)
        if dim is None:
            dim = 2 if uses_variable(expr, "x2") else 1
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim!r}")
        if dim == 1 and uses_variable(expr, "x2"):
            raise ValueError("a 1D potential cannot use x2")
        names = ("x1", "x2")[:dim]
        grad = tuple(derivative(expr, v) for v in names)
        return cls(dim=dim, expr=expr, grad=grad, source=text)

    def __call__(self, x1, x2=None):
        return self.value(x1, x2)

    def value(self, x1, x2=None):
        self._check_args(x2)
        return evaluate(self.expr, x1, x2)

    def d1(self, x1, x2=None):
        """Partial derivative with respect to x1."""
        self._check_args(x2)
        return evaluate(self.grad[0], x1, x2)

    def gradient(self, x1, x2=None):
        self._check_args(x2)
        return tuple(evaluate(g, x1, x2) for g in self.grad)

    def _check_args(self, x2):
        if self.dim == 2 and x2 is None:
            raise ValueError("this potential needs both x1 and x2")

    def reflected(self):
        """The potential x1 -> V(1 - x1) (1D only)."""
        if self.dim != 1:
            raise ValueError("reflection is defined for 1D potentials")
        flipped = substitute(self.expr, {"x1": Binary("-", Num(1.0), Var("x1"))})
        return Potential(dim=1, expr=flipped,
                         grad=(derivative(flipped, "x1"),),
                         source=to_source(flipped))


BUILTIN_POTENTIALS = {
    "sine": "sin(2*pi*x1)",
    "ramp": "-x1",
    "ramp-bump": "-x1+exp(-x1^2)",
    "barrier": "exp(-(x1-0.5)^2)",
    "descent": "1-x1",
}


def builtin_potential(name):
    """One of the named stock potentials (see ``BUILTIN_POTENTIALS``)."""
    try:
        text = BUILTIN_POTENTIALS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_POTENTIALS))
        raise ValueError(f"unknown potential {name!r}; known: {known}") from None
    return Potential.from_expression(text, dim=1)


# ---------------------------------------------------------------------------
# Extrema

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(fn, lo, hi, iters=80):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        if b - a < 1e-14:
            break
    xm = 0.5 * (a + b)
    return fn(xm), xm


def max_value(p, interval=(0.0, 1.0)):
    """Maximum of a 1D potential (or callable) on a closed interval.

    Returns ``(vmax, argmax)``.  Dense sampling locates the best bucket
    and golden-section search refines it, so any smooth potential with
    finitely many local maxima is handled.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError(f"empty interval {interval!r}")
    fn = p.value if isinstance(p, Potential) else p
    xs = np.linspace(lo, hi, 10001)
    vals = np.asarray(fn(xs), dtype=float)
    k = int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, len(xs) - 1)]
    scalar = lambda x: float(fn(x))
    vmax, xmax = _golden_max(scalar, a, b)
    if vals[k] > vmax:
        vmax, xmax = float(vals[k]), float(xs[k])
    return vmax, xmax


def min_value(p, interval=(0.0, 1.0)):
    """Minimum of a 1D potential (or callable) on a closed interval."""
    fn = p.value if isinstance(p, Potential) else p
    vmax, xmax = max_value(lambda x: -np.asarray(fn(x), dtype=float), interval)
    return -vmax, xmax

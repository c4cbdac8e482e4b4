"""A small expression language for potentials.

Grammar (standard precedence, ``^`` binds tightest and is right-associative,
unary minus binds looser than ``^`` so ``-x^2`` is ``-(x^2)``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x`` and, in two dimensions, ``y``.  Functions are
``exp``, ``ln``, ``sin``, ``cos`` and ``sqrt``.  Nodes evaluate on floats,
numpy arrays or :class:`~metastable.dual.Dual` numbers alike.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import DomainError, ExpressionError

VARIABLES = ("x", "y")
FUNCTIONS = {
    "exp": dual.exp,
    "ln": dual.log,
    "sin": dual.sin,
    "cos": dual.cos,
    "sqrt": dual.sqrt,
}
CONSTANTS = {"pi": math.pi}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group(kind)
            tokens.append(Token(kind, "^" if tok == "**" else tok, pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# ---- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float

    def evaluate(self, env):
        return self.value

    def constant(self):
        return self.value

    def variables(self):
        return set()


@dataclass(frozen=True)
class Var:
    name: str

    def evaluate(self, env):
        return env[self.name]

    def constant(self):
        return None

    def variables(self):
        return {self.name}


@dataclass(frozen=True)
class Neg:
    operand: object

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def constant(self):
        c = self.operand.constant()
        return None if c is None else -c

    def variables(self):
        return self.operand.variables()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def evaluate(self, env):
        a = self.left.evaluate(env)
        if self.op == "^":
            c = self.right.constant()
            return dual.power(a, c if c is not None else self.right.evaluate(env))
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if isinstance(b, dual.Dual) or isinstance(a, dual.Dual):
            return a * dual.reciprocal(b)
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        return a / b

    def constant(self):
        a, b = self.left.constant(), self.right.constant()
        if a is None or b is None:
            return None
        try:
            return float(self.evaluate({}))
        except DomainError:
            return None

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Call:
    name: str
    arg: object

    def evaluate(self, env):
        return FUNCTIONS[self.name](self.arg.evaluate(env))

    def constant(self):
        if self.arg.constant() is None:
            return None
        try:
            return float(self.evaluate({}))
        except DomainError:
            return None

    def variables(self):
        return self.arg.variables()


# ---- parser ---------------------------------------------------------------

class _Parser:
    def __init__(self, text, dimension):
        self.tokens = tokenize(text)
        self.i = 0
        self.allowed = VARIABLES[:dimension]

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self, text=None):
        tok = self.tok
        if text is not None and tok.text != text:
            found = tok.text or "end of input"
            raise ExpressionError(f"expected {text!r}, found {found!r}", tok.pos)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            op = self.take().text
            operand = self.unary()
            return Neg(operand) if op == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(tok.text, arg)
            if tok.text in CONSTANTS:
                return Num(CONSTANTS[tok.text])
            if tok.text in self.allowed:
                return Var(tok.text)
            if tok.text in VARIABLES:
                raise ExpressionError(
                    f"variable {tok.text!r} needs dimension 2", tok.pos)
            raise ExpressionError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        found = tok.text or "end of input"
        raise ExpressionError(f"unexpected {found!r}", tok.pos)


def parse(text, dimension=1):
    """Parse ``text`` into an AST; ``dimension`` decides whether ``y`` is legal."""
    if dimension not in (1, 2):
        raise ExpressionError(f"dimension must be 1 or 2, got {dimension}")
    return _Parser(text, dimension).parse()

"""Arithmetic expressions for problem coefficients.

The potential q and the deviation (delay) function are supplied as strings
in a one-variable arithmetic language:

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := NUMBER | "x" | "pi" | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := "sin" | "cos" | "exp" | "abs" | "sqrt"

"^" is right-associative and unary minus binds tighter than the base of
"^": "-2^2" is (-2)^2 = 4, while "2^-3" is 2^(-3).  NUMBER is a plain
decimal literal ("2", "0.5", ".5", "1e-3").

Parsed expressions are compiled to a flat postfix program (an int opcode
array plus a float constant pool).  The integrator kernels interpret that
program directly so coefficient evaluation costs no Python dispatch in the
hot loop; `CoefficientExpr.evaluate` interprets the same program with the
same operation order, which keeps every evaluation path bit-identical for
a given input.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CoefficientExpr",
    "DomainError",
    "ParseError",
    "eval_expression",
    "parse_expression",
]

# Opcodes of the postfix program.  _core.pyx mirrors these numbers; a test
# pins the mapping so the two cannot drift apart silently.
OP_CONST = 0   # push consts[arg]
OP_X = 1       # push x
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_ABS = 11
OP_SQRT = 12

_FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "abs": OP_ABS, "sqrt": OP_SQRT}
_BINARY_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}

# The kernels evaluate on a fixed-size stack; the compiler refuses
# anything deeper so overflow is impossible at run time.
MAX_STACK = 64


class ParseError(ValueError):
    """Malformed expression text; `position` is the 0-based offset."""

    def __init__(self, message, position):
        super().__init__("%s at offset %d" % (message, position))
        self.position = position


class DomainError(ValueError):
    """Evaluation left the real domain (division by zero, sqrt of a negative)."""

    def __init__(self, message, x):
        super().__init__("%s at x = %r" % (message, x))
        self.x = x


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<comma>,)"
    r"|(?P<bad>\S))"
)


def _tokenize(text):
    """Yield (kind, value, position) triples; kind 'end' terminates."""
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            break
        if m.lastgroup == "bad":
            raise ParseError("unexpected character %r" % m.group("bad"), m.start("bad"))
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        elif m.lastgroup == "comma":
            tokens.append(("comma", ",", m.start("comma")))
        else:
            op = m.group("op")
            tokens.append(("op", op, m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser producing tuple trees.

    Tree nodes: ('num', v), ('x',), ('neg', child), ('call', name, child),
    (op, left, right) for op in +-*/^.
    """

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

    def parse(self):
        tree = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError("unexpected %r" % value, pos)
        return tree

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.advance()
                node = (value, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.advance()
                node = (value, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.unary()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            # right-associative: the exponent is a whole factor
            node = ("^", node, self.factor())
        return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return ("neg", self.unary())
        return self.atom()

    def atom(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return ("num", value)
        if kind == "name":
            if value == "x":
                return ("x",)
            if value == "pi":
                return ("num", math.pi)
            if value in _FUNC_OPS:
                return self.call(value, pos)
            raise ParseError("unknown identifier %r" % value, pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_rparen()
            return node
        raise ParseError("expected expression", pos)

    def call(self, name, name_pos):
        kind, value, pos = self.advance()
        if not (kind == "op" and value == "("):
            raise ParseError("expected '(' after function %r" % name, pos)
        node = self.expr()
        kind, value, pos = self.peek()
        if kind == "comma":
            raise ParseError("function %r takes exactly one argument" % name, pos)
        self.expect_rparen()
        return ("call", name, node)

    def expect_rparen(self):
        kind, value, pos = self.advance()
        if not (kind == "op" and value == ")"):
            raise ParseError("expected ')'", pos)


def _compile(tree):
    """Flatten a tuple tree into (ops, consts, stack_need) postfix arrays."""
    ops = []
    consts = []

    def emit(node):
        tag = node[0]
        if tag == "num":
            try:
                idx = consts.index(node[1])
            except ValueError:
                idx = len(consts)
                consts.append(node[1])
            ops.append((OP_CONST, idx))
        elif tag == "x":
            ops.append((OP_X, 0))
        elif tag == "neg":
            emit(node[1])
            ops.append((OP_NEG, 0))
        elif tag == "call":
            emit(node[2])
            ops.append((_FUNC_OPS[node[1]], 0))
        else:
            emit(node[1])
            emit(node[2])
            ops.append((_BINARY_OPS[tag], 0))

    emit(tree)

    depth = 0
    need = 0
    for op, _ in ops:
        if op in (OP_CONST, OP_X):
            depth += 1
        elif op in (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW):
            depth -= 1
        need = max(need, depth)
    if need > MAX_STACK:
        raise ParseError("expression too deeply nested (needs stack %d)" % need, 0)

    return (
        np.array(ops, dtype=np.intc).reshape(len(ops), 2),
        np.array(consts, dtype=np.float64),
        need,
    )


@dataclass(frozen=True, eq=False)
class CoefficientExpr:
    """A parsed coefficient function of one variable.

    `program`/`consts` are the compiled postfix form shared with the
    stepping kernels; `tree` is kept for structural equality and
    serialization round-trips (`source` is written back verbatim).
    Equality is structural on the parse tree, so "x + 1" == "x+1".
    """

    source: str
    tree: tuple = field(repr=False)
    program: np.ndarray = field(repr=False)
    consts: np.ndarray = field(repr=False)
    stack_need: int = field(repr=False)

    def evaluate(self, x):
        """Evaluate at a scalar x; raises DomainError off the real domain."""
        x = float(x)
        stack = []
        for op, arg in self.program:
            if op == OP_CONST:
                stack.append(self.consts[arg])
            elif op == OP_X:
                stack.append(x)
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_SIN:
                stack[-1] = math.sin(stack[-1])
            elif op == OP_COS:
                stack[-1] = math.cos(stack[-1])
            elif op == OP_EXP:
                try:
                    stack[-1] = math.exp(stack[-1])
                except OverflowError:
                    raise DomainError("exp overflow", x) from None
            elif op == OP_ABS:
                stack[-1] = abs(stack[-1])
            elif op == OP_SQRT:
                if stack[-1] < 0.0:
                    raise DomainError("sqrt of negative value", x)
                stack[-1] = math.sqrt(stack[-1])
            else:
                b = stack.pop()
                if op == OP_ADD:
                    stack[-1] = stack[-1] + b
                elif op == OP_SUB:
                    stack[-1] = stack[-1] - b
                elif op == OP_MUL:
                    stack[-1] = stack[-1] * b
                elif op == OP_DIV:
                    if b == 0.0:
                        raise DomainError("division by zero", x)
                    stack[-1] = stack[-1] / b
                else:  # OP_POW
                    try:
                        stack[-1] = math.pow(stack[-1], b)
                    except (ValueError, OverflowError) as exc:
                        raise DomainError("pow domain error (%s)" % exc, x) from None
        return float(stack[0])

    def evaluate_many(self, xs):
        """Vectorized evaluation; DomainError names the first offending x."""
        xs = np.asarray(xs, dtype=np.float64)
        stack = []
        with np.errstate(all="ignore"):
            for op, arg in self.program:
                if op == OP_CONST:
                    stack.append(np.full(xs.shape, self.consts[arg]))
                elif op == OP_X:
                    stack.append(xs.copy())
                elif op == OP_NEG:
                    stack[-1] = -stack[-1]
                elif op == OP_SIN:
                    stack[-1] = np.sin(stack[-1])
                elif op == OP_COS:
                    stack[-1] = np.cos(stack[-1])
                elif op == OP_EXP:
                    stack[-1] = np.exp(stack[-1])
                elif op == OP_ABS:
                    stack[-1] = np.abs(stack[-1])
                elif op == OP_SQRT:
                    stack[-1] = np.sqrt(stack[-1])
                else:
                    b = stack.pop()
                    if op == OP_ADD:
                        stack[-1] = stack[-1] + b
                    elif op == OP_SUB:
                        stack[-1] = stack[-1] - b
                    elif op == OP_MUL:
                        stack[-1] = stack[-1] * b
                    elif op == OP_DIV:
                        stack[-1] = stack[-1] / b
                    else:
                        stack[-1] = np.power(stack[-1], b)
        out = stack[0]
        bad = ~np.isfinite(out)
        if bad.any():
            # re-run the scalar path for a precise error message
            self.evaluate(xs.reshape(-1)[np.argmax(bad.reshape(-1))])
            raise DomainError("non-finite value", float(xs.reshape(-1)[np.argmax(bad.reshape(-1))]))
        return out

    def __eq__(self, other):
        if not isinstance(other, CoefficientExpr):
            return NotImplemented
        return self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)


def parse_expression(text):
    """Parse source text into a CoefficientExpr."""
    if not isinstance(text, str):
        raise ParseError("expression must be a string, got %s" % type(text).__name__, 0)
    tree = _Parser(text).parse()
    program, consts, need = _compile(tree)
    return CoefficientExpr(source=text, tree=tree, program=program, consts=consts, stack_need=need)


def eval_expression(expr, x):
    """Evaluate a CoefficientExpr at scalar x."""
    return expr.evaluate(x)

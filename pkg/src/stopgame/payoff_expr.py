"""Payoff expression language: parser, evaluator stay, pretty-printer.

Payoffs G and H are supplied as text expressions in the single variable
``x``.  Grammar (standard precedence, ^ right-associative and binding
tighter than unary minus):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ['^' factor]
    atom   := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

Identifiers resolve to the variable x, a named constant bound at parse
time, or one of the functions max, min (binary) and exp, log, sqrt,
abs, pos (unary), where pos(t) = max(t, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ArityMismatch, EvalDomainError, ExprSyntaxError, UnknownIdentifier

_FUNCTIONS = {"max": 2, "min": 2, "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pos": 1}

# precedence levels for printing
_P_ADD, _P_MUL, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str
    value: float


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple[object, ...]


class _Tokenizer:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        s, i, n = self.source, 0, len(self.source)
        while i < n:
            c = s[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and s[i + 1].isdigit()):
                j = i
                while j < n and (s[j].isdigit() or s[j] == "."):
                    j += 1
                if j < n and s[j] in "eE":
                    k = j + 1
                    if k < n and s[k] in "+-":
                        k += 1
                    if k < n and s[k].isdigit():
                        j = k
                        while j < n and s[j].isdigit():
                            j += 1
                text = s[i:j]
                try:
                    value = float(text)
                except ValueError:
                    raise ExprSyntaxError(i, ["number"], text)
                self.tokens.append(("num", value, i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (s[j].isalnum() or s[j] == "_"):
                    j += 1
                self.tokens.append(("ident", s[i:j], i))
                i = j
                continue
            if c in "+-*/^(),":
                self.tokens.append((c, c, i))
                i += 1
                continue
            raise ExprSyntaxError(i, ["operator", "number", "identifier"], c)
        self.tokens.append(("end", None, n))

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok


class _Parser:
    def __init__(self, source: str, constants: Dict[str, float]):
        self.tk = _Tokenizer(source)
        self.constants = dict(constants or {})

    def parse(self):
        node = self.expr()
        kind, _, pos = self.tk.peek()
        if kind != "end":
            raise ExprSyntaxError(pos, ["operator", "end of input"], self.tk.peek()[1])
        return node

    def expr(self):
        node = self.term()
        while self.tk.peek()[0] in ("+", "-"):
            op = self.tk.next()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tk.peek()[0] in ("*", "/"):
            op = self.tk.next()[0]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.tk.peek()[0] == "-":
            self.tk.next()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tk.peek()[0] == "^":
            self.tk.next()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, value, pos = self.tk.next()
        if kind == "num":
            return Num(value)
        if kind == "(":
            node = self.expr()
            k, _, p = self.tk.next()
            if k != ")":
                raise ExprSyntaxError(p, [")"], k)
            return node
        if kind == "ident":
            if self.tk.peek()[0] == "(":
                if value not in _FUNCTIONS:
                    raise UnknownIdentifier(value, pos)
                self.tk.next()
                args = []
                if self.tk.peek()[0] == ")":
                    self.tk.next()
                else:
                    while True:
                        args.append(self.expr())
                        k, _, p = self.tk.next()
                        if k == ")":
                            break
                        if k != ",":
                            raise ExprSyntaxError(p, [",", ")"], k)
                        if self.tk.peek()[0] == ")":  # trailing comma: arity problem
                            self.tk.next()
                            break
                want = _FUNCTIONS[value]
                if len(args) != want:
                    raise ArityMismatch(value, len(args), want)
                return Call(value, tuple(args))
            if value == "x":
                return Var()
            if value in self.constants:
                return Const(value, float(self.constants[value]))
            raise UnknownIdentifier(value, pos)
        raise ExprSyntaxError(pos, ["number", "identifier", "(", "-"], value)


@dataclass(frozen=True)
class PayoffExpr:
    """A parsed payoff expression; immutable and reentrant to evaluate."""

    source: str
    ast: object

    def __call__(self, x):
        if np.ndim(x) == 0:
            return _eval(self.ast, float(x))
        return _eval_vec(self.ast, np.asarray(x, float))

    def __str__(self):
        return _pretty(self.ast, 0)


def parse(source: str, constants: Optional[Dict[str, float]] = None) -> PayoffExpr:
    return PayoffExpr(source, _Parser(source, constants or {}).parse())


def evaluate(expr: PayoffExpr, x: float) -> float:
    return _eval(expr.ast, float(x))


def _eval(node, x: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise EvalDomainError("/", b)
            return a / b
        # node.op == "^"
        if a < 0.0 and b != math.floor(b):
            raise EvalDomainError("^", a)
        if a == 0.0 and b < 0.0:
            raise EvalDomainError("^", b)
        try:
            r = a ** b
        except OverflowError:
            r = math.inf
        if isinstance(r, complex) or r != r:
            raise EvalDomainError("^", a)
        return r
    if isinstance(node, Call):
        args = [_eval(arg, x) for arg in node.args]
        f = node.func
        if f == "max":
            return max(args)
        if f == "min":
            return min(args)
        if f == "abs":
            return abs(args[0])
        if f == "pos":
            return max(args[0], 0.0)
        if f == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                return math.inf
        if f == "log":
            if args[0] <= 0.0:
                raise EvalDomainError("log", args[0])
            return math.log(args[0])
        if f == "sqrt":
            if args[0] < 0.0:
                raise EvalDomainError("sqrt", args[0])
            return math.sqrt(args[0])
    raise TypeError("unknown AST node %r" % (node,))


def _eval_vec(node, x: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.full_like(x, node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return np.full_like(x, node.value)
    if isinstance(node, Neg):
        return -_eval_vec(node.operand, x)
    if isinstance(node, BinOp):
        a = _eval_vec(node.left, x)
        b = _eval_vec(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0.0):
                raise EvalDomainError("/", 0.0)
            return a / b
        bad = (a < 0) & (b != np.floor(b))
        if np.any(bad):
            raise EvalDomainError("^", float(a[bad][0]))
        if np.any((a == 0) & (b < 0)):
            raise EvalDomainError("^", 0.0)
        with np.errstate(over="ignore"):
            r = a ** b
        if np.any(np.isnan(r)):
            raise EvalDomainError("^", float(a[np.isnan(r)][0]))
        return r
    if isinstance(node, Call):
        args = [_eval_vec(arg, x) for arg in node.args]
        f = node.func
        if f == "max":
            return np.maximum(args[0], args[1])
        if f == "min":
            return np.minimum(args[0], args[1])
        if f == "abs":
            return np.abs(args[0])
        if f == "pos":
            return np.maximum(args[0], 0.0)
        if f == "exp":
            with np.errstate(over="ignore"):
                return np.exp(args[0])
        if f == "log":
            if np.any(args[0] <= 0.0):
                raise EvalDomainError("log", float(args[0][args[0] <= 0.0][0]))
            return np.log(args[0])
        if f == "sqrt":
            if np.any(args[0] < 0.0):
                raise EvalDomainError("sqrt", float(args[0][args[0] < 0.0][0]))
            return np.sqrt(args[0])
    raise TypeError("unknown AST node %r" % (node,))


def _pretty(node, _level=0) -> str:
    text, _prec = _pretty_prec(node)
    return text


def _precedence(node) -> int:
    if isinstance(node, (Num, Var, Const, Call)):
        return _P_ATOM
    if isinstance(node, Neg):
        return _P_NEG
    return {"+": _P_ADD, "-": _P_ADD, "*": _P_MUL, "/": _P_MUL, "^": _P_POW}[node.op]


def _pretty_prec(node):
    if isinstance(node, Num):
        v = node.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v)), _P_ATOM
        return repr(v), _P_ATOM
    if isinstance(node, Var):
        return "x", _P_ATOM
    if isinstance(node, Const):
        return node.name, _P_ATOM
    if isinstance(node, Neg):
        inner, prec = _pretty_prec(node.operand)
        if prec < _P_POW and prec != _P_NEG:
            inner = "(" + inner + ")"
        return "-" + inner, _P_NEG
    if isinstance(node, Call):
        return node.func + "(" + ", ".join(_pretty_prec(a)[0] for a in node.args) + ")", _P_ATOM
    op = node.op
    mine = _precedence(node)
    ltext, lprec = _pretty_prec(node.left)
    rtext, rprec = _pretty_prec(node.right)
    if op == "^":
        if lprec <= _P_POW:  # '^' is right-associative; Neg binds looser
            ltext = "(" + ltext + ")"
        if rprec < _P_POW and rprec != _P_NEG:
            rtext = "(" + rtext + ")"
        return ltext + "^" + rtext, mine
    if lprec < mine:
        ltext = "(" + ltext + ")"
    if rprec <= mine:  # parser is left-associative at each level
        rtext = "(" + rtext + ")"
    return "%s %s %s" % (ltext, op, rtext), mine


@dataclass(frozen=True)
class PayoffSpec:
    """Lower payoff G, optional upper payoff H, and the constant bindings."""

    G: PayoffExpr
    H: Optional[PayoffExpr] = None
    constants: Optional[Dict[str, float]] = None

    @staticmethod
    def from_sources(g_source: str, h_source: Optional[str] = None,
                     constants: Optional[Dict[str, float]] = None) -> "PayoffSpec":
        consts = dict(constants or {})
        g = parse(g_source, consts)
        h = parse(h_source, consts) if h_source is not None else None
        return PayoffSpec(g, h, consts)

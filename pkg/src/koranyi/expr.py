"""A small expression language for boundary-value data.

Grammar (see ``docs/expr.md``)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ["^" ["-"] INT]
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names are ``x1..xn``, ``y1..yn``, ``t``, ``r2`` (``|z|^2``) and ``gauge``
(the Korányi norm); functions are ``sin cos exp sqrt log``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .group import _arr, circular_average
from .jets import Jet2

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log")
CIRCULAR_NAMES = {"t", "r2", "gauge"}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprNameError(ExprSyntaxError):
    """Unknown variable or function name."""


class ExprArityError(ExprSyntaxError):
    """Function called with the wrong number of arguments."""


class ExprDomainError(ExprError):
    """A function was evaluated outside its domain."""


# AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


# tokenizer and parser ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")


def _tokenize(src: str):
    pos = 0
    toks = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            off = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[off]!r}", len(src[:off].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), len(src[:start].encode())))
        pos = m.end()
    toks.append(("end", "", len(src.encode())))
    return toks


class _Parser:
    def __init__(self, src: str, n: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.n = n

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(f"expected {value!r}, found {what}", tok[2])
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
                what = "end of input" if tok[0] == "end" else repr(tok[1])
                raise ExprSyntaxError(f"exponent must be an integer literal, found {what}", tok[2])
            base = Pow(base, sign * int(tok[1]))
            if self.peek()[0] == "op" and self.peek()[1] == "^":
                raise ExprSyntaxError("chained powers need parentheses", self.peek()[2])
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                if not (self.peek()[0] == "op" and self.peek()[1] == "("):
                    raise ExprArityError(f"function {text!r} takes exactly one argument", self.peek()[2])
                self.take()
                arg = self.expr()
                if self.peek()[1] == ",":
                    raise ExprArityError(f"function {text!r} takes exactly one argument", self.peek()[2])
                self.expect(")")
                return Call(text, arg)
            self._check_name(text, off)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", off)

    def _check_name(self, name, off):
        if name in CIRCULAR_NAMES:
            return
        m = re.fullmatch(r"([xy])(\d+)", name)
        if m and 1 <= int(m.group(2)) <= self.n:
            return
        raise ExprNameError(f"unknown identifier {name!r}", off)


# pretty printing ------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def pretty(node, parent: int = 0, right: bool = False) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({pretty(node.arg)})"
    if isinstance(node, Pow):
        inner = pretty(node.base, 4)
        if not isinstance(node.base, (Num, Var, Call)) or (isinstance(node.base, Num) and node.base.value < 0):
            inner = f"({pretty(node.base)})"
        return f"{inner}^{node.exponent}"
    if isinstance(node, Neg):
        s = "-" + pretty(node.operand, 3)
        return f"({s})" if parent > 3 else s
    p = _PREC[node.op]
    s = f"{pretty(node.left, p)} {node.op} {pretty(node.right, p, True)}"
    if parent > p or (right and parent == p):
        return f"({s})"
    return s


# evaluation ----------------------------------------------------------------------

def _domain(name, ok, node):
    if not np.all(ok):
        raise ExprDomainError(f"{name} outside its domain in subexpression {pretty(node)!r}")


def _fn(fn: str, v, node):
    raw = v.value if isinstance(v, Jet2) else v
    if fn == "sqrt":
        _domain("sqrt", raw >= 0, node)
    if fn == "log":
        _domain("log", raw > 0, node)
    if isinstance(v, Jet2):
        if fn == "sqrt":
            _domain("sqrt", raw > 0, node)
        return getattr(v, fn)()
    return getattr(np, fn)(v)


def _evaluate(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env(node.name)
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env)
    if isinstance(node, Pow):
        b = _evaluate(node.base, env)
        k = node.exponent
        if k < 0:
            raw = b.value if isinstance(b, Jet2) else b
            _domain("negative power", raw != 0, node)
            return 1.0 / b ** (-k)
        return b ** k
    if isinstance(node, Call):
        return _fn(node.fn, _evaluate(node.arg, env), node)
    a, b = _evaluate(node.left, env), _evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    raw = b.value if isinstance(b, Jet2) else b
    _domain("division", raw != 0, node)
    return a / b


def _collect_vars(node, out):
    if isinstance(node, Var):
        out.add(node.name)
    for child in ("operand", "left", "right", "base", "arg"):
        if hasattr(node, child):
            _collect_vars(getattr(node, child), out)
    return out


class Expr:
    """Parsed expression; callable on point arrays of dimension ``n``."""

    def __init__(self, tree, n: int, source: str | None = None):
        self.tree = tree
        self.n = n
        self.source = source if source is not None else pretty(tree)

    def __repr__(self):
        return f"Expr({self.pretty()!r}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self.tree == other.tree and self.n == other.n

    def __hash__(self):
        return hash((self.tree, self.n))

    def pretty(self) -> str:
        return pretty(self.tree)

    @property
    def variables(self) -> set:
        return _collect_vars(self.tree, set())

    def _check(self, p):
        p = _arr(p)
        if p.shape[-1] != 2 * self.n + 1:
            raise ValueError(f"expression lives in dimension {self.n}, point has {p.shape[-1]} coordinates")
        return p

    def __call__(self, p):
        return eval_expr(self, p)

    def jet(self, p) -> Jet2:
        return jet_eval(self, p)

    has_jet = True


def _env_values(p, n):
    cache = {}

    def env(name):
        if name not in cache:
            if name == "t":
                cache[name] = p[..., 2 * n]
            elif name == "r2":
                acc = p[..., 0] * p[..., 0]
                for k in range(1, n):
                    acc = acc + p[..., k] * p[..., k]
                for k in range(n):
                    acc = acc + p[..., n + k] * p[..., n + k]
                cache[name] = acc
            elif name == "gauge":
                r2, t = env("r2"), env("t")
                cache[name] = np.sqrt(np.sqrt(r2 * r2 + t * t))
            else:
                j = int(name[1:]) - 1
                cache[name] = p[..., j] if name[0] == "x" else p[..., n + j]
        return cache[name]

    return env


def _env_jets(p, n):
    d = 2 * n + 1
    cache = {}

    def env(name):
        if name not in cache:
            if name == "t":
                cache[name] = Jet2.variable(p[..., 2 * n], 2 * n, d)
            elif name == "r2":
                acc = Jet2.variable(p[..., 0], 0, d) * Jet2.variable(p[..., 0], 0, d)
                for k in range(1, n):
                    v = Jet2.variable(p[..., k], k, d)
                    acc = acc + v * v
                for k in range(n):
                    v = Jet2.variable(p[..., n + k], n + k, d)
                    acc = acc + v * v
                cache[name] = acc
            elif name == "gauge":
                r2, t = env("r2"), env("t")
                q = r2 * r2 + t * t
                _domain("gauge jet", q.value > 0, Var("gauge"))
                cache[name] = q.sqrt().sqrt()
            else:
                j = int(name[1:]) - 1
                idx = j if name[0] == "x" else n + j
                cache[name] = Jet2.variable(p[..., idx], idx, d)
        return cache[name]

    return env


def parse(src: str, n: int = 1) -> Expr:
    """Parse ``src`` into an :class:`Expr` over H_n."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return Expr(_Parser(src, n).parse(), n, src)


def eval_expr(e: Expr, p):
    p = e._check(p)
    out = _evaluate(e.tree, _env_values(p, e.n))
    return np.broadcast_to(np.asarray(out, dtype=float), p.shape[:-1]).copy() if p.ndim > 1 else float(out)


def jet_eval(e: Expr, p) -> Jet2:
    """Forward-propagated second-order jet of ``e`` at ``p``."""
    p = e._check(p)
    out = _evaluate(e.tree, _env_jets(p, e.n))
    if not isinstance(out, Jet2):
        return Jet2.constant(np.broadcast_to(np.asarray(out, dtype=float), p.shape[:-1]).copy(), 2 * e.n + 1)
    return out


def _probe_points(n: int, count: int = 24, seed: int = 20240601) -> np.ndarray:
    rng = np.random.default_rng(seed)
    p = rng.uniform(-0.8, 0.8, size=(count, 2 * n + 1))
    p[..., 2 * n] *= 0.8
    return p


def is_circular(e, tol: float = 1e-8, n: int | None = None) -> bool:
    """Invariance under ``z -> e^{i theta} z``.

    Expressions built only from ``t``, ``r2``, ``gauge`` and literals are
    circular by construction; anything else is probed numerically.
    """
    if isinstance(e, Expr):
        if e.variables <= CIRCULAR_NAMES:
            return True
        n = e.n
    if n is None:
        n = 1
    pts = _probe_points(n)
    try:
        vals = np.asarray(e(pts), dtype=float)
        avg = circular_average(e, pts, 32)
    except (ExprDomainError, FloatingPointError):
        return False
    ok = np.isfinite(vals) & np.isfinite(avg)
    return bool(np.all(np.abs(vals[ok] - avg[ok]) < tol))

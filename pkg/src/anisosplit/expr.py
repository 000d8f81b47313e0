"""Symbolic expression kernel for material fields and operator symbols.

The vocabulary is deliberately small: six variables (three spatial
coordinates ``x1 x2 x3``, two transverse wavenumbers ``xi1 xi2``, one
Laplace parameter ``s``), complex constants, ``+ - * /``, integer powers,
unary negation, and the functions ``sqrt exp sin cos`` plus ``recip``
(reciprocal). Expressions are immutable and interned: structurally
identical subtrees are the same Python object, so trees built by the
recursion machinery are really DAGs and repeated subexpressions cost
nothing extra to store or evaluate.

Evaluation accepts scalars or numpy arrays per variable and broadcasts;
values are coerced to complex128. The square root is the principal
branch and any argument on the closed negative real axis (including 0
and -1) raises ``SqrtDomainError``; division by zero raises rather than
producing inf/NaN. Evaluation memoizes over the shared DAG per call and
frees intermediates as soon as their last consumer has run, so large
kernels evaluate on full grids without holding every node's array alive.

Thread-safety note: the intern table and per-node derivative caches are
shared mutable dictionaries. Mutations are single dict operations
(atomic under the GIL); a race can at worst duplicate work, never
corrupt a result. Evaluation itself is pure and keeps all scratch state
per call.
"""

from __future__ import annotations

import math
import re
import sys
import weakref
from enum import Enum

import numpy as np

__all__ = [
    "VarId",
    "Expr",
    "ExprError",
    "ParseError",
    "EvalError",
    "UnboundVariableError",
    "DivisionByZeroError",
    "SqrtDomainError",
    "const",
    "variable",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "ipow",
    "recip",
    "sqrt_",
    "exp_",
    "sin_",
    "cos_",
    "parse",
    "to_text",
    "eval_expr",
    "diff",
    "simplify",
    "free_vars",
    "node_count",
    "ZERO",
    "ONE",
    "X1",
    "X2",
    "X3",
    "XI1",
    "XI2",
    "S",
]

# Derivative chains in high-order expansions nest deeply; the printer and
# parser recurse, so give them headroom.
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class VarId(Enum):
    """The six admissible variables."""

    X1 = "x1"
    X2 = "x2"
    X3 = "x3"
    XI1 = "xi1"
    XI2 = "xi2"
    S = "s"


class ExprError(Exception):
    """Base class for expression kernel errors."""


class ParseError(ExprError):
    """Syntax or vocabulary error; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ExprError):
    """Base class for evaluation errors."""


class UnboundVariableError(EvalError):
    pass


class DivisionByZeroError(EvalError):
    pass


class SqrtDomainError(EvalError):
    """sqrt argument on the closed negative real axis."""


_UNARY_OPS = ("neg", "sqrt", "exp", "sin", "cos", "recip")
_BINARY_OPS = ("add", "sub", "mul", "div")


class Expr:
    """Immutable, interned expression node.

    ``op`` is one of const, var, the unary ops, the binary ops, or
    ``pow`` (integer exponent held in ``data``). Identity is structural:
    two equal trees are the same object, so ``is`` comparison and
    id-keyed memoization are sound.
    """

    __slots__ = ("op", "args", "data", "free_vars", "_dcache", "_simp", "__weakref__")

    def __init__(self, op, args, data):
        self.op = op
        self.args = args
        self.data = data
        if op == "var":
            fv = frozenset((data,))
        else:
            fv = frozenset()
            for a in args:
                fv = fv | a.free_vars
        self.free_vars = fv
        self._dcache = {}
        self._simp = None

    # Operator sugar so formulas read naturally in the calculus modules.
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return sub(self, _as_expr(other))

    def __rsub__(self, other):
        return sub(_as_expr(other), self)

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return ipow(self, n)

    def __repr__(self):
        return f"Expr({to_text(self)})"


_intern: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


def _node(op, args, data=None):
    # Key holds child references, so identity-based equality of the tuple
    # is structural equality of the tree.
    key = (op, data, args)
    node = _intern.get(key)
    if node is None:
        node = Expr(op, args, data)
        _intern[key] = node
    return node


def _as_expr(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, complex)):
        return const(v)
    raise TypeError(f"cannot coerce {type(v).__name__} to Expr")


def const(value) -> Expr:
    return _node("const", (), complex(value))


def variable(v: VarId) -> Expr:
    if not isinstance(v, VarId):
        raise TypeError("variable() expects a VarId")
    return _node("var", (), v)


ZERO = const(0)
ONE = const(1)

X1 = variable(VarId.X1)
X2 = variable(VarId.X2)
X3 = variable(VarId.X3)
XI1 = variable(VarId.XI1)
XI2 = variable(VarId.XI2)
S = variable(VarId.S)


def _is_const(e, value=None):
    if e.op != "const":
        return False
    return True if value is None else e.data == value


def add(a: Expr, b: Expr) -> Expr:
    a, b = _as_expr(a), _as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.data + b.data)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if b.op == "const":  # constants normalize to the left
        return add(b, a)
    return _node("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    a, b = _as_expr(a), _as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.data - b.data)
    if _is_const(b, 0):
        return a
    if a is b:
        return ZERO
    if _is_const(a, 0):
        return neg(b)
    if b.op == "const":
        return add(const(-b.data), a)
    return _node("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    a, b = _as_expr(a), _as_expr(b)
    if a.op == "const" and b.op == "const":
        return const(a.data * b.data)
    if b.op == "const":
        a, b = b, a
    if a.op == "const":
        if a.data == 0:
            return ZERO
        if a.data == 1:
            return b
        if a.data == -1:
            return neg(b)
        if b.op == "mul" and b.args[0].op == "const":
            return mul(const(a.data * b.args[0].data), b.args[1])
        return _node("mul", (a, b))
    # pull a nested constant to the front: x * (c * y) -> c * (x * y)
    if b.op == "mul" and b.args[0].op == "const":
        return mul(b.args[0], mul(a, b.args[1]))
    if a.op == "mul" and a.args[0].op == "const":
        return mul(a.args[0], mul(a.args[1], b))
    if a is b:
        return ipow(a, 2)
    return _node("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    a, b = _as_expr(a), _as_expr(b)
    if _is_const(b, 0):
        raise DivisionByZeroError("division by constant zero")
    if b.op == "const":
        return mul(const(1 / b.data), a)
    if _is_const(a, 0):
        return ZERO
    return _node("div", (a, b))


def neg(a: Expr) -> Expr:
    a = _as_expr(a)
    if a.op == "const":
        return const(-a.data)
    if a.op == "neg":
        return a.args[0]
    return _node("neg", (a,))


def ipow(a: Expr, n: int) -> Expr:
    a = _as_expr(a)
    if isinstance(n, float) and not n.is_integer():
        raise TypeError("pow exponent must be an integer")
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return a
    if a.op == "const" and not (a.data == 0 and n < 0):
        return const(a.data**n)
    if a.op == "pow":
        return ipow(a.args[0], a.data * n)
    if a.op == "sqrt" and n == 2:
        # (principal sqrt z)^2 == z identically
        return a.args[0]
    return _node("pow", (a,), n)


def recip(a: Expr) -> Expr:
    a = _as_expr(a)
    if _is_const(a, 0):
        raise DivisionByZeroError("reciprocal of constant zero")
    if a.op == "const":
        return const(1 / a.data)
    if a.op == "recip":
        return a.args[0]
    return _node("recip", (a,))


def _fold_unary(op, fn, a):
    if a.op == "const":
        try:
            return const(fn(a.data))
        except EvalError:
            pass
    return _node(op, (a,))


def sqrt_(a: Expr) -> Expr:
    return _fold_unary("sqrt", lambda v: complex(_ev_sqrt_scalar(v)), _as_expr(a))


def exp_(a: Expr) -> Expr:
    return _fold_unary("exp", lambda v: complex(np.exp(v)), _as_expr(a))


def sin_(a: Expr) -> Expr:
    return _fold_unary("sin", lambda v: complex(np.sin(v)), _as_expr(a))


def cos_(a: Expr) -> Expr:
    return _fold_unary("cos", lambda v: complex(np.cos(v)), _as_expr(a))


def free_vars(e: Expr) -> frozenset:
    return e.free_vars


def node_count(e: Expr) -> int:
    """Number of distinct DAG nodes reachable from e."""
    return len(_postorder(e))


# ---------------------------------------------------------------------------
# evaluation


def _ev_sqrt_scalar(v):
    if np.imag(v) == 0 and np.real(v) <= 0:
        raise SqrtDomainError(f"sqrt argument {v} lies on the closed negative real axis")
    return np.sqrt(v)


def _ev_sqrt(node, vals):
    v = vals[0]
    bad = np.logical_and(np.equal(np.imag(v), 0.0), np.less_equal(np.real(v), 0.0))
    if np.any(bad):
        raise SqrtDomainError("sqrt argument on the closed negative real axis")
    return np.sqrt(v)


def _ev_div(node, vals):
    d = vals[1]
    if np.any(np.equal(d, 0)):
        raise DivisionByZeroError("division by zero")
    return vals[0] / d


def _ev_recip(node, vals):
    d = vals[0]
    if np.any(np.equal(d, 0)):
        raise DivisionByZeroError("reciprocal of zero")
    return 1.0 / d


def _ev_pow(node, vals):
    v = vals[0]
    if node.data < 0 and np.any(np.equal(v, 0)):
        raise DivisionByZeroError("zero base with negative exponent")
    return v ** node.data


_EVAL = {
    "add": lambda n, v: v[0] + v[1],
    "sub": lambda n, v: v[0] - v[1],
    "mul": lambda n, v: v[0] * v[1],
    "div": _ev_div,
    "neg": lambda n, v: -v[0],
    "pow": _ev_pow,
    "sqrt": _ev_sqrt,
    "exp": lambda n, v: np.exp(v[0]),
    "sin": lambda n, v: np.sin(v[0]),
    "cos": lambda n, v: np.cos(v[0]),
    "recip": _ev_recip,
}


def _postorder(root):
    out = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, emit = stack.pop()
        if emit:
            out.append(node)
            continue
        i = id(node)
        if i in seen:
            continue
        seen.add(i)
        stack.append((node, True))
        for a in node.args:
            stack.append((a, False))
    return out


def _coerce_value(v):
    if isinstance(v, np.ndarray):
        return v.astype(np.complex128, copy=False)
    if isinstance(v, (int, float, complex, np.number)):
        return complex(v)
    return np.asarray(v, dtype=np.complex128)


def eval_expr(e: Expr, env: dict):
    """Evaluate ``e`` with variables bound per ``env`` ({VarId: value}).

    Values may be scalars or numpy arrays (broadcast elementwise);
    everything is carried in complex128. Pure and deterministic:
    repeated calls with the same inputs give bit-identical output.
    """
    bound = {}
    for k, v in env.items():
        if not isinstance(k, VarId):
            raise TypeError("env keys must be VarId")
        bound[k] = _coerce_value(v)
    order = _postorder(e)
    nref = {}
    for node in order:
        for a in node.args:
            nref[id(a)] = nref.get(id(a), 0) + 1
    vals = {}
    root_id = id(e)
    for node in order:
        op = node.op
        if op == "const":
            v = node.data
        elif op == "var":
            try:
                v = bound[node.data]
            except KeyError:
                raise UnboundVariableError(f"variable {node.data.value} is unbound") from None
        else:
            cv = [vals[id(a)] for a in node.args]
            v = _EVAL[op](node, cv)
        vals[id(node)] = v
        for a in node.args:
            i = id(a)
            r = nref[i] - 1
            nref[i] = r
            if r == 0 and i != root_id:
                del vals[i]  # free intermediates eagerly
    return vals[root_id]


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, v: VarId) -> Expr:
    """Exact partial derivative with respect to one variable.

    Derivatives are cached per node per variable; thanks to interning the
    cache is shared by every expression that reuses a subtree.
    """
    if not isinstance(v, VarId):
        raise TypeError("diff expects a VarId")
    for node in _postorder(e):
        cache = node._dcache
        if v in cache:
            continue
        if v not in node.free_vars:
            cache[v] = ZERO
            continue
        op = node.op
        if op == "var":
            cache[v] = ONE
            continue
        a = node.args[0]
        da = a._dcache[v]
        if op == "neg":
            d = neg(da)
        elif op == "sqrt":
            d = div(da, mul(const(2), node))
        elif op == "exp":
            d = mul(node, da)
        elif op == "sin":
            d = mul(cos_(a), da)
        elif op == "cos":
            d = neg(mul(sin_(a), da))
        elif op == "recip":
            d = neg(div(da, ipow(a, 2)))
        elif op == "pow":
            d = mul(const(node.data), mul(ipow(a, node.data - 1), da))
        else:
            b = node.args[1]
            db = b._dcache[v]
            if op == "add":
                d = add(da, db)
            elif op == "sub":
                d = sub(da, db)
            elif op == "mul":
                d = add(mul(da, b), mul(a, db))
            else:  # div
                d = div(sub(mul(da, b), mul(a, db)), ipow(b, 2))
        cache[v] = d
    return e._dcache[v]


# ---------------------------------------------------------------------------
# simplification


def _flatten_chain(e, op):
    # collect operands of a left/right-nested add or mul chain
    out = []
    stack = [e]
    while stack:
        n = stack.pop()
        if n.op == op:
            stack.extend(n.args)
        else:
            out.append(n)
    return out


def _post_rules(e):
    if e.op == "add":
        parts = _flatten_chain(e, "add")
        if len(parts) > 2:
            c = 0j
            rest = []
            for p in parts:
                if p.op == "const":
                    c += p.data
                else:
                    rest.append(p)
            if rest:
                acc = rest[0]
                for p in rest[1:]:
                    acc = add(acc, p)
                return add(const(c), acc) if c != 0 else acc
            return const(c)
    elif e.op == "mul":
        parts = _flatten_chain(e, "mul")
        if len(parts) > 2:
            c = 1 + 0j
            rest = []
            for p in parts:
                if p.op == "const":
                    c *= p.data
                else:
                    rest.append(p)
            if rest:
                acc = rest[0]
                for p in rest[1:]:
                    acc = mul(acc, p)
                return mul(const(c), acc) if c != 1 else acc
            return const(c)
    return e


_REBUILD = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "sqrt": sqrt_,
    "exp": exp_,
    "sin": sin_,
    "cos": cos_,
    "recip": recip,
}


def simplify(e: Expr) -> Expr:
    """Best-effort rewriting: constant folding, 0/1 pruning, x-x -> 0,
    and constant collection over +/* chains. Semantics-preserving (the
    result evaluates identically up to float association); idempotent.
    """
    order = []
    seen = set()
    stack = [(e, False)]
    while stack:
        node, emit = stack.pop()
        if emit:
            order.append(node)
            continue
        i = id(node)
        if i in seen or node._simp is not None:
            continue
        seen.add(i)
        stack.append((node, True))
        for a in node.args:
            stack.append((a, False))
    for node in order:
        if node._simp is not None:
            continue
        op = node.op
        if op in ("const", "var"):
            res = node
        elif op == "pow":
            res = ipow(node.args[0]._simp, node.data)
        else:
            newargs = [a._simp for a in node.args]
            res = _REBUILD[op](*newargs)
            res = _post_rules(res)
        node._simp = res
        if res._simp is None:
            res._simp = res
    return e._simp


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?P<imag>i)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCTIONS = {"sqrt": sqrt_, "exp": exp_, "sin": sin_, "cos": cos_}
_VAR_NAMES = {v.value: v for v in VarId}


class _Tokens:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tok = None
        self.kind = None
        self.tok_pos = 0
        self.advance()

    def advance(self):
        text = self.text
        n = len(text)
        pos = self.pos
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            self.tok, self.kind, self.tok_pos = None, "end", pos
            self.pos = pos
            return
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.group("num") is not None:
            self.kind = "num"
            self.tok = m.group("num")
            self.tok_pos = m.start("num")
        elif m.group("ident") is not None:
            self.kind = "ident"
            self.tok = m.group("ident")
            self.tok_pos = m.start("ident")
        else:
            self.kind = "op"
            self.tok = m.group("op")
            self.tok_pos = m.start("op")
        self.pos = m.end()

    def expect_op(self, ch):
        if self.kind != "op" or self.tok != ch:
            raise ParseError(f"expected {ch!r}", self.tok_pos)
        self.advance()


def _parse_number(tok):
    if tok.endswith("i"):
        return complex(0.0, float(tok[:-1]))
    return complex(float(tok))


def _parse_expr(ts):
    node = _parse_term(ts)
    while ts.kind == "op" and ts.tok in "+-":
        op = ts.tok
        ts.advance()
        rhs = _parse_term(ts)
        node = add(node, rhs) if op == "+" else sub(node, rhs)
    return node


def _parse_term(ts):
    node = _parse_unary(ts)
    while ts.kind == "op" and ts.tok in "*/":
        op = ts.tok
        ts.advance()
        rhs = _parse_unary(ts)
        node = mul(node, rhs) if op == "*" else div(node, rhs)
    return node


def _parse_unary(ts):
    if ts.kind == "op" and ts.tok == "-":
        ts.advance()
        return neg(_parse_unary(ts))
    return _parse_power(ts)


def _parse_power(ts):
    base = _parse_atom(ts)
    if ts.kind == "op" and ts.tok == "^":
        ts.advance()
        n = _parse_exponent(ts)
        return ipow(base, n)
    return base


def _parse_exponent(ts):
    if ts.kind == "op" and ts.tok == "(":
        ts.advance()
        n = _parse_exponent(ts)
        ts.expect_op(")")
        return n
    sign = 1
    if ts.kind == "op" and ts.tok == "-":
        ts.advance()
        sign = -1
    if ts.kind != "num":
        raise ParseError("expected integer exponent", ts.tok_pos)
    val = _parse_number(ts.tok)
    if val.imag != 0 or val.real != int(val.real):
        raise ParseError("exponent must be an integer", ts.tok_pos)
    ts.advance()
    return sign * int(val.real)


def _parse_atom(ts):
    if ts.kind == "num":
        v = _parse_number(ts.tok)
        ts.advance()
        return const(v)
    if ts.kind == "ident":
        name = ts.tok
        pos = ts.tok_pos
        ts.advance()
        if ts.kind == "op" and ts.tok == "(":
            fn = _FUNCTIONS.get(name)
            if fn is None:
                raise ParseError(f"unknown function {name!r}", pos)
            ts.advance()
            arg = _parse_expr(ts)
            ts.expect_op(")")
            return fn(arg)
        v = _VAR_NAMES.get(name)
        if v is None:
            raise ParseError(f"unknown identifier {name!r}", pos)
        return variable(v)
    if ts.kind == "op" and ts.tok == "(":
        ts.advance()
        node = _parse_expr(ts)
        ts.expect_op(")")
        return node
    raise ParseError("expected a number, variable, function call, or '('", ts.tok_pos)


def parse(text: str) -> Expr:
    """Parse DSL text into an expression tree.

    Grammar (EBNF; also documented in the README):

        expr     = term { ("+" | "-") term } ;
        term     = unary { ("*" | "/") unary } ;
        unary    = "-" unary | power ;
        power    = atom [ "^" exponent ] ;
        exponent = [ "-" ] integer | "(" exponent ")" ;
        atom     = number | variable | function "(" expr ")" | "(" expr ")" ;
        function = "sqrt" | "exp" | "sin" | "cos" | "recip" ;
        variable = "x1" | "x2" | "x3" | "xi1" | "xi2" | "s" ;
        number   = decimal or scientific literal, optional "i" suffix ;

    Errors carry the byte offset of the offending token.
    """
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    ts = _Tokens(text)
    node = _parse_expr(ts)
    if ts.kind != "end":
        raise ParseError(f"unexpected trailing input {ts.tok!r}", ts.tok_pos)
    return node


# ---------------------------------------------------------------------------
# printing

_PREC = {
    "add": 10,
    "sub": 10,
    "mul": 20,
    "div": 20,
    "neg": 25,
    "pow": 30,
}


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return repr(int(x))
    return repr(x)


def _fmt_const(c: complex) -> tuple[str, int]:
    # returns (text, precedence of the produced fragment)
    if c.imag == 0:
        if c.real < 0:
            return _fmt_real(c.real), _PREC["neg"]
        return _fmt_real(c.real), 40
    if c.real == 0:
        if c.imag < 0:
            return f"-{_fmt_real(-c.imag)}i", _PREC["neg"]
        return f"{_fmt_real(c.imag)}i", 40
    op = "-" if c.imag < 0 else "+"
    return f"({_fmt_real(c.real)} {op} {_fmt_real(abs(c.imag))}i)", 40


def to_text(e: Expr) -> str:
    """Render to DSL text; ``parse(to_text(e))`` is evaluation-equivalent."""

    def go(node, ctx):
        op = node.op
        if op == "const":
            text, prec = _fmt_const(node.data)
        elif op == "var":
            text, prec = node.data.value, 40
        elif op == "recip":
            # the DSL has no named reciprocal; render as a division
            text, prec = "1/" + go(node.args[0], _PREC["div"] + 1), _PREC["div"]
        elif op in ("sqrt", "exp", "sin", "cos"):
            text, prec = f"{op}({go(node.args[0], 0)})", 40
        elif op == "neg":
            text = "-" + go(node.args[0], _PREC["neg"] + 1)
            prec = _PREC["neg"]
        elif op == "pow":
            n = node.data
            exp = str(n) if n >= 0 else f"(-{-n})"
            text = go(node.args[0], _PREC["pow"] + 1) + "^" + exp
            prec = _PREC["pow"]
        else:
            sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
            p = _PREC[op]
            text = go(node.args[0], p) + sym + go(node.args[1], p + 1)
            prec = p
        if prec < ctx:
            return f"({text})"
        return text

    return go(e, 0)

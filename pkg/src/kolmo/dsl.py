"""Expression language for equation coefficients, plus rough-field generators.

Coefficients a, b0, b are written as strings over the variables x, y, t with
the usual arithmetic (^ is right associative and binds tighter than unary
minus, then * /, then + -), a fixed set of functions, and a seeded
`checkerboard(seed, sx, sy, st, lo, hi)` primitive producing a deterministic
piecewise-constant field: each space-time cell of size (sx, sy, st) gets a
value drawn uniformly in [lo, hi] from a counter-based integer hash of the
cell index, so evaluation is bit-identical across runs and platforms.

Evaluation is total on finite inputs: division by zero, log of a nonpositive
value, sqrt of a negative value, and non-finite powers raise EvalError with
the source span of the offending subexpression instead of returning NaN.

Grammar reference and the precedence table live in docs/dsl.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields
from typing import Callable, Optional, Union

import numpy as np

from .fields import Box
from .group import Point

__all__ = [
    "Expr",
    "Lit",
    "Var",
    "Unary",
    "Bin",
    "Call",
    "Checkerboard",
    "ParseError",
    "EvalError",
    "parse",
    "evaluate",
    "to_source",
    "CoefficientSet",
    "ValidationReport",
    "validate",
    "coefficient_evaluator",
]


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Expr:
    span: tuple[int, int] = field(default=(0, 0), compare=False, kw_only=True)


@dataclass(frozen=True)
class Lit(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str  # one of x, y, t


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Checkerboard(Expr):
    seed: int
    sx: float
    sy: float
    st: float
    lo: float
    hi: float


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ValueError):
    def __init__(self, message: str, span: tuple[int, int]):
        super().__init__(f"{message} (source span {span[0]}:{span[1]})")
        self.span = span


VARIABLES = ("x", "y", "t")

# name -> (arity, vectorized implementation); None means checked separately.
FUNCTIONS: dict[str, tuple[int, Optional[Callable]]] = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, None),
    "log": (1, None),
    "abs": (1, np.abs),
    "sqrt": (1, None),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
    "sign": (1, np.sign),
    "step": (1, None),  # step(s) = 1 for s >= 0, else 0
    "floor": (1, np.floor),
    "checkerboard": (6, None),
}


# --------------------------------------------------------------------------
# Tokenizer


_TOK_NUM = "num"
_TOK_IDENT = "ident"
_TOK_OP = "op"
_TOK_END = "end"


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    toks = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i) from None
            toks.append(_Token(_TOK_NUM, text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            toks.append(_Token(_TOK_IDENT, source[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            toks.append(_Token(_TOK_OP, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    toks.append(_Token(_TOK_END, "", n))
    return toks


# --------------------------------------------------------------------------
# Precedence-climbing parser

_BIN_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_RIGHT_ASSOC = {"^"}
_UNARY_PREC = 30  # between * / and ^


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0

    def peek(self) -> _Token:
        return self.toks[self.i]

    def advance(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str):
        tok = self.peek()
        if tok.kind != _TOK_OP or tok.text != text:
            raise ParseError(f"expected {text!r}", tok.pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expression(0)
        tok = self.peek()
        if tok.kind != _TOK_END:
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return e

    def expression(self, min_prec: int) -> Expr:
        lhs = self.atom()
        while True:
            tok = self.peek()
            if tok.kind != _TOK_OP or tok.text not in _BIN_PREC:
                return lhs
            prec = _BIN_PREC[tok.text]
            if prec < min_prec:
                return lhs
            self.advance()
            next_min = prec if tok.text in _RIGHT_ASSOC else prec + 1
            rhs = self.expression(next_min)
            lhs = Bin(tok.text, lhs, rhs, span=(lhs.span[0], rhs.span[1]))

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == _TOK_END:
            raise ParseError("unexpected end of input", tok.pos)
        if tok.kind == _TOK_OP and tok.text == "-":
            self.advance()
            operand = self.expression(_UNARY_PREC)
            return Unary("-", operand, span=(tok.pos, operand.span[1]))
        if tok.kind == _TOK_OP and tok.text == "(":
            self.advance()
            inner = self.expression(0)
            close = self.expect_op(")")
            return _respan(inner, (tok.pos, close.pos + 1))
        if tok.kind == _TOK_NUM:
            self.advance()
            return Lit(float(tok.text), span=(tok.pos, tok.pos + len(tok.text)))
        if tok.kind == _TOK_IDENT:
            self.advance()
            nxt = self.peek()
            if nxt.kind == _TOK_OP and nxt.text == "(":
                return self.call(tok)
            if tok.text in VARIABLES:
                return Var(tok.text, span=(tok.pos, tok.pos + len(tok.text)))
            raise ParseError(
                f"unknown identifier {tok.text!r} (variables are x, y, t)", tok.pos
            )
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)

    def call(self, name_tok: _Token) -> Expr:
        name = name_tok.text
        if name not in FUNCTIONS:
            known = ", ".join(sorted(FUNCTIONS))
            raise ParseError(f"unknown function {name!r} (known: {known})", name_tok.pos)
        self.expect_op("(")
        args: list[Expr] = []
        if not (self.peek().kind == _TOK_OP and self.peek().text == ")"):
            args.append(self.expression(0))
            while self.peek().kind == _TOK_OP and self.peek().text == ",":
                self.advance()
                args.append(self.expression(0))
        close = self.expect_op(")")
        span = (name_tok.pos, close.pos + 1)
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise ParseError(
                f"{name} expects {arity} argument(s), got {len(args)}", name_tok.pos
            )
        if name == "checkerboard":
            vals = [_constant_value(a) for a in args]
            seed = vals[0]
            if seed != int(seed):
                raise ParseError("checkerboard seed must be an integer", args[0].span[0])
            sx, sy, st, lo, hi = vals[1:]
            if min(sx, sy, st) <= 0:
                raise ParseError("checkerboard cell sizes must be positive", span[0])
            if hi < lo:
                raise ParseError("checkerboard needs lo <= hi", span[0])
            return Checkerboard(int(seed), sx, sy, st, lo, hi, span=span)
        return Call(name, tuple(args), span=span)


def _respan(e: Expr, span: tuple[int, int]) -> Expr:
    kwargs = {f.name: getattr(e, f.name) for f in dc_fields(e) if f.name != "span"}
    return type(e)(**kwargs, span=span)


def _constant_value(e: Expr) -> float:
    """Fold literals and unary minus; checkerboard parameters must be constants."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Unary) and e.op == "-":
        return -_constant_value(e.operand)
    raise ParseError("checkerboard arguments must be numeric constants", e.span[0])


def parse(source: str) -> Expr:
    """Parse a coefficient expression; raises ParseError with a byte offset."""
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# Pretty printer (parse . print . parse is the identity on ASTs)


def to_source(e: Expr) -> str:
    return _print(e, 0)


def _print(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Lit):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = _print(e.operand, _UNARY_PREC)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, Bin):
        prec = _BIN_PREC[e.op]
        if e.op in _RIGHT_ASSOC:
            lhs = _print(e.left, prec + 1)
            rhs = _print(e.right, prec)
        else:
            lhs = _print(e.left, prec)
            rhs = _print(e.right, prec + 1)
        text = f"{lhs} {e.op} {rhs}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, Call):
        args = ", ".join(_print(a, 0) for a in e.args)
        return f"{e.name}({args})"
    if isinstance(e, Checkerboard):
        return (
            f"checkerboard({e.seed}, {e.sx!r}, {e.sy!r}, {e.st!r}, {e.lo!r}, {e.hi!r})"
        )
    raise TypeError(f"unknown node {type(e).__name__}")


# --------------------------------------------------------------------------
# Evaluation


def _splitmix64(v: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps mod 2^64 by design.
    v = v + np.uint64(0x9E3779B97F4A7C15)
    v = (v ^ (v >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    v = (v ^ (v >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return v ^ (v >> np.uint64(31))


def _checkerboard_values(node: Checkerboard, x, y, t) -> np.ndarray:
    ix = np.floor(np.asarray(x, dtype=float) / node.sx).astype(np.int64).astype(np.uint64)
    iy = np.floor(np.asarray(y, dtype=float) / node.sy).astype(np.int64).astype(np.uint64)
    it = np.floor(np.asarray(t, dtype=float) / node.st).astype(np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix64(np.uint64(node.seed & 0xFFFFFFFFFFFFFFFF))
        h = _splitmix64(h ^ ix)
        h = _splitmix64(h ^ iy)
        h = _splitmix64(h ^ it)
    unit = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)
    return node.lo + (node.hi - node.lo) * unit


def _check_finite(value, node: Expr, what: str):
    if not np.all(np.isfinite(value)):
        raise EvalError(f"{what} produced a non-finite value", node.span)
    return value


def _eval(e: Expr, x, y, t):
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return {"x": x, "y": y, "t": t}[e.name]
    if isinstance(e, Unary):
        return -_eval(e.operand, x, y, t)
    if isinstance(e, Bin):
        a = _eval(e.left, x, y, t)
        b = _eval(e.right, x, y, t)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalError("division by zero", e.span)
            return a / b
        if e.op == "^":
            with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
                out = np.power(np.asarray(a, dtype=float), b)
            return _check_finite(out, e, "power")
        raise EvalError(f"unknown operator {e.op!r}", e.span)
    if isinstance(e, Call):
        args = [_eval(a, x, y, t) for a in e.args]
        if e.name == "log":
            if np.any(np.asarray(args[0]) <= 0):
                raise EvalError("log of a nonpositive value", e.span)
            return np.log(args[0])
        if e.name == "sqrt":
            if np.any(np.asarray(args[0]) < 0):
                raise EvalError("sqrt of a negative value", e.span)
            return np.sqrt(args[0])
        if e.name == "exp":
            with np.errstate(over="ignore", under="ignore"):
                out = np.exp(args[0])
            return _check_finite(out, e, "exp")
        if e.name == "step":
            return np.where(np.asarray(args[0]) >= 0, 1.0, 0.0)
        fn = FUNCTIONS[e.name][1]
        return fn(*args)
    if isinstance(e, Checkerboard):
        return _checkerboard_values(e, x, y, t)
    raise TypeError(f"unknown node {type(e).__name__}")


def evaluate(e: Expr, z: Union[Point, tuple]):
    """Evaluate at a point or componentwise on broadcastable arrays."""
    x, y, t = z
    return _eval(e, x, y, t)


Coefficient = Union[Expr, Callable]


def coefficient_evaluator(coeff: Coefficient) -> Callable:
    """Uniform (x, y, t) -> values view of an Expr or a plain callable."""
    if isinstance(coeff, Expr):
        return lambda x, y, t: _eval(coeff, x, y, t)
    if callable(coeff):
        return coeff
    raise TypeError(f"not an evaluable coefficient: {type(coeff).__name__}")


# --------------------------------------------------------------------------
# Coefficient sets and hypothesis validation


@dataclass
class CoefficientSet:
    """The coefficient triple (a, b0, b) with its ellipticity parameter mu.

    The standing hypotheses are mu < a < 1/mu, |b0| <= 1/mu, b twice
    differentiable with |b|_{C^2} <= 1/mu, and d_x b bounded away from zero
    with one sign; `validate` checks them on a sampled point set.
    """

    a: Coefficient
    b0: Coefficient
    b: Coefficient
    mu: float

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")

    @classmethod
    def from_strings(cls, a: str, b0: str, b: str, mu: float) -> "CoefficientSet":
        return cls(parse(a), parse(b0), parse(b), mu)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    witness: Optional[tuple[float, float, float]]
    detail: str

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "witness": list(self.witness) if self.witness is not None else None,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    passed: bool
    checks: list[CheckResult]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.as_dict() for c in self.checks]}

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _radical_inverse(idx: np.ndarray, base: int) -> np.ndarray:
    idx = idx.copy()
    out = np.zeros(len(idx))
    f = 1.0
    while idx.max() > 0:
        f /= base
        out += f * (idx % base)
        idx //= base
    return out


def halton_points(box: Box, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic low-discrepancy samples of a space-time box (bases 2, 3, 5)."""
    idx = np.arange(1, n + 1)
    u = _radical_inverse(idx, 2)
    v = _radical_inverse(idx, 3)
    w = _radical_inverse(idx, 5)
    return (
        box.xlo + u * box.x_span,
        box.ylo + v * box.y_span,
        box.tlo + w * box.t_span,
    )


def _witness(xs, ys, ts, i) -> tuple[float, float, float]:
    return (float(xs[i]), float(ys[i]), float(ts[i]))


def validate(
    cs: CoefficientSet,
    domain: Box,
    samples: int = 10_000,
    dxb_floor: float = 1e-6,
) -> ValidationReport:
    """Check the coefficient hypotheses on a deterministic low-discrepancy set.

    Derivatives of b use centered differences with h = 1e-4 of the domain span
    per axis; the C^2 size of b is the max of |b|, |d_x b|, |d_y b|, |d_t b|,
    |d_xx b| over the samples.  Always returns a report; passed=False carries
    witness points for each violated check.
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 validation samples")
    xs, ys, ts = halton_points(domain, samples)
    a_fn = coefficient_evaluator(cs.a)
    b0_fn = coefficient_evaluator(cs.b0)
    b_fn = coefficient_evaluator(cs.b)

    inv_mu = 1.0 / cs.mu
    checks: list[CheckResult] = []

    a_vals = np.broadcast_to(np.asarray(a_fn(xs, ys, ts), dtype=float), xs.shape)
    margin = np.minimum(a_vals - cs.mu, inv_mu - a_vals)
    i = int(np.argmin(margin))
    checks.append(
        CheckResult(
            "ellipticity",
            bool(margin[i] > 0),
            float(a_vals[i]),
            _witness(xs, ys, ts, i),
            f"require {cs.mu} < a < {inv_mu:g} strictly",
        )
    )

    b0_vals = np.abs(np.broadcast_to(np.asarray(b0_fn(xs, ys, ts), dtype=float), xs.shape))
    i = int(np.argmax(b0_vals))
    checks.append(
        CheckResult(
            "drift_bound",
            bool(b0_vals[i] <= inv_mu),
            float(b0_vals[i]),
            _witness(xs, ys, ts, i),
            f"require |b0| <= {inv_mu:g}",
        )
    )

    hx = 1e-4 * domain.x_span
    hy = 1e-4 * domain.y_span
    ht = 1e-4 * domain.t_span

    def b_at(dx=0.0, dy=0.0, dt=0.0):
        return np.broadcast_to(
            np.asarray(b_fn(xs + dx, ys + dy, ts + dt), dtype=float), xs.shape
        )

    b_c = b_at()
    bx = (b_at(dx=hx) - b_at(dx=-hx)) / (2 * hx)
    by = (b_at(dy=hy) - b_at(dy=-hy)) / (2 * hy)
    bt = (b_at(dt=ht) - b_at(dt=-ht)) / (2 * ht)
    bxx = (b_at(dx=hx) - 2 * b_c + b_at(dx=-hx)) / hx**2

    c2 = np.maximum.reduce([np.abs(b_c), np.abs(bx), np.abs(by), np.abs(bt), np.abs(bxx)])
    i = int(np.argmax(c2))
    checks.append(
        CheckResult(
            "b_c2_bound",
            bool(c2[i] <= inv_mu),
            float(c2[i]),
            _witness(xs, ys, ts, i),
            f"require finite-difference |b|_C2 <= {inv_mu:g}",
        )
    )

    abs_bx = np.abs(bx)
    i = int(np.argmin(abs_bx))
    same_sign = bool(np.all(bx > 0) or np.all(bx < 0))
    checks.append(
        CheckResult(
            "b_x_nondegenerate",
            bool(abs_bx[i] >= dxb_floor) and same_sign,
            float(bx[i]),
            _witness(xs, ys, ts, i),
            f"require |d_x b| >= {dxb_floor:g} with one sign on the domain",
        )
    )

    return ValidationReport(all(c.passed for c in checks), checks)

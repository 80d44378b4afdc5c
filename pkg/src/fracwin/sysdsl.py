"""Expression language for vector fields, Lyapunov candidates and test signals.

Expressions are built from real literals, the state variables ``x1 .. xn``,
the time ``t``, the operators ``+ - * / ^``, unary minus, parentheses and the
functions ``sin cos exp abs``.

Binding, tightest first: ``^`` (right associative), unary ``-``, ``* /``,
``+ -``. Hence ``-2^2 == -4`` and ``2^3^2 == 512``. Exponents must be constant
(no variables). Implicit multiplication such as ``2x1`` is rejected.

A system document is a sequence of ``key = value`` lines; see
``docs/config-format.md`` for the full grammar.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from fracwin.errors import FracwinError

FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}
MAX_DEPTH = 100
MAX_TREE_DEPTH = 250
MAX_INT_POWER = 16


class ParseError(FracwinError, ValueError):
    """Positioned diagnostic raised by the lexer, the parser and the document reader."""

    def __init__(
        self,
        kind: str,
        message: str,
        line: int,
        col: int,
        expected: Sequence[str] = (),
    ) -> None:
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        super().__init__(str(self))

    def __str__(self) -> str:
        s = f"{self.line}:{self.col}: {self.kind} error: {self.message}"
        if self.expected:
            s += f" (expected one of: {', '.join(self.expected)})"
        return s


class EvaluationError(FracwinError, ArithmeticError):
    def __init__(self, message: str, subexpr: "Expr") -> None:
        self.subexpr = subexpr
        super().__init__(f"{message} in `{pretty(subexpr)}`")


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Time, Neg, BinOp, Call]


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    return set()


def tree_depth(e: Expr) -> int:
    depth = 0
    stack = [(e, 1)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        if isinstance(node, Neg):
            stack.append((node.operand, d + 1))
        elif isinstance(node, BinOp):
            stack.extend([(node.left, d + 1), (node.right, d + 1)])
        elif isinstance(node, Call):
            stack.append((node.arg, d + 1))
    return depth


def _is_constant(e: Expr) -> bool:
    if isinstance(e, (Var, Time)):
        return False
    if isinstance(e, Neg):
        return _is_constant(e.operand)
    if isinstance(e, BinOp):
        return _is_constant(e.left) and _is_constant(e.right)
    if isinstance(e, Call):
        return _is_constant(e.arg)
    return True


# ------------------------------------------------------------------------- lexer

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = set("+-*/^(),")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col0: int = 1) -> Iterator[Token]:
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r":
            i += 1
            continue
        col = col0 + i
        if c.isascii() and (c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit())):
            m = _NUMBER.match(text, i)
            assert m is not None
            j = m.end()
            if j < n and (text[j].isalpha() or text[j] == "_" or text[j] == "."):
                raise ParseError(
                    "lexical",
                    f"malformed number {text[i:j + 1]!r} (implicit multiplication is not supported)",
                    line,
                    col0 + j,
                )
            yield Token("num", m.group(), line, col)
            i = j
        elif c.isascii() and (c.isalpha() or c == "_"):
            m = _IDENT.match(text, i)
            assert m is not None
            yield Token("ident", m.group(), line, col)
            i = m.end()
        elif c in _PUNCT:
            yield Token("op", c, line, col)
            i += 1
        else:
            raise ParseError("lexical", f"unexpected character {c!r}", line, col)
    yield Token("end", "", line, col0 + n)


# ------------------------------------------------------------------------ parser

_ATOM_START = ("number", "x<i>", "t", "(", "-", *sorted(FUNCTIONS))


class _Parser:
    def __init__(self, text: str, dim: int | None, line: int, col0: int) -> None:
        self.tokens = list(tokenize(text, line, col0))
        self.pos = 0
        self.dim = dim
        self.depth = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str, expected: Sequence[str] = (), kind: str = "syntax") -> ParseError:
        t = self.tok
        return ParseError(kind, message, t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        raise self.fail(f"found {self._describe(self.tok)}", [text])

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of input" if t.kind == "end" else repr(t.text)

    def parse(self) -> Expr:
        try:
            e = self.expr()
        except RecursionError:
            raise self.fail("expression nested too deeply") from None
        if self.tok.kind != "end":
            raise self.fail(f"unexpected {self._describe(self.tok)}", ["+", "-", "*", "/", "^", "end of input"])
        if tree_depth(e) > MAX_TREE_DEPTH:
            first = self.tokens[0]
            raise ParseError("syntax", f"expression tree deeper than {MAX_TREE_DEPTH}", first.line, first.col)
        return e

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.fail(f"expression nested deeper than {MAX_DEPTH} levels")

    def expr(self) -> Expr:
        self._enter()
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            left = BinOp(op, left, self.term())
        self.depth -= 1
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            self._enter()
            e = Neg(self.unary())
            self.depth -= 1
            return e
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            start = self.tok
            self._enter()
            exponent = self.exponent()
            self.depth -= 1
            if not _is_constant(exponent):
                raise ParseError("syntax", "exponent must be a constant", start.line, start.col)
            return BinOp("^", base, exponent)
        return base

    def exponent(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            self._enter()
            e = Neg(self.exponent())
            self.depth -= 1
            return e
        return self.power()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            v = float(t.text)
            if not math.isfinite(v):
                raise ParseError("lexical", f"literal {t.text!r} overflows", t.line, t.col)
            return Num(v)
        if t.kind == "ident":
            self.advance()
            name = t.text
            if name == "t":
                return Time()
            m = re.fullmatch(r"x([1-9][0-9]*)", name)
            if m:
                idx = int(m.group(1))
                if self.dim is not None and idx > self.dim:
                    raise ParseError(
                        "range", f"variable {name} exceeds the declared dimension {self.dim}", t.line, t.col
                    )
                return Var(idx)
            if name in FUNCTIONS:
                return self.call(name, t)
            raise ParseError("syntax", f"unknown identifier {name!r}", t.line, t.col, _ATOM_START)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise self.fail(f"found {self._describe(t)}", _ATOM_START)

    def call(self, name: str, at: Token) -> Expr:
        self.expect("(")
        args: list[Expr] = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.expr())
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
        self.expect(")")
        if len(args) != 1:
            raise ParseError("arity", f"{name} takes exactly 1 argument, got {len(args)}", at.line, at.col)
        return Call(name, args[0])


def parse_expr(text: str, dim: int | None = None, line: int = 1, col: int = 1) -> Expr:
    """Parse one expression; ``dim`` bounds the admissible ``x<i>`` (``None``: unbounded)."""
    return _Parser(text, dim, line, col).parse()


# ------------------------------------------------------------------ pretty print

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 4 if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def pretty(e: Expr) -> str:
    """Canonical text with minimal parentheses; re-parses to the same tree."""

    def wrap(sub: Expr, need: int) -> str:
        s = pretty(sub)
        return f"({s})" if _prec(sub) < need else s

    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Time):
        return "t"
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        return "-" + wrap(e.operand, 3)
    if e.op == "^":
        return f"{wrap(e.left, 5)}^{_pretty_exponent(e.right)}"
    p = _PREC[e.op]
    return f"{wrap(e.left, p)} {e.op} {wrap(e.right, p + 1)}"


def _pretty_exponent(e: Expr) -> str:
    if isinstance(e, Neg):
        return "-" + _pretty_exponent(e.operand)
    s = pretty(e)
    return s if _prec(e) >= 4 else f"({s})"


# -------------------------------------------------------------------- evaluation


def _int_power(base: float, n: int) -> float:
    out = 1.0
    for _ in range(abs(n)):
        out *= base
    return 1.0 / out if n < 0 else out


def evaluate(e: Expr, x: Sequence[float], t: float) -> float:
    """Evaluate ``e`` at state ``x`` and time ``t`` in double precision.

    Integer exponents up to 16 in magnitude use repeated multiplication.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.index > len(x):
            raise EvaluationError(f"state has only {len(x)} components", e)
        return float(x[e.index - 1])
    if isinstance(e, Time):
        return float(t)
    if isinstance(e, Neg):
        return -evaluate(e.operand, x, t)
    if isinstance(e, Call):
        a = evaluate(e.arg, x, t)
        try:
            v = FUNCTIONS[e.func](a)
        except OverflowError:
            raise EvaluationError("overflow", e) from None
        return _finite(v, e)
    a = evaluate(e.left, x, t)
    b = evaluate(e.right, x, t)
    if e.op == "+":
        v = a + b
    elif e.op == "-":
        v = a - b
    elif e.op == "*":
        v = a * b
    elif e.op == "/":
        if b == 0.0:
            raise EvaluationError("division by zero", e)
        v = a / b
    else:
        if b == int(b) and abs(b) <= MAX_INT_POWER:
            if a == 0.0 and b < 0:
                raise EvaluationError("division by zero", e)
            v = _int_power(a, int(b))
        else:
            try:
                v = math.pow(a, b)
            except (ValueError, OverflowError) as exc:
                raise EvaluationError(f"invalid power ({exc})", e) from None
    return _finite(v, e)


def _finite(v: float, e: Expr) -> float:
    if not math.isfinite(v):
        raise EvaluationError("non-finite result", e)
    return v


# ----------------------------------------------------------------------- systems

#: keys with a typed value; anything else in a document is an error
NUMBER_KEYS = {"alpha", "omega", "t0", "horizon", "step", "lambda", "phi", "compare_a", "blowup_bound"}
INT_KEYS = {"seed", "corrector_sweeps"}
LIST_KEYS = {"x0", "m", "times", "x_star"}
TEXT_KEYS = {"name"}
BOX_KEY = "box"
_COMPONENT = re.compile(r"f([1-9][0-9]*)")


@dataclass(frozen=True)
class ParsedSystem:
    dim: int
    components: tuple[Expr, ...]
    V: Expr | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def field_values(self, x: Sequence[float], t: float) -> list[float]:
        return [evaluate(c, x, t) for c in self.components]


def _number(text: str, key: str, line: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError("syntax", f"{key} expects a number, got {text!r}", line, col) from None
    if not math.isfinite(v):
        raise ParseError("syntax", f"{key} must be finite", line, col)
    return v


def parse(source: Union[str, bytes]) -> ParsedSystem:
    """Parse a system document into a :class:`ParsedSystem`.

    Raises :class:`ParseError` carrying the line and column of the problem.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    raw_exprs: dict[str, tuple[str, int, int]] = {}
    meta: dict = {}
    seen: dict[str, int] = {}
    for lineno, line in enumerate(source.split("\n"), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ParseError("syntax", "expected `key = value`", lineno, col, ["="])
        key_part, value = body.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        vcol = len(key_part) + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            raise ParseError("syntax", f"invalid key {key!r}", lineno, kcol)
        if key in seen:
            raise ParseError("syntax", f"duplicate key {key!r} (first on line {seen[key]})", lineno, kcol)
        seen[key] = lineno
        if not value:
            raise ParseError("syntax", f"missing value for {key!r}", lineno, vcol)
        if _COMPONENT.fullmatch(key) or key == "V":
            raw_exprs[key] = (value, lineno, vcol)
        elif key in NUMBER_KEYS:
            meta[key] = _number(value, key, lineno, vcol)
        elif key in INT_KEYS:
            v = _number(value, key, lineno, vcol)
            if v != int(v):
                raise ParseError("syntax", f"{key} expects an integer", lineno, vcol)
            meta[key] = int(v)
        elif key in LIST_KEYS:
            meta[key] = tuple(_number(p.strip(), key, lineno, vcol) for p in value.split(","))
        elif key in TEXT_KEYS:
            meta[key] = value
        elif key == BOX_KEY:
            meta[key] = _parse_box(value, lineno, vcol)
        else:
            raise ParseError("syntax", f"unknown key {key!r}", lineno, kcol)
    comps = sorted(int(k[1:]) for k in raw_exprs if k != "V")
    if not comps:
        raise ParseError("syntax", "no component expressions (f1 = ...)", 1, 1, ["f1"])
    dim = len(comps)
    if comps != list(range(1, dim + 1)):
        missing = min(set(range(1, dim + 1)) - set(comps))
        raise ParseError("syntax", f"component f{missing} is missing", 1, 1, [f"f{missing}"])
    exprs = tuple(_parse_entry(raw_exprs[f"f{i}"], dim) for i in range(1, dim + 1))
    V = _parse_entry(raw_exprs["V"], dim) if "V" in raw_exprs else None
    for key in ("x0", "x_star"):
        if key in meta and len(meta[key]) != dim:
            raise ParseError("syntax", f"{key} has {len(meta[key])} entries, system has dim {dim}", seen[key], 1)
    if "box" in meta and len(meta["box"]) != dim:
        raise ParseError("syntax", f"box has {len(meta['box'])} intervals, system has dim {dim}", seen["box"], 1)
    return ParsedSystem(dim, exprs, V, meta)


def _parse_entry(entry: tuple[str, int, int], dim: int) -> Expr:
    text, line, col = entry
    return parse_expr(text, dim=dim, line=line, col=col)


def _parse_box(value: str, line: int, col: int) -> tuple[tuple[float, float], ...]:
    out = []
    for part in value.split(","):
        bounds = part.split(":")
        if len(bounds) != 2:
            raise ParseError("syntax", f"box interval {part.strip()!r} must look like lo:hi", line, col)
        lo, hi = (_number(b.strip(), "box", line, col) for b in bounds)
        if not lo < hi:
            raise ParseError("syntax", f"box interval {part.strip()!r} is empty", line, col)
        out.append((lo, hi))
    return tuple(out)

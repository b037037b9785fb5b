"""Arithmetic expression trees shared by rate functions and property atoms.

Expressions are built over identifiers (species or parameter names), numeric
literals, the operators ``+ - * / ^`` and the functions ``min``, ``max`` and
``abs``.  Property atoms may additionally use ``mean(X)`` (the ensemble-mean
signal of species X) and ``delta(X)`` (the jump increment of X); those two
never appear in rate expressions.

Everything here is immutable; parsed trees can be shared freely between
threads and processes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .errors import FormulaSyntaxError, ModelSyntaxError

__all__ = [
    "Expr",
    "Num",
    "Ident",
    "Neg",
    "BinOp",
    "Call",
    "Token",
    "tokenize",
    "ExprParser",
    "pretty",
    "free_identifiers",
    "call_targets",
    "compile_rate_fn",
]

PLAIN_FUNCTIONS = ("abs", "min", "max")
SIGNAL_FUNCTIONS = ("mean", "delta")

_ARITY = {"abs": 1, "min": 2, "max": 2, "mean": 1, "delta": 1}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expr", ...]


Expr = Union[Num, Ident, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# tokenizer (shared with the property parser)

@dataclass(frozen=True)
class Token:
    kind: str  # NUM | IDENT | OP
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""(?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op><=|>=|==|\*\*|->|[-+*/^<>=!&|(),\[\]@])
      | (?P<ws>\s+)
    """,
    re.X,
)


def tokenize(text: str, *, error: type[Exception] = FormulaSyntaxError) -> list[Token]:
    """Split ``text`` into tokens, raising ``error`` on unknown characters."""
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise error(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(Token("NUM", m.group(), pos))
        elif m.lastgroup == "ident":
            tokens.append(Token("IDENT", m.group(), pos))
        elif m.lastgroup == "op":
            tok = m.group()
            tokens.append(Token("OP", "^" if tok == "**" else tok, pos))
        pos = m.end()
    return tokens


class ExprParser:
    """Recursive-descent parser over a token list.

    Grammar (loosest to tightest binding)::

        arith  := term (('+' | '-') term)*
        term   := signed (('*' | '/') signed)*
        signed := '-' signed | power
        power  := atom ('^' signed)?          # right associative
        atom   := NUM | IDENT | IDENT '(' arith (',' arith)* ')' | '(' arith ')'

    ``functions`` restricts which call names are accepted; rate expressions
    pass only the plain arithmetic ones.
    """

    def __init__(self, tokens: list[Token], *, functions: tuple[str, ...] = PLAIN_FUNCTIONS,
                 error: type[Exception] = FormulaSyntaxError, text_len: int = 0):
        self.tokens = tokens
        self.i = 0
        self.functions = functions
        self.error = error
        self.text_len = text_len

    # --- token helpers ---

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input", self.text_len)
        self.i += 1
        return tok

    def accept_op(self, *ops: str) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind == "OP" and tok.text in ops:
            self.i += 1
            return tok
        return None

    def expect_op(self, op: str) -> Token:
        tok = self.accept_op(op)
        if tok is None:
            got = self.peek()
            where = got.pos if got else self.text_len
            raise self.error(f"expected {op!r}" + (f", got {got.text!r}" if got else ""), where)
        return tok

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    # --- grammar ---

    def arith(self) -> Expr:
        node = self.term()
        while (tok := self.accept_op("+", "-")) is not None:
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.signed()
        while (tok := self.accept_op("*", "/")) is not None:
            node = BinOp(tok.text, node, self.signed())
        return node

    def signed(self) -> Expr:
        if self.accept_op("-") is not None:
            return Neg(self.signed())
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        if self.accept_op("^") is not None:
            node = BinOp("^", node, self.signed())
        return node

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "NUM":
            return Num(float(tok.text))
        if tok.kind == "IDENT":
            nxt = self.peek()
            if nxt is not None and nxt.kind == "OP" and nxt.text == "(":
                if tok.text not in self.functions:
                    raise self.error(f"unknown function {tok.text!r}", tok.pos)
                self.next()  # (
                args = [self.arith()]
                while self.accept_op(",") is not None:
                    args.append(self.arith())
                self.expect_op(")")
                if len(args) != _ARITY[tok.text]:
                    raise self.error(
                        f"{tok.text} takes {_ARITY[tok.text]} argument(s), got {len(args)}", tok.pos)
                if tok.text in SIGNAL_FUNCTIONS and not isinstance(args[0], Ident):
                    raise self.error(f"{tok.text}(...) takes a species name", tok.pos)
                return Call(tok.text, tuple(args))
            return Ident(tok.text)
        if tok.kind == "OP" and tok.text == "(":
            node = self.arith()
            self.expect_op(")")
            return node
        raise self.error(f"unexpected token {tok.text!r}", tok.pos)


def parse_arith(text: str, *, functions: tuple[str, ...] = PLAIN_FUNCTIONS,
                error: type[Exception] = ModelSyntaxError) -> Expr:
    """Parse a stand-alone arithmetic expression (rate-function syntax)."""
    parser = ExprParser(tokenize(text, error=error), functions=functions,
                        error=error, text_len=len(text))
    node = parser.arith()
    if not parser.at_end():
        tok = parser.peek()
        raise error(f"trailing input {tok.text!r}", tok.pos)
    return node


# ---------------------------------------------------------------------------
# introspection and printing

def _walk(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, Neg):
        yield from _walk(expr.operand)
    elif isinstance(expr, BinOp):
        yield from _walk(expr.lhs)
        yield from _walk(expr.rhs)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from _walk(a)


def free_identifiers(expr: Expr) -> set[str]:
    """Names referenced directly (excludes the species inside mean/delta)."""
    names: set[str] = set()
    skip: set[int] = set()
    for node in _walk(expr):
        if isinstance(node, Call) and node.fn in SIGNAL_FUNCTIONS:
            skip.add(id(node.args[0]))
        elif isinstance(node, Ident) and id(node) not in skip:
            names.add(node.name)
    return names


def call_targets(expr: Expr, fn: str) -> set[str]:
    """Species names appearing as ``fn(X)`` for a signal function."""
    out: set[str] = set()
    for node in _walk(expr):
        if isinstance(node, Call) and node.fn == fn:
            assert isinstance(node.args[0], Ident)
            out.add(node.args[0].name)
    return out


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def pretty(expr: Expr) -> str:
    """Render an expression in the same concrete syntax the parser accepts."""

    def render(node: Expr, parent_prec: int) -> str:
        if isinstance(node, Num):
            return format(node.value, ".17g")
        if isinstance(node, Ident):
            return node.name
        if isinstance(node, Neg):
            inner = render(node.operand, 4)
            s = f"-{inner}"
            return f"({s})" if parent_prec > 2 else s
        if isinstance(node, Call):
            return f"{node.fn}({', '.join(render(a, 0) for a in node.args)})"
        prec = _PRECEDENCE[node.op]
        left = render(node.lhs, prec)
        # right operand needs parens at equal precedence for - / (left assoc)
        right = render(node.rhs, prec + (0 if node.op == "^" else 1))
        s = f"{left} {node.op} {right}"
        return f"({s})" if parent_prec > prec else s

    return render(expr, 0)


# ---------------------------------------------------------------------------
# compilation for the simulator hot path

def _emit(expr: Expr, species_idx: dict[str, int], param_idx: dict[str, int]) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Ident):
        if expr.name in species_idx:
            return f"s[{species_idx[expr.name]}]"
        return f"p[{param_idx[expr.name]}]"
    if isinstance(expr, Neg):
        return f"(-{_emit(expr.operand, species_idx, param_idx)})"
    if isinstance(expr, Call):
        args = ", ".join(_emit(a, species_idx, param_idx) for a in expr.args)
        return f"{expr.fn}({args})"
    op = "**" if expr.op == "^" else expr.op
    return f"({_emit(expr.lhs, species_idx, param_idx)} {op} {_emit(expr.rhs, species_idx, param_idx)})"


def compile_rate_fn(expr: Expr, species_idx: dict[str, int],
                    param_idx: dict[str, int]) -> Callable[[list, list], float]:
    """Compile a rate expression to ``f(state, params) -> float``.

    The generated source only ever contains indexing into the two argument
    sequences, numeric literals and the whitelisted functions, so ``eval`` of
    our own codegen output is safe.
    """
    body = _emit(expr, species_idx, param_idx)
    return eval(f"lambda s, p: {body}", {"min": min, "max": max, "abs": abs, "__builtins__": {}})

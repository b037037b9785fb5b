"""Time-bounded MiTL formulae: abstract syntax, parser and horizon.

Concrete syntax (infix, ``#`` comments allowed in property files)::

    phi := tt | comparison | ! phi | phi & phi | phi | phi
         | F[a,b] phi | G[a,b] phi | phi U[a,b] phi | ( phi )

Comparisons relate arithmetic expressions over species names, parameters,
``mean(X)``, ``delta(X)`` and literals with one of ``< <= > >= =``.
``|`` is sugar for ``!(!p & !q)``; ``F``/``G`` are kept as their own nodes.
``tt``, ``F``, ``G`` and ``U`` are only treated as keywords where a formula
operator is expected (``F``/``G``/``U`` additionally require a following
``[``), so species may reuse those letters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .. import expressions as ex
from ..errors import FormulaSyntaxError
from ..model import Model

__all__ = ["Formula", "TrueFormula", "Atomic", "Not", "And", "Until", "Eventually",
           "Always", "parse_formula", "horizon", "pretty_formula", "mean_species",
           "delta_species", "atom_identifiers", "validate_formula"]

COMPARISONS = ("<", "<=", ">", ">=", "=")


@dataclass(frozen=True)
class TrueFormula:
    pass


@dataclass(frozen=True)
class Atomic:
    lhs: ex.Expr
    op: str  # one of COMPARISONS
    rhs: ex.Expr


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    t1: float
    t2: float
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Eventually:
    t1: float
    t2: float
    operand: "Formula"


@dataclass(frozen=True)
class Always:
    t1: float
    t2: float
    operand: "Formula"


Formula = Union[TrueFormula, Atomic, Not, And, Until, Eventually, Always]

_ATOM_FUNCTIONS = ex.PLAIN_FUNCTIONS + ex.SIGNAL_FUNCTIONS


class _FormulaParser(ex.ExprParser):
    def __init__(self, text: str):
        body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
        super().__init__(ex.tokenize(body, error=FormulaSyntaxError),
                         functions=_ATOM_FUNCTIONS, error=FormulaSyntaxError,
                         text_len=len(body))

    def formula(self) -> Formula:
        node = self.disjunction()
        tok = self.peek()
        if tok is not None and tok.kind == "IDENT" and tok.text == "U" \
                and self._next_is_bracket():
            self.next()
            t1, t2 = self.bounds()
            return Until(t1, t2, node, self.formula())
        return node

    def _next_is_bracket(self) -> bool:
        nxt = self.peek(1)
        return nxt is not None and nxt.kind == "OP" and nxt.text == "["

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.accept_op("|") is not None:
            rhs = self.conjunction()
            node = Not(And(Not(node), Not(rhs)))
        return node

    def conjunction(self) -> Formula:
        node = self.unary()
        while self.accept_op("&") is not None:
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("unexpected end of formula", self.text_len)
        if tok.kind == "OP" and tok.text == "!":
            self.next()
            return Not(self.unary())
        if tok.kind == "IDENT" and tok.text in ("F", "G") and self._next_is_bracket():
            self.next()
            t1, t2 = self.bounds()
            operand = self.unary()
            return Eventually(t1, t2, operand) if tok.text == "F" else Always(t1, t2, operand)
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok is not None and tok.kind == "IDENT" and tok.text == "tt":
            nxt = self.peek(1)
            # 'tt' is the constant unless it starts a comparison like tt < 4
            if nxt is None or not (nxt.kind == "OP" and nxt.text in
                                   ("<", "<=", ">", ">=", "=", "==", "+", "-", "*", "/", "^")):
                self.next()
                return TrueFormula()
        saved = self.i
        try:
            return self.comparison()
        except FormulaSyntaxError:
            self.i = saved
        if self.accept_op("(") is not None:
            node = self.formula()
            self.expect_op(")")
            return node
        got = self.peek()
        raise FormulaSyntaxError("expected atom, 'tt' or '('",
                                 got.pos if got else self.text_len)

    def comparison(self) -> Atomic:
        lhs = self.arith()
        tok = self.peek()
        if tok is None or tok.kind != "OP" or tok.text not in ("<", "<=", ">", ">=", "=", "=="):
            raise FormulaSyntaxError("expected comparison operator",
                                     tok.pos if tok else self.text_len)
        self.next()
        op = "=" if tok.text == "==" else tok.text
        return Atomic(lhs, op, self.arith())

    def bounds(self) -> tuple[float, float]:
        self.expect_op("[")
        t1 = self.bound_number()
        self.expect_op(",")
        t2 = self.bound_number()
        self.expect_op("]")
        if t1 > t2:
            raise FormulaSyntaxError(f"temporal bounds out of order: {t1:g} > {t2:g}")
        return t1, t2

    def bound_number(self) -> float:
        if self.accept_op("-") is not None:
            raise FormulaSyntaxError("temporal bound must be non-negative",
                                     self.tokens[self.i - 1].pos)
        tok = self.next()
        if tok.kind != "NUM":
            raise FormulaSyntaxError(f"expected a numeric bound, got {tok.text!r}", tok.pos)
        return float(tok.text)


def parse_formula(text: str) -> Formula:
    parser = _FormulaParser(text)
    node = parser.formula()
    if not parser.at_end():
        tok = parser.peek()
        raise FormulaSyntaxError(f"trailing input {tok.text!r}", tok.pos)
    return node


def horizon(f: Formula) -> float:
    """Smallest T such that truth at time 0 is determined by the path on [0, T]."""
    if isinstance(f, (TrueFormula, Atomic)):
        return 0.0
    if isinstance(f, Not):
        return horizon(f.operand)
    if isinstance(f, And):
        return max(horizon(f.left), horizon(f.right))
    if isinstance(f, Until):
        return f.t2 + max(horizon(f.left), horizon(f.right))
    return f.t2 + horizon(f.operand)


def pretty_formula(f: Formula) -> str:
    if isinstance(f, TrueFormula):
        return "tt"
    if isinstance(f, Atomic):
        return f"{ex.pretty(f.lhs)} {f.op} {ex.pretty(f.rhs)}"
    if isinstance(f, Not):
        return f"!({pretty_formula(f.operand)})"
    if isinstance(f, And):
        return f"({pretty_formula(f.left)}) & ({pretty_formula(f.right)})"
    if isinstance(f, Until):
        return (f"({pretty_formula(f.left)}) U[{f.t1:g},{f.t2:g}] "
                f"({pretty_formula(f.right)})")
    op = "F" if isinstance(f, Eventually) else "G"
    return f"{op}[{f.t1:g},{f.t2:g}] ({pretty_formula(f.operand)})"


def _atoms(f: Formula):
    if isinstance(f, Atomic):
        yield f
    elif isinstance(f, Not):
        yield from _atoms(f.operand)
    elif isinstance(f, And):
        yield from _atoms(f.left)
        yield from _atoms(f.right)
    elif isinstance(f, Until):
        yield from _atoms(f.left)
        yield from _atoms(f.right)
    elif isinstance(f, (Eventually, Always)):
        yield from _atoms(f.operand)


def mean_species(f: Formula) -> set[str]:
    """Species whose ensemble-mean signal the formula requires."""
    out: set[str] = set()
    for atom in _atoms(f):
        out |= ex.call_targets(atom.lhs, "mean") | ex.call_targets(atom.rhs, "mean")
    return out


def delta_species(f: Formula) -> set[str]:
    out: set[str] = set()
    for atom in _atoms(f):
        out |= ex.call_targets(atom.lhs, "delta") | ex.call_targets(atom.rhs, "delta")
    return out


def atom_identifiers(f: Formula) -> set[str]:
    """Bare identifiers referenced by atoms (species or parameter names)."""
    out: set[str] = set()
    for atom in _atoms(f):
        out |= ex.free_identifiers(atom.lhs) | ex.free_identifiers(atom.rhs)
    return out


def validate_formula(f: Formula, model: Model) -> None:
    """Check that every identifier in the formula is declared by the model."""
    species = set(model.species)
    declared = species | set(model.param_names)
    problems = [f"undeclared identifier '{n}'"
                for n in sorted(atom_identifiers(f) - declared)]
    problems += [f"mean() of undeclared species '{n}'"
                 for n in sorted(mean_species(f) - species)]
    problems += [f"delta() of undeclared species '{n}'"
                 for n in sorted(delta_species(f) - species)]
    if problems:
        raise FormulaSyntaxError("; ".join(problems))

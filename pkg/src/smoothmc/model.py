"""Reaction-network model definitions and their concrete file syntax.

A model file is line oriented, with ``#`` starting a comment::

    species S=99 I=1 R=0
    param k_i=0.12 k_r=0.05
    reaction S + I -> I + I @ k_i*S*I
    reaction I -> R @ k_r*I

``species`` entries give the initial state.  Reaction sides are written in
chemical style with optional integer coefficients (``2 A + B``); an empty
side (or a bare ``0``) denotes no consumption/production, e.g. a source
reaction ``reaction -> N @ mu``.  Rates are arbitrary arithmetic expressions
over species and parameters; non-negativity is checked when they are
evaluated, not statically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import expressions as ex
from .errors import ModelSyntaxError, ModelValidationError, RateEvaluationError

__all__ = ["Reaction", "Model", "parse_model", "validate_model", "eval_rate", "pretty_model"]


@dataclass(frozen=True)
class Reaction:
    """One reaction channel: consumed/produced counts per species and a rate."""

    consumed: tuple[int, ...]
    produced: tuple[int, ...]
    rate: ex.Expr

    @property
    def net_change(self) -> tuple[int, ...]:
        return tuple(p - c for c, p in zip(self.consumed, self.produced))


@dataclass(frozen=True)
class Model:
    species: tuple[str, ...]
    parameters: tuple[tuple[str, float], ...]  # (name, default value)
    reactions: tuple[Reaction, ...]
    initial_state: tuple[int, ...]

    @property
    def species_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.species)}

    @property
    def param_index(self) -> dict[str, int]:
        return {name: i for i, (name, _) in enumerate(self.parameters)}

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.parameters)

    @property
    def default_params(self) -> tuple[float, ...]:
        return tuple(value for _, value in self.parameters)

    def params_with(self, overrides: dict[str, float]) -> tuple[float, ...]:
        """Default parameter vector with the given names replaced."""
        idx = self.param_index
        unknown = set(overrides) - set(idx)
        if unknown:
            raise ModelValidationError([f"unknown parameter '{n}'" for n in sorted(unknown)])
        values = list(self.default_params)
        for name, value in overrides.items():
            values[idx[name]] = float(value)
        return tuple(values)


# ---------------------------------------------------------------------------
# parsing

def _parse_assignments(rest: str, line_no: int) -> list[tuple[str, float]]:
    """Parse ``name=value`` pairs (whitespace-insensitive, values may be negative)."""
    try:
        tokens = ex.tokenize(rest, error=ModelSyntaxError)
    except ModelSyntaxError as err:
        raise ModelSyntaxError(str(err), line_no) from None
    out = []
    i = 0
    while i < len(tokens):
        if tokens[i].kind != "IDENT" or i + 1 >= len(tokens) \
                or tokens[i + 1].text != "=":
            raise ModelSyntaxError(f"expected name=value near {tokens[i].text!r}", line_no)
        sign = 1.0
        j = i + 2
        if j < len(tokens) and tokens[j].text == "-":
            sign = -1.0
            j += 1
        if j >= len(tokens) or tokens[j].kind != "NUM":
            raise ModelSyntaxError(f"expected a number for {tokens[i].text!r}", line_no)
        out.append((tokens[i].text, sign * float(tokens[j].text)))
        i = j + 1
    return out


def _parse_side(text: str, line_no: int) -> list[tuple[int, str]]:
    """Parse one reaction side: ``[coeff] species (+ [coeff] species)*`` or empty/0."""
    try:
        tokens = ex.tokenize(text, error=ModelSyntaxError)
    except ModelSyntaxError as err:
        raise ModelSyntaxError(str(err), line_no) from None
    if not tokens or (len(tokens) == 1 and tokens[0].text == "0"):
        return []
    terms = []
    i = 0
    while True:
        coeff = 1
        if i < len(tokens) and tokens[i].kind == "NUM":
            if not tokens[i].text.isdigit():
                raise ModelSyntaxError("stoichiometric coefficient must be a "
                                       f"non-negative integer, got {tokens[i].text!r}", line_no)
            coeff = int(tokens[i].text)
            i += 1
        if i >= len(tokens) or tokens[i].kind != "IDENT":
            raise ModelSyntaxError(f"expected a species name in {text.strip()!r}", line_no)
        terms.append((coeff, tokens[i].text))
        i += 1
        if i == len(tokens):
            return terms
        if tokens[i].text != "+":
            raise ModelSyntaxError(f"expected '+' between reaction terms in {text.strip()!r}",
                                   line_no)
        i += 1


def parse_model(text: str) -> Model:
    """Parse model source into a validated :class:`Model`."""
    species: list[tuple[str, float]] = []
    params: list[tuple[str, float]] = []
    raw_reactions: list[tuple[int, list, list, ex.Expr]] = []

    any_directive = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        any_directive = True
        keyword, _, rest = line.partition(" ")
        if keyword == "species":
            species.extend(_parse_assignments(rest, line_no))
        elif keyword == "param":
            params.extend(_parse_assignments(rest, line_no))
        elif keyword == "reaction":
            if "@" not in rest:
                raise ModelSyntaxError("reaction needs a rate after '@'", line_no)
            stoich, _, rate_text = rest.partition("@")
            if "->" not in stoich:
                raise ModelSyntaxError("reaction needs '->'", line_no)
            lhs_text, _, rhs_text = stoich.partition("->")
            lhs = _parse_side(lhs_text, line_no)
            rhs = _parse_side(rhs_text, line_no)
            try:
                rate = ex.parse_arith(rate_text.strip(), error=ModelSyntaxError)
            except ModelSyntaxError as err:
                raise ModelSyntaxError(f"bad rate expression: {err}", line_no) from None
            raw_reactions.append((line_no, lhs, rhs, rate))
        else:
            raise ModelSyntaxError(f"unknown directive {keyword!r}", line_no)

    if not any_directive:
        raise ModelSyntaxError("empty model source", 1)
    if not species:
        raise ModelSyntaxError("missing 'species' line (initial state)", 1)

    names = [n for n, _ in species]
    index = {n: i for i, n in enumerate(names)}
    init = []
    for name, value in species:
        if value < 0 or value != int(value):
            raise ModelSyntaxError(f"initial count for {name} must be a non-negative integer")
        init.append(int(value))

    param_names = {n for n, _ in params}
    declared = set(names) | param_names
    reactions = []
    for line_no, lhs, rhs, rate in raw_reactions:
        consumed = [0] * len(names)
        produced = [0] * len(names)
        for coeff, name in lhs:
            if name not in index:
                raise ModelSyntaxError(f"undeclared species {name!r} in reaction", line_no)
            consumed[index[name]] += coeff
        for coeff, name in rhs:
            if name not in index:
                raise ModelSyntaxError(f"undeclared species {name!r} in reaction", line_no)
            produced[index[name]] += coeff
        for ident in sorted(ex.free_identifiers(rate)):
            if ident not in declared:
                raise ModelSyntaxError(f"undeclared identifier {ident!r} in rate", line_no)
        reactions.append(Reaction(tuple(consumed), tuple(produced), rate))

    model = Model(tuple(names), tuple(params), tuple(reactions), tuple(init))
    validate_model(model)
    return model


def validate_model(m: Model) -> None:
    """Check every model invariant, collecting all violations before raising."""
    problems: list[str] = []

    seen: set[str] = set()
    for name in m.species:
        if name in seen:
            problems.append(f"duplicate species name '{name}'")
        seen.add(name)
    pseen: set[str] = set()
    for name, _ in m.parameters:
        if name in pseen:
            problems.append(f"duplicate parameter name '{name}'")
        pseen.add(name)
    overlap = seen & pseen
    for name in sorted(overlap):
        problems.append(f"name '{name}' declared as both species and parameter")

    n = len(m.species)
    if len(m.initial_state) != n:
        problems.append(f"initial state has {len(m.initial_state)} entries, expected {n}")
    for name, count in zip(m.species, m.initial_state):
        if count < 0:
            problems.append(f"negative initial count for '{name}'")

    declared = seen | pseen
    for k, rx in enumerate(m.reactions):
        if len(rx.consumed) != n or len(rx.produced) != n:
            problems.append(f"reaction {k}: stoichiometry length mismatch "
                            f"({len(rx.consumed)}/{len(rx.produced)} vs {n} species)")
        if any(c < 0 for c in rx.consumed) or any(p < 0 for p in rx.produced):
            problems.append(f"reaction {k}: negative stoichiometry")
        for ident in sorted(ex.free_identifiers(rx.rate)):
            if ident not in declared:
                problems.append(f"reaction {k}: undeclared identifier '{ident}' in rate")

    if problems:
        raise ModelValidationError(problems)


# ---------------------------------------------------------------------------
# evaluation and printing

def eval_rate(expr: ex.Expr, model: Model, state, params) -> float:
    """Evaluate one rate expression at a state/parameter point.

    Raises :class:`RateEvaluationError` if the result is negative, NaN or
    infinite, or if evaluation divides by zero.
    """
    fn = ex.compile_rate_fn(expr, model.species_index, model.param_index)
    try:
        value = fn(list(state), list(params))
    except ZeroDivisionError:
        raise RateEvaluationError(f"division by zero in rate '{ex.pretty(expr)}'") from None
    if not math.isfinite(value) or value < 0:
        raise RateEvaluationError(
            f"rate '{ex.pretty(expr)}' evaluated to {value!r} at state {tuple(state)}")
    return value


def pretty_model(m: Model) -> str:
    """Render a model back into its file syntax (parses to an equal Model)."""
    lines = ["species " + " ".join(f"{n}={c}" for n, c in zip(m.species, m.initial_state))]
    if m.parameters:
        lines.append("param " + " ".join(f"{n}={format(v, '.17g')}" for n, v in m.parameters))

    def side(counts: tuple[int, ...]) -> str:
        terms = []
        for name, c in zip(m.species, counts):
            if c == 1:
                terms.append(name)
            elif c > 1:
                terms.append(f"{c} {name}")
        return " + ".join(terms) if terms else "0"

    for rx in m.reactions:
        lines.append(f"reaction {side(rx.consumed)} -> {side(rx.produced)} @ {ex.pretty(rx.rate)}")
    return "\n".join(lines) + "\n"

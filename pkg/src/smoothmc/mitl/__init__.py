"""Time-bounded MiTL: formula syntax, interval sets and the exact monitor."""

from .formula import (Always, And, Atomic, Eventually, Formula, Not, TrueFormula,
                      Until, atom_identifiers, delta_species, horizon, mean_species,
                      parse_formula, pretty_formula, validate_formula)
from .intervals import Interval, IntervalSet
from .monitor import monitor, sat_intervals

__all__ = [
    "Always", "And", "Atomic", "Eventually", "Formula", "Not", "TrueFormula", "Until",
    "atom_identifiers", "delta_species", "horizon", "mean_species", "parse_formula",
    "pretty_formula", "validate_formula", "Interval", "IntervalSet", "monitor",
    "sat_intervals",
]

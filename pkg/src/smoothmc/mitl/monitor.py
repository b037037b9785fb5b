"""Exact satisfaction of MiTL formulae on piecewise-constant trajectories.

The monitor computes, for every subformula, the full set of time points at
which it holds (an :class:`IntervalSet`) and combines those sets:

* boolean operators become complement/intersection within the subformula's
  valid window ``[0, horizon(trajectory) - horizon(subformula)]``;
* ``phi1 U[a,b] phi2`` is assembled per maximal interval ``I`` on which
  ``phi1`` holds: witnesses must satisfy phi2 inside ``I`` (the until
  requires phi1 on the closed interval up to and including the witness), and
  the candidate start times are recovered by shifting the witness set back by
  the window ``[a, b]``.

Atoms are evaluated per trajectory segment, with ``delta(X)`` non-zero only
at the jump instants themselves, which is what produces single-point
intervals.  Atoms referencing ``mean(X)`` vary continuously inside segments;
their truth regions are located by sampling and bisection on a grid refined
by the mean signal's nodes (crossings resolved to ~1e-12 of the horizon).
"""

from __future__ import annotations

import numpy as np

from .. import expressions as ex
from ..errors import MonitorError
from ..simulate import MeanSignal, Trajectory
from .formula import (Always, And, Atomic, Eventually, Formula, Not, TrueFormula,
                      Until, horizon, mean_species)
from .intervals import Interval, IntervalSet

__all__ = ["sat_intervals", "monitor"]

_BISECT_REL_TOL = 1e-12
_SEGMENT_SAMPLES = 9


def _compare(op: str, lhs, rhs):
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    return lhs == rhs


class _AtomContext:
    """Per-trajectory data shared by all atom evaluations."""

    def __init__(self, tr: Trajectory, means: dict[str, MeanSignal],
                 params: dict[str, float]):
        self.tr = tr
        self.means = means
        self.params = params
        self.species_idx = {name: i for i, name in enumerate(tr.species)}

        times = tr.times
        bounds = [0.0]
        bounds.extend(float(t) for t in times)
        if bounds[-1] < tr.horizon:
            bounds.append(tr.horizon)
        self.bounds = np.array(bounds)                       # m+1 boundary points
        self.row = np.searchsorted(times, self.bounds, side="right")
        # jump increment at each boundary point (zero at 0 and at T unless a jump)
        deltas = np.zeros((len(self.bounds), tr.states.shape[1]), dtype=np.int64)
        jump_pos = np.searchsorted(self.bounds, times)
        deltas[jump_pos] = tr.states[1:] - tr.states[:-1]
        self.deltas = deltas
        self.bound_states = tr.states[self.row]
        self.seg_states = tr.states[self.row[:-1]]           # state inside (b_i, b_{i+1})

    # --- vectorized path: no mean() references ---

    def _eval_vec(self, expr: ex.Expr, states: np.ndarray, deltas: np.ndarray | None):
        if isinstance(expr, ex.Num):
            return expr.value
        if isinstance(expr, ex.Ident):
            if expr.name in self.species_idx:
                return states[:, self.species_idx[expr.name]].astype(float)
            if expr.name in self.params:
                return self.params[expr.name]
            raise MonitorError(f"unresolved identifier '{expr.name}' "
                               "(species unknown and no parameter value supplied)")
        if isinstance(expr, ex.Neg):
            return -self._eval_vec(expr.operand, states, deltas)
        if isinstance(expr, ex.Call):
            if expr.fn == "delta":
                name = expr.args[0].name
                if name not in self.species_idx:
                    raise MonitorError(f"delta() of unknown species '{name}'")
                if deltas is None:
                    return 0.0
                return deltas[:, self.species_idx[name]].astype(float)
            if expr.fn == "mean":
                raise MonitorError("mean() reached the vectorized atom path")
            args = [self._eval_vec(a, states, deltas) for a in expr.args]
            if expr.fn == "abs":
                return np.abs(args[0])
            if expr.fn == "min":
                return np.minimum(args[0], args[1])
            return np.maximum(args[0], args[1])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            a = self._eval_vec(expr.lhs, states, deltas)
            b = self._eval_vec(expr.rhs, states, deltas)
            if expr.op == "+":
                return a + b
            if expr.op == "-":
                return a - b
            if expr.op == "*":
                return a * b
            if expr.op == "/":
                return np.divide(a, b)
            return np.power(a, b)

    def atom_set_plain(self, atom: Atomic) -> IntervalSet:
        with np.errstate(invalid="ignore"):
            seg = _compare(atom.op,
                           np.broadcast_to(self._eval_vec(atom.lhs, self.seg_states, None),
                                           (len(self.bounds) - 1,)),
                           np.broadcast_to(self._eval_vec(atom.rhs, self.seg_states, None),
                                           (len(self.bounds) - 1,)))
            bnd = _compare(atom.op,
                           np.broadcast_to(self._eval_vec(atom.lhs, self.bound_states, self.deltas),
                                           (len(self.bounds),)),
                           np.broadcast_to(self._eval_vec(atom.rhs, self.bound_states, self.deltas),
                                           (len(self.bounds),)))
        return self._intervals_from_truth(self.bounds, np.asarray(bnd), np.asarray(seg))

    @staticmethod
    def _intervals_from_truth(bounds: np.ndarray, bnd: np.ndarray,
                              seg: np.ndarray) -> IntervalSet:
        # interleave boundary/segment truth: position 2i = point bounds[i],
        # position 2i+1 = open segment (bounds[i], bounds[i+1])
        m = len(bounds)
        combined = np.zeros(2 * m - 1, dtype=bool)
        combined[0::2] = bnd
        combined[1::2] = seg
        if not combined.any():
            return IntervalSet.empty()
        padded = np.concatenate(([False], combined, [False]))
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        starts, ends = edges[0::2], edges[1::2] - 1  # inclusive positions
        out = []
        for s, e in zip(starts, ends):
            lo = bounds[s // 2]
            lo_closed = s % 2 == 0
            hi = bounds[e // 2] if e % 2 == 0 else bounds[(e + 1) // 2]
            hi_closed = e % 2 == 0
            out.append(Interval(float(lo), float(hi), bool(lo_closed), bool(hi_closed)))
        return IntervalSet(out, _normalized=True)

    # --- scalar path: atoms that reference mean(X) ---

    def _eval_at(self, expr: ex.Expr, t: float, row: int, use_delta: bool):
        if isinstance(expr, ex.Num):
            return expr.value
        if isinstance(expr, ex.Ident):
            if expr.name in self.species_idx:
                return float(self.tr.states[row, self.species_idx[expr.name]])
            if expr.name in self.params:
                return self.params[expr.name]
            raise MonitorError(f"unresolved identifier '{expr.name}'")
        if isinstance(expr, ex.Neg):
            return -self._eval_at(expr.operand, t, row, use_delta)
        if isinstance(expr, ex.Call):
            if expr.fn == "mean":
                name = expr.args[0].name
                if name not in self.means:
                    raise MonitorError(f"missing mean signal for species '{name}'")
                return float(self.means[name].value_at(t))
            if expr.fn == "delta":
                name = expr.args[0].name
                if not use_delta:
                    return 0.0
                j = np.searchsorted(self.tr.times, t)
                if j < len(self.tr.times) and self.tr.times[j] == t:
                    return float(self.tr.states[j + 1, self.species_idx[name]]
                                 - self.tr.states[j, self.species_idx[name]])
                return 0.0
            args = [self._eval_at(a, t, row, use_delta) for a in expr.args]
            if expr.fn == "abs":
                return abs(args[0])
            if expr.fn == "min":
                return min(args)
            return max(args)
        a = self._eval_at(expr.lhs, t, row, use_delta)
        b = self._eval_at(expr.rhs, t, row, use_delta)
        try:
            if expr.op == "+":
                return a + b
            if expr.op == "-":
                return a - b
            if expr.op == "*":
                return a * b
            if expr.op == "/":
                return a / b
            return a ** b
        except (ZeroDivisionError, OverflowError):
            return float("nan")

    def atom_set_with_mean(self, atom: Atomic) -> IntervalSet:
        needed = (ex.call_targets(atom.lhs, "mean") | ex.call_targets(atom.rhs, "mean"))
        missing = [n for n in sorted(needed) if n not in self.means]
        if missing:
            raise MonitorError("missing mean signal for species " +
                               ", ".join(f"'{n}'" for n in missing))
        grids = [self.means[n].grid for n in needed]
        refined = np.unique(np.concatenate([self.bounds] + grids))
        refined = refined[(refined >= 0.0) & (refined <= self.tr.horizon)]
        rows = np.searchsorted(self.tr.times, refined, side="right")

        def truth(t: float, row: int, use_delta: bool) -> bool:
            lhs = self._eval_at(atom.lhs, t, row, use_delta)
            rhs = self._eval_at(atom.rhs, t, row, use_delta)
            if lhs != lhs or rhs != rhs:  # NaN never satisfies a comparison
                return False
            return bool(_compare(atom.op, lhs, rhs))

        tol = max(self.tr.horizon, 1.0) * _BISECT_REL_TOL
        pieces: list[Interval] = []
        for i, t in enumerate(refined):
            if truth(float(t), int(rows[i]), True):
                pieces.append(Interval(float(t), float(t), True, True))
        for i in range(len(refined) - 1):
            u, v = float(refined[i]), float(refined[i + 1])
            row = int(rows[i])
            samples = np.linspace(u, v, _SEGMENT_SAMPLES + 2)[1:-1]
            values = [truth(float(s), row, False) for s in samples]
            cuts = [u]
            for a, b, va, vb in zip(samples[:-1], samples[1:], values[:-1], values[1:]):
                if va != vb:
                    lo_t, hi_t = float(a), float(b)
                    while hi_t - lo_t > tol:
                        mid = 0.5 * (lo_t + hi_t)
                        if truth(mid, row, False) == va:
                            lo_t = mid
                        else:
                            hi_t = mid
                    cuts.append(hi_t)
            cuts.append(v)
            flags = [truth(0.5 * (a + b), row, False) for a, b in zip(cuts[:-1], cuts[1:])]
            for a, b, ok in zip(cuts[:-1], cuts[1:], flags):
                if ok:
                    pieces.append(Interval(a, b, False, False))
        return IntervalSet(pieces)

    def atom_set(self, atom: Atomic) -> IntervalSet:
        if ex.call_targets(atom.lhs, "mean") or ex.call_targets(atom.rhs, "mean"):
            return self.atom_set_with_mean(atom)
        return self.atom_set_plain(atom)


def _sat(f: Formula, ctx: _AtomContext, total: float) -> IntervalSet:
    if isinstance(f, TrueFormula):
        return IntervalSet.full(total)
    if isinstance(f, Atomic):
        return ctx.atom_set(f)
    if isinstance(f, Not):
        return _sat(f.operand, ctx, total).complement(total - horizon(f.operand))
    if isinstance(f, And):
        return _sat(f.left, ctx, total).intersect(_sat(f.right, ctx, total))
    window = total - horizon(f)
    if isinstance(f, Eventually):
        return _sat(f.operand, ctx, total).back_shift(f.t1, f.t2).clip(window)
    if isinstance(f, Always):
        inner_window = total - horizon(f.operand)
        holes = _sat(f.operand, ctx, total).complement(inner_window)
        return holes.back_shift(f.t1, f.t2).clip(window).complement(window)
    assert isinstance(f, Until)
    left = _sat(f.left, ctx, total)
    right = _sat(f.right, ctx, total)
    out = IntervalSet.empty()
    for iv in left.intervals:
        block = IntervalSet((iv,), _normalized=True)
        witnesses = right.intersect(block)
        if witnesses.is_empty():
            continue
        starts = witnesses.back_shift(f.t1, f.t2).intersect(block)
        out = out.union(starts)
    return out.clip(window)


def _normalize_means(means) -> dict[str, MeanSignal]:
    if means is None:
        return {}
    if isinstance(means, MeanSignal):
        return {means.species: means}
    return dict(means)


def sat_intervals(f: Formula, tr: Trajectory, means=None,
                  params: dict[str, float] | None = None) -> IntervalSet:
    """All t in [0, tr.horizon - horizon(f)] at which the trajectory satisfies f.

    ``means`` supplies the mean signal(s) needed by ``mean(X)`` atoms (a
    single :class:`MeanSignal` or a mapping by species name); ``params`` gives
    values for parameter names appearing in atoms.
    """
    need = horizon(f)
    if tr.horizon < need:
        raise MonitorError(f"trajectory horizon {tr.horizon:g} shorter than "
                           f"formula horizon {need:g}")
    mean_map = _normalize_means(means)
    missing = sorted(mean_species(f) - set(mean_map))
    if missing:
        raise MonitorError("missing mean signal for species " +
                           ", ".join(f"'{n}'" for n in missing))
    ctx = _AtomContext(tr, mean_map, params or {})
    return _sat(f, ctx, tr.horizon)


def monitor(f: Formula, tr: Trajectory, means=None,
            params: dict[str, float] | None = None) -> bool:
    """True iff the trajectory satisfies the formula at time 0."""
    return sat_intervals(f, tr, means, params).contains(0.0)

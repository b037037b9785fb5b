"""Finite unions of intervals with explicit endpoint inclusivity.

Satisfaction signals of formulae over piecewise-constant trajectories are
exactly representable this way, including the degenerate single-point
intervals produced by jump atoms.  All operations keep the set normalized:
intervals sorted, pairwise disjoint and not mergeable with their neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

__all__ = ["Interval", "IntervalSet"]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, t: float) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.lo_closed:
            return False
        if t == self.hi and not self.hi_closed:
            return False
        return True

    def __str__(self) -> str:
        return (("[" if self.lo_closed else "(") + f"{self.lo:g}, {self.hi:g}"
                + ("]" if self.hi_closed else ")"))


def _merge(sorted_intervals: list[Interval]) -> tuple[Interval, ...]:
    out: list[Interval] = []
    for iv in sorted_intervals:
        if not out:
            out.append(iv)
            continue
        cur = out[-1]
        touches = iv.lo < cur.hi or (iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed))
        if touches:
            if iv.hi > cur.hi:
                out[-1] = Interval(cur.lo, iv.hi, cur.lo_closed, iv.hi_closed)
            elif iv.hi == cur.hi:
                out[-1] = Interval(cur.lo, cur.hi, cur.lo_closed,
                                   cur.hi_closed or iv.hi_closed)
            # else iv fully inside cur
        else:
            out.append(iv)
    return tuple(out)


class IntervalSet:
    """Normalized finite union of disjoint intervals."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Interval] = (), *, _normalized: bool = False):
        if _normalized:
            self.intervals = tuple(intervals)
            return
        kept = [iv for iv in intervals if not iv.is_empty()]
        kept.sort(key=lambda iv: (iv.lo, not iv.lo_closed))
        self.intervals = _merge(kept)

    # --- constructors ---

    @staticmethod
    def empty() -> "IntervalSet":
        return IntervalSet((), _normalized=True)

    @staticmethod
    def full(hi: float) -> "IntervalSet":
        """The whole domain [0, hi] (a single point set when hi == 0)."""
        return IntervalSet((Interval(0.0, hi, True, True),), _normalized=True)

    # --- predicates ---

    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, t: float) -> bool:
        return any(iv.contains(t) for iv in self.intervals)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __str__(self) -> str:
        return " u ".join(str(iv) for iv in self.intervals) if self.intervals else "{}"

    __repr__ = __str__

    # --- set algebra ---

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        a, b = self.intervals, other.intervals
        out: list[Interval] = []
        i = j = 0
        while i < len(a) and j < len(b):
            x, y = a[i], b[j]
            if x.lo > y.lo:
                lo, lo_c = x.lo, x.lo_closed
            elif y.lo > x.lo:
                lo, lo_c = y.lo, y.lo_closed
            else:
                lo, lo_c = x.lo, x.lo_closed and y.lo_closed
            if x.hi < y.hi:
                hi, hi_c = x.hi, x.hi_closed
            elif y.hi < x.hi:
                hi, hi_c = y.hi, y.hi_closed
            else:
                hi, hi_c = x.hi, x.hi_closed and y.hi_closed
            cand = Interval(lo, hi, lo_c, hi_c)
            if not cand.is_empty():
                out.append(cand)
            if x.hi < y.hi:
                i += 1
            elif y.hi < x.hi:
                j += 1
            else:
                i += 1
                j += 1
        return IntervalSet(out, _normalized=True)

    def complement(self, domain_hi: float) -> "IntervalSet":
        """Complement within the closed domain [0, domain_hi]."""
        clipped = self.intersect(IntervalSet.full(domain_hi))
        out: list[Interval] = []
        cursor, cursor_closed = 0.0, True
        for iv in clipped.intervals:
            gap = Interval(cursor, iv.lo, cursor_closed, not iv.lo_closed)
            if not gap.is_empty():
                out.append(gap)
            cursor, cursor_closed = iv.hi, not iv.hi_closed
        tail = Interval(cursor, domain_hi, cursor_closed, True)
        if not tail.is_empty():
            out.append(tail)
        return IntervalSet(out, _normalized=True)

    def back_shift(self, t1: float, t2: float) -> "IntervalSet":
        """Times t from which the window [t+t1, t+t2] meets this set.

        Each interval [c, d] contributes [c - t2, d - t1] with the same
        endpoint inclusivity; requires 0 <= t1 <= t2.
        """
        shifted = [Interval(iv.lo - t2, iv.hi - t1, iv.lo_closed, iv.hi_closed)
                   for iv in self.intervals]
        return IntervalSet(shifted)

    def clip(self, hi: float) -> "IntervalSet":
        return self.intersect(IntervalSet.full(hi))

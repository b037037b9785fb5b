from hypothesis import given, settings
from hypothesis import strategies as st

from smoothmc.mitl.intervals import Interval, IntervalSet

H = 10.0

dyadic = st.integers(min_value=0, max_value=80).map(lambda k: k / 8.0)


@st.composite
def intervals(draw):
    a = draw(dyadic)
    b = draw(dyadic)
    lo, hi = min(a, b), max(a, b)
    return Interval(lo, hi, draw(st.booleans()), draw(st.booleans()))


@st.composite
def interval_sets(draw):
    return IntervalSet(draw(st.lists(intervals(), max_size=6)))


def probes():
    # sample both stratum interiors and exact dyadic endpoints
    return [k / 16.0 for k in range(0, 161)]


def member(iset: IntervalSet, t: float) -> bool:
    return iset.contains(t)


class TestNormalization:
    def test_drops_empty(self):
        assert IntervalSet([Interval(2, 1, True, True)]).is_empty()
        assert IntervalSet([Interval(1, 1, True, False)]).is_empty()

    def test_point_interval_survives(self):
        s = IntervalSet([Interval(1, 1, True, True)])
        assert s.contains(1.0) and not s.contains(1.0001)

    def test_merges_touching_closed(self):
        s = IntervalSet([Interval(0, 1, True, True), Interval(1, 2, True, True)])
        assert len(s.intervals) == 1

    def test_keeps_open_open_gap(self):
        s = IntervalSet([Interval(0, 1, True, False), Interval(1, 2, False, True)])
        assert len(s.intervals) == 2
        assert not s.contains(1.0)

    def test_merges_half_open_chain(self):
        s = IntervalSet([Interval(0, 1, True, False), Interval(1, 2, True, False)])
        assert len(s.intervals) == 1
        assert s.contains(1.0)

    def test_point_fills_gap(self):
        s = IntervalSet([Interval(0, 1, True, False), Interval(1, 1, True, True),
                         Interval(1, 2, False, True)])
        assert len(s.intervals) == 1

    @given(interval_sets())
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, s):
        again = IntervalSet(s.intervals)
        assert again == s


class TestAlgebra:
    @given(interval_sets(), interval_sets())
    @settings(max_examples=150, deadline=None)
    def test_union_matches_membership(self, a, b):
        u = a.union(b)
        for t in probes():
            assert u.contains(t) == (a.contains(t) or b.contains(t))

    @given(interval_sets(), interval_sets())
    @settings(max_examples=150, deadline=None)
    def test_intersection_matches_membership(self, a, b):
        i = a.intersect(b)
        for t in probes():
            assert i.contains(t) == (a.contains(t) and b.contains(t))

    @given(interval_sets())
    @settings(max_examples=150, deadline=None)
    def test_complement_matches_membership(self, a):
        c = a.complement(H)
        for t in probes():
            assert c.contains(t) == (not a.contains(t))
        assert c.complement(H) == a.intersect(IntervalSet.full(H))

    @given(interval_sets())
    @settings(max_examples=100, deadline=None)
    def test_backshift_matches_window_semantics(self, a):
        t1, t2 = 0.5, 1.25
        shifted = a.back_shift(t1, t2)
        for t in probes():
            # membership iff some point of [t+t1, t+t2] lies in a
            window_hit = any(a.contains(t + t1 + k * (t2 - t1) / 16) for k in range(17))
            if window_hit:
                assert shifted.contains(t)
        # exact converse on interval endpoints
        for iv in a.intervals:
            lo_out = iv.lo - t2 - 0.0625
            if lo_out >= 0:
                assert not shifted.contains(lo_out) or a.intersect(
                    IntervalSet([Interval(lo_out + t1, lo_out + t2, True, True)])).intervals

    def test_backshift_point(self):
        s = IntervalSet([Interval(5, 5, True, True)]).back_shift(1, 2)
        assert s.intervals == (Interval(3, 4, True, True),)

    def test_full_and_empty(self):
        full = IntervalSet.full(H)
        assert full.contains(0.0) and full.contains(H)
        assert full.complement(H).is_empty()
        assert IntervalSet.empty().complement(H) == full

    def test_degenerate_domain(self):
        point = IntervalSet.full(0.0)
        assert point.contains(0.0)
        assert point.complement(0.0).is_empty()

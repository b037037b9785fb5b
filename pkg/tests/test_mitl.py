import numpy as np
import pytest

import smoothmc as smc
from smoothmc.errors import FormulaSyntaxError, MonitorError
from smoothmc.mitl import (Always, And, Atomic, Eventually, Not, TrueFormula, Until,
                           horizon, monitor, parse_formula, sat_intervals)
from smoothmc.mitl.intervals import Interval, IntervalSet
from smoothmc.simulate import MeanSignal

from conftest import EXTINCTION_PROPERTY, constant_trajectory, step_trajectory
from helpers import brute_force_sat, random_formula, random_trajectory


class TestParseFormula:
    def test_always_atom(self):
        f = parse_formula("G[0,1] (N < 4)")
        assert isinstance(f, Always)
        assert (f.t1, f.t2) == (0.0, 1.0)
        assert isinstance(f.operand, Atomic)
        assert f.operand.op == "<"

    def test_extinction_conjunction(self):
        f = parse_formula(EXTINCTION_PROPERTY)
        assert isinstance(f, And)
        assert isinstance(f.left, Eventually)
        assert isinstance(f.right, Always)
        assert (f.left.t1, f.left.t2) == (100.0, 120.0)
        assert f.left.operand.op == "="

    def test_burst_formula(self):
        f = parse_formula("F[16000,21000] ( delta(LacZ) > 0 & G[10,2000] delta(LacZ) <= 0 )")
        assert isinstance(f, Eventually)
        assert isinstance(f.operand, And)
        assert horizon(f) == 23000.0

    def test_bound_order_violation(self):
        with pytest.raises(FormulaSyntaxError, match="out of order"):
            parse_formula("G[1,0] tt")

    def test_negative_bound(self):
        with pytest.raises(FormulaSyntaxError, match="non-negative"):
            parse_formula("F[-1,2] tt")

    def test_until_infix(self):
        f = parse_formula("(N > 0) U[0.5,1] (N = 0)")
        assert isinstance(f, Until)
        assert (f.t1, f.t2) == (0.5, 1.0)

    def test_or_desugars(self):
        f = parse_formula("N < 1 | N > 3")
        assert isinstance(f, Not)
        assert isinstance(f.operand, And)

    def test_tt_constant(self):
        assert isinstance(parse_formula("tt"), TrueFormula)
        assert isinstance(parse_formula("!tt"), Not)

    def test_trailing_garbage(self):
        with pytest.raises(FormulaSyntaxError, match="trailing"):
            parse_formula("tt tt")

    def test_arithmetic_atoms(self):
        f = parse_formula("abs(A - mean(A)) < 0.1 * mean(A)")
        assert isinstance(f, Atomic)
        assert smc.mitl.mean_species(f) == {"A"}

    def test_comments_allowed(self):
        f = parse_formula("# extinction\nF[1,2] I = 0  # window\n")
        assert isinstance(f, Eventually)

    def test_validate_against_model(self, sir_model):
        smc.validate_formula(parse_formula("G[0,1] I > 0"), sir_model)
        with pytest.raises(FormulaSyntaxError, match="Z"):
            smc.validate_formula(parse_formula("G[0,1] Z > 0"), sir_model)


class TestHorizon:
    def test_atomic_zero(self):
        assert horizon(parse_formula("N < 4")) == 0.0

    def test_single_bound(self):
        assert horizon(parse_formula("G[0,1] (N < 4)")) == 1.0

    def test_extinction(self, extinction_formula):
        assert horizon(extinction_formula) == 120.0

    def test_nesting_adds(self):
        assert horizon(parse_formula("F[1,2] G[0,3] N < 1")) == 5.0
        assert horizon(parse_formula("(G[0,4] N>0) U[1,2] (N=0)")) == 6.0


class TestSatIntervals:
    def test_constant_below_threshold_full(self):
        tr = constant_trajectory({"N": 3}, 2.0)
        got = sat_intervals(parse_formula("N < 4"), tr)
        assert got == IntervalSet([Interval(0, 2, True, True)])

    def test_jump_violates_always(self):
        tr = step_trajectory(("N",), [0.5], [[3], [4]], 2.0)
        got = sat_intervals(parse_formula("G[0,1] (N < 4)"), tr)
        assert not got.contains(0.0)
        assert not monitor(parse_formula("G[0,1] (N < 4)"), tr)

    def test_until_witness(self):
        # A holds exactly on [0,1), B exactly on [0.8,1.2]
        tr = step_trajectory(("A", "B"), [0.8, 1.0, 1.2],
                             [[1, 0], [1, 1], [0, 1], [0, 0]], 3.0)
        f = parse_formula("(A > 0) U[0.5,1] (B > 0)")
        got = sat_intervals(f, tr)
        assert got.contains(0.0)
        assert monitor(f, tr)

    def test_delta_point_semantics(self):
        tr = step_trajectory(("N",), [1.0, 2.0], [[0], [2], [1]], 3.0)
        rising = sat_intervals(parse_formula("delta(N) > 0"), tr)
        assert rising.intervals == (Interval(1.0, 1.0, True, True),)
        nonrising = sat_intervals(parse_formula("delta(N) <= 0"), tr)
        assert not nonrising.contains(1.0)
        assert nonrising.contains(2.0)  # the drop
        assert nonrising.contains(0.0) and nonrising.contains(1.5)

    def test_horizon_guard(self):
        tr = constant_trajectory({"N": 1}, 1.0)
        with pytest.raises(MonitorError, match="horizon"):
            monitor(parse_formula("G[0,2] N > 0"), tr)

    def test_missing_mean_signal(self):
        tr = constant_trajectory({"N": 1}, 1.0)
        with pytest.raises(MonitorError, match="mean"):
            monitor(parse_formula("N < mean(N)"), tr)

    def test_mean_signal_interpolated(self):
        # mean rises linearly 0 -> 10 over [0,10]; constant N=5 crosses at t=5
        tr = constant_trajectory({"N": 5}, 10.0)
        sig = MeanSignal("N", np.array([0.0, 10.0]), np.array([0.0, 10.0]))
        got = sat_intervals(parse_formula("N > mean(N)"), tr, means=sig)
        assert got.contains(0.0) and got.contains(4.99)
        assert not got.contains(5.01) and not got.contains(10.0)

    def test_nested_variation_style_formula(self, sir_model):
        # band formula: eventually the count hugs its ensemble mean for a while
        import smoothmc as smc_pkg
        f = parse_formula("F[0,20] ( G[0,5] abs(I - mean(I)) < 0.1 * mean(I) + 5 )")
        assert horizon(f) == 25.0
        ens = smc_pkg.simulate_ensemble(sir_model, (0.12, 0.05), 25.0, 20, 77)
        sig = smc_pkg.mean_trajectory(ens, np.linspace(0, 25, 101), "I")
        results = [monitor(f, tr, means=sig) for tr in ens]
        assert any(results)  # trajectories near the mean do exist
        # complementary check through the negation
        for tr, res in zip(ens[:5], results[:5]):
            assert monitor(Not(f), tr, means=sig) == (not res)

    def test_params_in_atoms(self, sir_model):
        tr = constant_trajectory({"S": 9, "I": 1, "R": 0}, 1.0)
        f = parse_formula("S < 10 * k_r")
        assert monitor(f, tr, params={"k_r": 1.0})
        assert not monitor(f, tr, params={"k_r": 0.5})
        with pytest.raises(MonitorError, match="k_r"):
            monitor(f, tr)


class TestMonitorBasics:
    def test_tt_and_not_tt(self):
        tr = constant_trajectory({"N": 0}, 1.0)
        assert monitor(parse_formula("tt"), tr)
        assert not monitor(parse_formula("!tt"), tr)

    def test_projection_of_examples(self):
        tr = constant_trajectory({"N": 3}, 2.0)
        assert monitor(parse_formula("N < 4"), tr)


class TestDualityProperties:
    def test_always_equals_not_eventually_not(self):
        rng = np.random.default_rng(5150)
        for _ in range(60):
            tr = random_trajectory(rng)
            inner = random_formula(rng, tr.species, depth=1, budget=tr.horizon / 2)
            a, b = sorted(rng.integers(0, int(tr.horizon * 16), size=2) / 16.0)
            rest = tr.horizon - b - smc.horizon(inner)
            if rest < 0:
                continue
            g = Always(a, b, inner)
            dual = Not(Eventually(a, b, Not(inner)))
            assert monitor(g, tr) == monitor(dual, tr)

    def test_eventually_equals_true_until(self):
        rng = np.random.default_rng(6021)
        for _ in range(60):
            tr = random_trajectory(rng)
            inner = random_formula(rng, tr.species, depth=1, budget=tr.horizon / 2)
            a, b = sorted(rng.integers(0, int(tr.horizon * 16), size=2) / 16.0)
            if b + smc.horizon(inner) > tr.horizon:
                continue
            f = Eventually(a, b, inner)
            expanded = Until(a, b, TrueFormula(), inner)
            assert monitor(f, tr) == monitor(expanded, tr)
            assert sat_intervals(f, tr) == sat_intervals(expanded, tr)


class TestOracleEquivalence:
    def test_random_pairs_agree_with_bruteforce(self):
        rng = np.random.default_rng(90210)
        for _ in range(60):
            tr = random_trajectory(rng)
            f = random_formula(rng, tr.species, depth=3, budget=tr.horizon)
            assert monitor(f, tr) == brute_force_sat(f, tr, 0.0)

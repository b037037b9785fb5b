import numpy as np
import pytest

import smoothmc as smc
from smoothmc.errors import SimulationError


class TestSampleObservations:
    def test_tautology(self, sir_model):
        f = smc.parse_formula("tt")
        assert smc.sample_observations(sir_model, (0.12, 0.05), f, 7, 0) == (7, 7)

    def test_contradiction(self, sir_model):
        f = smc.parse_formula("!tt")
        assert smc.sample_observations(sir_model, (0.12, 0.05), f, 7, 0) == (0, 7)

    def test_poisson_matches_exact_cdf(self, poisson_model):
        # P(G[0,1] N<4 | rate 5) = 0.265026 (exact Poisson CDF at 3)
        f = smc.parse_formula("G[0,1] (N < 4)")
        m = 10_000
        s, t = smc.sample_observations(poisson_model, (5.0,), f, m, 31337)
        p_true = 0.2650259152973616
        assert t == m
        assert abs(s / t - p_true) < 3 * np.sqrt(p_true * (1 - p_true) / m)

    def test_reproducible(self, sir_model, extinction_formula):
        a = smc.sample_observations(sir_model, (0.12, 0.05), extinction_formula, 25, 5)
        b = smc.sample_observations(sir_model, (0.12, 0.05), extinction_formula, 25, 5)
        assert a == b

    def test_rejects_zero_runs(self, sir_model):
        with pytest.raises(SimulationError):
            smc.sample_observations(sir_model, (0.12, 0.05), smc.parse_formula("tt"), 0, 1)

    def test_mean_pilot_used_when_needed(self, sir_model):
        f = smc.parse_formula("G[0,5] S >= mean(S) - 50")
        s, t = smc.sample_observations(sir_model, (0.12, 0.05), f, 5, 9, pilot_runs=20)
        assert t == 5 and 0 <= s <= 5


class TestClopperPearson:
    def test_zero_successes_closed_form(self):
        low, high = smc.clopper_pearson(0, 100)
        assert low == 0.0
        assert high == pytest.approx(1 - 0.025 ** (1 / 100), abs=1e-12)
        assert high == pytest.approx(0.03621669264517641, abs=1e-9)

    def test_all_successes(self):
        low, high = smc.clopper_pearson(50, 50)
        assert high == 1.0
        assert low == pytest.approx(0.025 ** (1 / 50), abs=1e-12)

    def test_interval_brackets_estimate(self):
        for s, n in [(1, 10), (5, 10), (9, 10), (250, 1000)]:
            low, high = smc.clopper_pearson(s, n)
            assert 0.0 <= low <= s / n <= high <= 1.0

    def test_estimate_at(self, sir_model):
        est = smc.estimate_at(sir_model, (0.12, 0.05), smc.parse_formula("tt"), 10, 0)
        assert est == smc.BernoulliEstimate(10, 10, 1.0, est.ci_low, 1.0)

    def test_width_halves_when_n_quadruples(self):
        # CP width scales ~ 1/sqrt(n) at p = 0.5
        rng = np.random.default_rng(1234)
        ratios = []
        for _ in range(40):
            s1 = rng.binomial(400, 0.5)
            s2 = rng.binomial(1600, 0.5)
            w1 = np.subtract(*smc.clopper_pearson(s1, 400)[::-1])
            w2 = np.subtract(*smc.clopper_pearson(s2, 1600)[::-1])
            ratios.append(w2 / w1)
        assert abs(np.mean(ratios) - 0.5) < 0.05

    def test_coverage_at_least_90_percent(self):
        rng = np.random.default_rng(777)
        covered = 0
        n_exp = 200
        for _ in range(n_exp):
            p = rng.uniform(0.0, 1.0)
            n = int(rng.integers(5, 200))
            s = rng.binomial(n, p)
            low, high = smc.clopper_pearson(s, n)
            covered += low <= p <= high
        assert covered / n_exp >= 0.90

"""Statistical model checking at a fixed parameter point.

This is both the data-generation primitive for the smoothed pipeline (raw
success/trial counts feed the GP classifier) and the plain frequentist
baseline it is compared against (point estimate plus exact 95%
Clopper-Pearson interval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from .errors import SimulationError
from .mitl import Formula, horizon, mean_species, monitor
from .model import Model
from .simulate import DEFAULT_MAX_JUMPS, mean_signal, simulate, substream

__all__ = ["BernoulliEstimate", "sample_observations", "estimate_at",
           "clopper_pearson", "DEFAULT_PILOT_RUNS", "DEFAULT_MEAN_GRID"]

DEFAULT_PILOT_RUNS = 100
DEFAULT_MEAN_GRID = 201

_OBS_STREAM = 0
_PILOT_STREAM = 1


@dataclass(frozen=True)
class BernoulliEstimate:
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float


def _pilot_means(model: Model, params, f: Formula, hor: float, seed,
                 pilot_runs: int, mean_grid: int, max_jumps: int) -> dict:
    species = sorted(mean_species(f))
    if not species:
        return {}
    grid = np.linspace(0.0, hor, mean_grid)
    return {name: mean_signal(model, params, hor, grid, name, pilot_runs,
                              substream(seed, _PILOT_STREAM, i), max_jumps)
            for i, name in enumerate(species)}


def sample_observations(model: Model, params, f: Formula, m: int, seed, *,
                        means=None, pilot_runs: int = DEFAULT_PILOT_RUNS,
                        mean_grid: int = DEFAULT_MEAN_GRID,
                        max_jumps: int = DEFAULT_MAX_JUMPS) -> tuple[int, int]:
    """Count how many of m monitored trajectories satisfy f at time 0.

    The simulation horizon is the formula's own horizon.  If the formula
    references ``mean(X)`` and no signals are passed in, a pilot ensemble
    (stream 1) estimates them first; observation trajectories use streams
    (seed, 0, i) so results are reproducible and order independent.
    """
    if m < 1:
        raise SimulationError("need at least one observation per point")
    hor = horizon(f)
    params = tuple(float(v) for v in params)
    if means is None:
        means = _pilot_means(model, params, f, hor, seed, pilot_runs, mean_grid, max_jumps)
    param_env = dict(zip(model.param_names, params))
    successes = 0
    for i in range(m):
        tr = simulate(model, params, hor, substream(seed, _OBS_STREAM, i), max_jumps)
        if monitor(f, tr, means, param_env):
            successes += 1
    return successes, m


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval, clipped to [0, 1]."""
    alpha = 1.0 - level
    if successes == 0:
        low = 0.0
    else:
        low = float(beta.ppf(alpha / 2.0, successes, trials - successes + 1))
    if successes == trials:
        high = 1.0
    else:
        high = float(beta.ppf(1.0 - alpha / 2.0, successes + 1, trials - successes))
    return max(low, 0.0), min(high, 1.0)


def estimate_at(model: Model, params, f: Formula, n: int, seed, *,
                means=None, pilot_runs: int = DEFAULT_PILOT_RUNS,
                mean_grid: int = DEFAULT_MEAN_GRID,
                max_jumps: int = DEFAULT_MAX_JUMPS) -> BernoulliEstimate:
    """Monitor n runs and return the satisfaction estimate with 95% CP bounds."""
    successes, trials = sample_observations(model, params, f, n, seed, means=means,
                                            pilot_runs=pilot_runs, mean_grid=mean_grid,
                                            max_jumps=max_jumps)
    low, high = clopper_pearson(successes, trials)
    return BernoulliEstimate(successes, trials, successes / trials, low, high)

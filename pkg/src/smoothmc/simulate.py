"""Exact trajectory sampling for reaction-network CTMCs (Gillespie direct method).

Randomness is fully reproducible: every trajectory is driven by a Philox
counter-based generator seeded from ``(seed, stream index)``, so ensembles
give identical results regardless of execution order or parallelism.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expressions as ex
from .errors import RateEvaluationError, SimulationError
from .model import Model

__all__ = ["Trajectory", "MeanSignal", "substream", "simulate", "simulate_ensemble",
           "mean_trajectory", "mean_signal", "DEFAULT_MAX_JUMPS"]

DEFAULT_MAX_JUMPS = 10_000_000

_RNG_BLOCK = 1024


def substream(seed, *key: int) -> np.random.SeedSequence:
    """Derive an independent, order-stable random stream from (seed, key)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(entropy=seed.entropy,
                                      spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(entropy=int(seed), spawn_key=key)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant cadlag path on [0, horizon].

    ``states`` has one row more than ``times``; row 0 is the initial state and
    row j is the state in force on ``[times[j-1], times[j])`` (right
    continuous).
    """

    species: tuple[str, ...]
    times: np.ndarray    # shape (k,), strictly increasing, within (0, horizon]
    states: np.ndarray   # shape (k+1, n_species), integer counts
    horizon: float

    def index_at(self, t) -> np.ndarray | int:
        """Row index of the state in force at time t (cadlag lookup)."""
        return np.searchsorted(self.times, t, side="right")

    def state_at(self, t: float) -> np.ndarray:
        return self.states[self.index_at(t)]

    def values_at(self, grid, species_index: int) -> np.ndarray:
        return self.states[np.searchsorted(self.times, grid, side="right"), species_index]

    def to_csv_text(self) -> str:
        """Debug dump: header ``t,<species...>``, initial row plus one row per jump."""
        buf = io.StringIO()
        buf.write("t," + ",".join(self.species) + "\n")
        times = np.concatenate([[0.0], self.times])
        for t, row in zip(times, self.states):
            buf.write(format(t, ".17g") + "," + ",".join(str(int(v)) for v in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class MeanSignal:
    """Ensemble-mean count of one species on a time grid, linearly interpolated."""

    species: str
    grid: np.ndarray
    means: np.ndarray

    def value_at(self, t):
        return np.interp(t, self.grid, self.means)


@lru_cache(maxsize=64)
def _compiled(model: Model):
    rate_fns = tuple(ex.compile_rate_fn(rx.rate, model.species_index, model.param_index)
                     for rx in model.reactions)
    sparse = tuple(tuple((i, d) for i, d in enumerate(rx.net_change) if d != 0)
                   for rx in model.reactions)
    net = np.array([rx.net_change for rx in model.reactions], dtype=np.int64) \
        if model.reactions else np.zeros((0, len(model.species)), dtype=np.int64)
    return rate_fns, sparse, net


def simulate(model: Model, params, horizon: float, seed,
             max_jumps: int = DEFAULT_MAX_JUMPS) -> Trajectory:
    """Draw one exact trajectory on [0, horizon] at the given parameter point.

    Holding times are exponential in the total rate and the firing channel is
    chosen proportionally to its rate.  Deterministic given
    (model, params, horizon, seed).
    """
    if horizon < 0:
        raise SimulationError("horizon must be non-negative")
    params = [float(v) for v in params]
    if len(params) != len(model.parameters):
        raise SimulationError(f"expected {len(model.parameters)} parameters, got {len(params)}")
    rate_fns, sparse, net = _compiled(model)
    n_reactions = len(rate_fns)

    rng = _generator(seed)
    exp_buf = np.empty(0)
    uni_buf = np.empty(0)
    buf_pos = _RNG_BLOCK  # force refill on first use

    x = list(model.initial_state)
    t = 0.0
    jump_times: list[float] = []
    jump_reactions: list[int] = []
    rates = [0.0] * n_reactions

    while True:
        total = 0.0
        for r in range(n_reactions):
            try:
                v = rate_fns[r](x, params)
            except ZeroDivisionError:
                raise RateEvaluationError(
                    f"division by zero in rate of reaction {r} at state {tuple(x)}") from None
            if v != v or v < 0 or v == float("inf"):  # NaN, negative or infinite
                raise RateEvaluationError(
                    f"rate of reaction {r} evaluated to {v!r} at state {tuple(x)}")
            rates[r] = v
            total += v
        if total <= 0.0:
            break

        if buf_pos >= _RNG_BLOCK:
            exp_buf = rng.standard_exponential(_RNG_BLOCK)
            uni_buf = rng.random(_RNG_BLOCK)
            buf_pos = 0
        dt = exp_buf[buf_pos] / total
        u = uni_buf[buf_pos] * total
        buf_pos += 1

        t_next = t + dt
        if t_next > horizon:
            break

        acc = 0.0
        choice = n_reactions - 1
        for r in range(n_reactions):
            acc += rates[r]
            if u < acc:
                choice = r
                break
        for i, d in sparse[choice]:
            x[i] += d
            if x[i] < 0:
                raise SimulationError(
                    f"reaction {choice} drove species '{model.species[i]}' negative at t={t_next:g}")
        t = t_next
        jump_times.append(t)
        jump_reactions.append(choice)
        if len(jump_times) > max_jumps:
            raise SimulationError(f"trajectory exceeded max_jumps={max_jumps}")

    k = len(jump_times)
    init = np.array(model.initial_state, dtype=np.int64)
    if k == 0:
        states = init[None, :].copy()
    else:
        deltas = net[np.array(jump_reactions, dtype=np.intp)]
        states = np.vstack([init, init + np.cumsum(deltas, axis=0)])
    return Trajectory(model.species, np.array(jump_times, dtype=float), states, float(horizon))


def simulate_ensemble(model: Model, params, horizon: float, n: int, seed,
                      max_jumps: int = DEFAULT_MAX_JUMPS) -> list[Trajectory]:
    """n independent trajectories; member i uses the derived stream (seed, i)."""
    if n < 1:
        raise SimulationError("ensemble size must be >= 1")
    return [simulate(model, params, horizon, substream(seed, i), max_jumps) for i in range(n)]


def mean_trajectory(ensemble: list[Trajectory], grid, species: str) -> MeanSignal:
    """Pointwise sample mean of one species over an ensemble, by cadlag lookup."""
    if not ensemble:
        raise SimulationError("empty ensemble")
    names = ensemble[0].species
    if species not in names:
        raise SimulationError(f"unknown species '{species}'")
    idx = names.index(species)
    grid = np.asarray(grid, dtype=float)
    acc = np.zeros(len(grid))
    for tr in ensemble:
        acc += tr.values_at(grid, idx)
    return MeanSignal(species, grid, acc / len(ensemble))


def mean_signal(model: Model, params, horizon: float, grid, species: str, n: int, seed,
                max_jumps: int = DEFAULT_MAX_JUMPS) -> MeanSignal:
    """Streaming equivalent of simulate_ensemble + mean_trajectory.

    Trajectories are discarded as soon as they are averaged in, which keeps
    long-horizon pilot runs at constant memory.
    """
    if n < 1:
        raise SimulationError("pilot ensemble size must be >= 1")
    idx = model.species_index[species]
    grid = np.asarray(grid, dtype=float)
    acc = np.zeros(len(grid))
    for i in range(n):
        tr = simulate(model, params, horizon, substream(seed, i), max_jumps)
        acc += tr.values_at(grid, idx)
    return MeanSignal(species, grid, acc / n)

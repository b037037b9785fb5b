"""End-to-end smoothed model checking: designs, orchestration and CSV output.

A run draws a handful of monitored trajectories at each training point,
feeds the success counts to the EP classifier and predicts the satisfaction
probability (with 95% bounds) over a separate prediction grid.  Varied
parameters are affinely rescaled to [0, 1] per dimension before kernel
evaluation unless raw-units mode is requested; lengthscales are interpreted
in the corresponding units.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .ep import (EpState, HyperBounds, KernelConfig, Prediction, TrainingSet, ep_fit,
                 optimize_hyperparams, predict_probability)
from .errors import InferenceError, ModelValidationError
from .mitl import Formula, horizon, validate_formula
from .model import Model
from .simulate import DEFAULT_MAX_JUMPS, substream
from .smc import (DEFAULT_MEAN_GRID, DEFAULT_PILOT_RUNS, BernoulliEstimate, estimate_at,
                  sample_observations)

__all__ = ["VariedParam", "ParameterDomain", "GridDesign", "LhsDesign", "FixedKernel",
           "OptimizeKernel", "RunTimings", "ExperimentResult", "regular_grid",
           "latin_hypercube", "run_smoothed_mc", "poisson_sat_exact", "write_csv",
           "deep_smc_probes"]


@dataclass(frozen=True)
class VariedParam:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)) \
                or not self.low < self.high:
            raise ModelValidationError(
                [f"parameter '{self.name}': range [{self.low!r}, {self.high!r}] is not "
                 "a non-degenerate interval"])


@dataclass(frozen=True)
class ParameterDomain:
    """Varied parameters with their ranges, plus fixed overrides."""

    varied: tuple[VariedParam, ...]
    fixed: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        names = [v.name for v in self.varied]
        if len(set(names)) != len(names):
            raise ModelValidationError(["varied parameter names must be distinct"])
        if not names:
            raise ModelValidationError(["at least one varied parameter is required"])
        overlap = set(names) & set(self.fixed)
        if overlap:
            raise ModelValidationError(
                [f"parameter '{n}' both varied and fixed" for n in sorted(overlap)])

    @property
    def dim(self) -> int:
        return len(self.varied)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.varied)

    def validate_against(self, model: Model) -> None:
        declared = set(model.param_names)
        missing = [v.name for v in self.varied if v.name not in declared]
        missing += [n for n in self.fixed if n not in declared]
        if missing:
            raise ModelValidationError(
                [f"parameter '{n}' is not declared by the model" for n in missing])

    def rescale(self, points: np.ndarray) -> np.ndarray:
        lows = np.array([v.low for v in self.varied])
        highs = np.array([v.high for v in self.varied])
        return (np.asarray(points, dtype=float) - lows) / (highs - lows)


@dataclass(frozen=True)
class GridDesign:
    counts: tuple[int, ...]


@dataclass(frozen=True)
class LhsDesign:
    n: int


@dataclass(frozen=True)
class FixedKernel:
    config: KernelConfig


@dataclass(frozen=True)
class OptimizeKernel:
    init: KernelConfig | None = None
    bounds: HyperBounds | None = None


@dataclass
class RunTimings:
    simulation_s: float = 0.0
    hyperopt_s: float = 0.0
    prediction_s: float = 0.0


@dataclass
class ExperimentResult:
    param_names: tuple[str, ...]
    train_points: np.ndarray        # raw units, (k, d)
    successes: np.ndarray
    trials: np.ndarray
    predict_points: np.ndarray      # raw units, (n, d)
    predictions: list[Prediction]   # one per prediction point, same order
    ep_state: EpState
    kernel_used: KernelConfig
    rescaled: bool
    rescale_ranges: tuple[tuple[float, float], ...]
    timings: RunTimings
    seed: int
    metadata: dict = field(default_factory=dict)


def regular_grid(domain: ParameterDomain, counts: Sequence[int]) -> np.ndarray:
    """Cartesian product of evenly spaced values including both endpoints.

    Row-major order with the first parameter varying slowest.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != domain.dim:
        raise ModelValidationError([f"expected {domain.dim} grid counts, got {len(counts)}"])
    if any(c < 2 for c in counts):
        raise ModelValidationError(["grid counts must be at least 2 per dimension"])
    axes = [np.linspace(v.low, v.high, c) for v, c in zip(domain.varied, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def latin_hypercube(domain: ParameterDomain, n: int, seed) -> np.ndarray:
    """n points, one per equal-width stratum in every dimension (midpoints).

    Stratum order is a seeded random permutation per dimension, so layouts
    are reproducible.
    """
    if n < 1:
        raise ModelValidationError(["Latin hypercube needs n >= 1"])
    rng = np.random.Generator(np.random.Philox(substream(seed)))
    cols = []
    for v in domain.varied:
        perm = rng.permutation(n)
        centers = (perm + 0.5) / n
        cols.append(v.low + centers * (v.high - v.low))
    return np.stack(cols, axis=-1)


def build_design(domain: ParameterDomain, design, seed) -> np.ndarray:
    if isinstance(design, GridDesign):
        return regular_grid(domain, design.counts)
    if isinstance(design, LhsDesign):
        return latin_hypercube(domain, design.n, seed)
    raise ModelValidationError([f"unknown design {design!r}"])


def poisson_sat_exact(rate: float) -> float:
    """P(at most 3 arrivals within one time unit) for a rate-`rate` Poisson process.

    Closed form sum_{k<=3} e^-mu mu^k / k! with mu = rate; this is the exact
    satisfaction probability of "always below 4 during [0,1]" for a pure
    birth process started at 0.
    """
    mu = float(rate)
    return math.exp(-mu) * (1.0 + mu + mu * mu / 2.0 + mu ** 3 / 6.0)


# ---------------------------------------------------------------------------
# orchestration

def _point_task(args) -> tuple[int, int, int]:
    (model, formula, params, m, seed, j, pilot_runs, mean_grid, max_jumps) = args
    s, t = sample_observations(model, params, formula, m, substream(seed, j),
                               pilot_runs=pilot_runs, mean_grid=mean_grid,
                               max_jumps=max_jumps)
    return j, s, t


def _collect_observations(model, formula, point_params, m, seed, threads,
                          pilot_runs, mean_grid, max_jumps,
                          progress: Callable[[int, int], None] | None):
    k = len(point_params)
    successes = np.zeros(k, dtype=np.int64)
    trials = np.zeros(k, dtype=np.int64)
    tasks = [(model, formula, params, m, seed, j, pilot_runs, mean_grid, max_jumps)
             for j, params in enumerate(point_params)]
    done = 0
    if threads > 1 and k > 1:
        with ProcessPoolExecutor(max_workers=min(threads, k)) as pool:
            for j, s, t in pool.map(_point_task, tasks, chunksize=max(1, k // (8 * threads))):
                successes[j], trials[j] = s, t
                done += 1
                if progress is not None:
                    progress(done, k)
    else:
        for task in tasks:
            j, s, t = _point_task(task)
            successes[j], trials[j] = s, t
            done += 1
            if progress is not None:
                progress(done, k)
    return successes, trials


def run_smoothed_mc(model: Model, formula: Formula, domain: ParameterDomain,
                    design, runs_per_point: int, predict_counts: Sequence[int],
                    kernel_mode, seed: int, *, rescale_inputs: bool = True,
                    pilot_runs: int = DEFAULT_PILOT_RUNS,
                    mean_grid: int = DEFAULT_MEAN_GRID,
                    threads: int = 1, max_jumps: int = DEFAULT_MAX_JUMPS,
                    max_horizon: float | None = None,
                    progress: Callable[[int, int], None] | None = None) -> ExperimentResult:
    """Full pipeline: sample observations, fit the EP classifier, predict.

    Deterministic given ``seed`` regardless of ``threads``: the stream for
    training point j is derived from (seed, j).
    """
    validate_formula(formula, model)
    domain.validate_against(model)
    hor = horizon(formula)
    if max_horizon is not None and hor > max_horizon:
        raise InferenceError(f"formula horizon {hor:g} exceeds the configured "
                             f"simulation budget {max_horizon:g}")

    train_points = build_design(domain, design, substream(seed, 10**6))
    point_params = [model.params_with({**domain.fixed,
                                       **dict(zip(domain.names, row))})
                    for row in train_points]

    timings = RunTimings()
    t0 = time.perf_counter()
    successes, trials = _collect_observations(
        model, formula, point_params, runs_per_point, seed, threads,
        pilot_runs, mean_grid, max_jumps, progress)
    timings.simulation_s = time.perf_counter() - t0

    if rescale_inputs:
        fit_points = domain.rescale(train_points)
    else:
        fit_points = train_points
    data = TrainingSet(fit_points, successes, trials)

    hyper_meta = {}
    if isinstance(kernel_mode, FixedKernel):
        kernel = kernel_mode.config
        if kernel.dim != domain.dim:
            raise InferenceError(f"kernel has {kernel.dim} lengthscale(s) for a "
                                 f"{domain.dim}-parameter domain")
    elif isinstance(kernel_mode, OptimizeKernel):
        init = kernel_mode.init or KernelConfig(1.0, (0.2,) * domain.dim)
        t0 = time.perf_counter()
        kernel = optimize_hyperparams(data, init, kernel_mode.bounds)
        timings.hyperopt_s = time.perf_counter() - t0
        hyper_meta["hyperopt_init"] = (init.amplitude, init.lengthscales)
    else:
        raise InferenceError(f"unknown kernel mode {kernel_mode!r}")

    t0 = time.perf_counter()
    state = ep_fit(data, kernel)
    predict_points = regular_grid(domain, predict_counts)
    query = domain.rescale(predict_points) if rescale_inputs else predict_points
    predictions = predict_probability(state, query)
    # predictions carry the raw parameter coordinates, not kernel-space ones
    predictions = [replace(p, point=tuple(float(c) for c in raw))
                   for p, raw in zip(predictions, predict_points)]
    timings.prediction_s = time.perf_counter() - t0

    return ExperimentResult(
        param_names=domain.names,
        train_points=train_points,
        successes=successes,
        trials=trials,
        predict_points=predict_points,
        predictions=predictions,
        ep_state=state,
        kernel_used=kernel,
        rescaled=rescale_inputs,
        rescale_ranges=tuple((v.low, v.high) for v in domain.varied),
        timings=timings,
        seed=seed,
        metadata={"ep_sweeps": state.sweeps, "ep_converged": state.converged,
                  "ep_max_delta": state.max_delta, "runs_per_point": runs_per_point,
                  "pilot_runs": pilot_runs, "threads": threads,
                  "design": (f"grid:{','.join(str(c) for c in design.counts)}"
                             if isinstance(design, GridDesign) else f"lhs:{design.n}"),
                  **hyper_meta},
    )


def deep_smc_probes(model: Model, formula: Formula, domain: ParameterDomain,
                    probe_counts: Sequence[int], runs: int, seed: int, *,
                    pilot_runs: int = DEFAULT_PILOT_RUNS,
                    mean_grid: int = DEFAULT_MEAN_GRID,
                    max_jumps: int = DEFAULT_MAX_JUMPS,
                    progress: Callable[[int, int], None] | None = None,
                    ) -> tuple[np.ndarray, list[BernoulliEstimate]]:
    """Plain SMC estimates on an evenly spaced probe grid (the naive baseline)."""
    points = regular_grid(domain, probe_counts)
    estimates = []
    for j, row in enumerate(points):
        params = model.params_with({**domain.fixed, **dict(zip(domain.names, row))})
        estimates.append(estimate_at(model, params, formula, runs, substream(seed, j),
                                     pilot_runs=pilot_runs, mean_grid=mean_grid,
                                     max_jumps=max_jumps))
        if progress is not None:
            progress(j + 1, len(points))
    return points, estimates


# ---------------------------------------------------------------------------
# CSV emission

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_prediction_rows(param_names, points, rows, path) -> None:
    """rows: iterable of (prob_mean, ci_low, ci_high) matching points."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(param_names) + ",prob_mean,ci_low,ci_high\n")
        for point, (pm, lo, hi) in zip(points, rows):
            cells = [_fmt(c) for c in point] + [_fmt(pm), _fmt(lo), _fmt(hi)]
            fh.write(",".join(cells) + "\n")


def write_training_rows(param_names, points, successes, trials, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(param_names) + ",successes,trials,empirical\n")
        for point, s, t in zip(points, successes, trials):
            cells = [_fmt(c) for c in point] + [str(int(s)), str(int(t)), _fmt(s / t)]
            fh.write(",".join(cells) + "\n")


def write_metadata(path, entries: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def write_csv(result: ExperimentResult, predictions_path, training_path) -> None:
    """Write the two canonical CSVs plus a ``<predictions>.meta`` sidecar.

    CSV contents are byte-deterministic for a fixed configuration and seed;
    the sidecar records wall-clock timings and is not.
    """
    write_prediction_rows(result.param_names, result.predict_points,
                          [(p.prob_mean, p.ci_low, p.ci_high) for p in result.predictions],
                          predictions_path)
    write_training_rows(result.param_names, result.train_points, result.successes,
                        result.trials, training_path)
    ranges = ";".join(f"{name}:{_fmt(lo)}:{_fmt(hi)}" for name, (lo, hi)
                      in zip(result.param_names, result.rescale_ranges))
    write_metadata(str(predictions_path) + ".meta", {
        "seed": result.seed,
        "kernel_amplitude": _fmt(result.kernel_used.amplitude),
        "kernel_lengthscales": ";".join(_fmt(l) for l in result.kernel_used.lengthscales),
        "lengthscale_units": "rescaled" if result.rescaled else "raw",
        "rescale_ranges": ranges,
        "runs_per_point": result.metadata.get("runs_per_point", ""),
        "pilot_runs": result.metadata.get("pilot_runs", ""),
        "design": result.metadata.get("design", ""),
        "ep_sweeps": result.ep_state.sweeps,
        "ep_converged": result.ep_state.converged,
        "timing_simulation_s": f"{result.timings.simulation_s:.6f}",
        "timing_hyperopt_s": f"{result.timings.hyperopt_s:.6f}",
        "timing_prediction_s": f"{result.timings.prediction_s:.6f}",
    })

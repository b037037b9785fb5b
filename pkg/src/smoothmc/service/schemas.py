"""Pydantic request/response models for the HTTP service.

The CLI builds these same objects and calls the handlers in-process, so the
wire format and the command line stay in lockstep.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..ep import HyperBounds, KernelConfig
from ..experiment import (ExperimentResult, FixedKernel, GridDesign, LhsDesign,
                          OptimizeKernel, ParameterDomain, VariedParam)


class ModelRequest(BaseModel):
    text: str


class ModelInfo(BaseModel):
    species: list[str]
    parameters: dict[str, float]
    n_reactions: int
    initial_state: list[int]


class FormulaRequest(BaseModel):
    text: str


class FormulaInfo(BaseModel):
    pretty: str
    horizon: float
    mean_species: list[str]


class SmcRequest(BaseModel):
    model_text: str
    property_text: str
    param_values: dict[str, float] = Field(default_factory=dict)
    runs: int = Field(ge=1)
    seed: int = 0
    pilot_runs: int = Field(default=100, ge=1)


class SmcResponse(BaseModel):
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float


class VariedParamSpec(BaseModel):
    name: str
    low: float
    high: float


class TrainSpec(BaseModel):
    kind: Literal["grid", "lhs"]
    counts: Optional[list[int]] = None  # grid: points per dimension
    n: Optional[int] = None             # lhs: total points


class KernelSpec(BaseModel):
    mode: Literal["fixed", "optimize"]
    amplitude: Optional[float] = None
    lengthscales: Optional[list[float]] = None
    amplitude_bounds: Optional[tuple[float, float]] = None
    lengthscale_bounds: Optional[list[tuple[float, float]]] = None


class EstimateRequest(BaseModel):
    model_text: str
    property_text: str
    varied: list[VariedParamSpec]
    fixed: dict[str, float] = Field(default_factory=dict)
    train: TrainSpec
    runs_per_point: int = Field(ge=1)
    predict_counts: list[int]
    kernel: KernelSpec
    seed: int = 0
    rescale_inputs: bool = True
    pilot_runs: int = Field(default=100, ge=1)
    threads: int = Field(default=1, ge=1)
    max_horizon: Optional[float] = None
    baseline_counts: Optional[list[int]] = None
    baseline_runs: Optional[int] = None


class PredictionRow(BaseModel):
    point: list[float]
    prob_mean: float
    ci_low: float
    ci_high: float
    latent_mean: float
    latent_var: float


class TrainingRow(BaseModel):
    point: list[float]
    successes: int
    trials: int
    empirical: float


class BaselineRow(BaseModel):
    point: list[float]
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float


class Timings(BaseModel):
    simulation_s: float
    hyperopt_s: float
    prediction_s: float


class EstimateResponse(BaseModel):
    param_names: list[str]
    predictions: list[PredictionRow]
    training: list[TrainingRow]
    baseline: Optional[list[BaselineRow]] = None
    kernel_amplitude: float
    kernel_lengthscales: list[float]
    rescaled: bool
    rescale_ranges: list[tuple[float, float]]
    ep_sweeps: int
    ep_converged: bool
    seed: int
    timings: Timings


def domain_from_request(req: EstimateRequest) -> ParameterDomain:
    return ParameterDomain(tuple(VariedParam(v.name, v.low, v.high) for v in req.varied),
                           dict(req.fixed))


def design_from_request(req: EstimateRequest):
    if req.train.kind == "grid":
        if not req.train.counts:
            raise ValueError("grid design needs per-dimension counts")
        return GridDesign(tuple(req.train.counts))
    if req.train.n is None:
        raise ValueError("lhs design needs a point count n")
    return LhsDesign(req.train.n)


def kernel_mode_from_request(req: EstimateRequest, dim: int):
    spec = req.kernel
    if spec.mode == "fixed":
        if spec.amplitude is None or not spec.lengthscales:
            raise ValueError("fixed kernel needs amplitude and lengthscales")
        return FixedKernel(KernelConfig(spec.amplitude, tuple(spec.lengthscales)))
    init = None
    if spec.amplitude is not None and spec.lengthscales:
        init = KernelConfig(spec.amplitude, tuple(spec.lengthscales))
    bounds = None
    if spec.amplitude_bounds is not None or spec.lengthscale_bounds is not None:
        amp = spec.amplitude_bounds or (1e-2, 1e2)
        ls = spec.lengthscale_bounds or [(1e-2, 1e1)] * dim
        bounds = HyperBounds(tuple(amp), tuple(tuple(b) for b in ls))
    return OptimizeKernel(init, bounds)


def response_from_result(result: ExperimentResult,
                         baseline: Optional[list[BaselineRow]] = None) -> EstimateResponse:
    return EstimateResponse(
        param_names=list(result.param_names),
        predictions=[PredictionRow(point=list(p.point), prob_mean=p.prob_mean,
                                   ci_low=p.ci_low, ci_high=p.ci_high,
                                   latent_mean=p.latent_mean, latent_var=p.latent_var)
                     for p in result.predictions],
        training=[TrainingRow(point=[float(c) for c in pt], successes=int(s),
                              trials=int(t), empirical=float(s / t))
                  for pt, s, t in zip(result.train_points, result.successes, result.trials)],
        baseline=baseline,
        kernel_amplitude=result.kernel_used.amplitude,
        kernel_lengthscales=list(result.kernel_used.lengthscales),
        rescaled=result.rescaled,
        rescale_ranges=[(lo, hi) for lo, hi in result.rescale_ranges],
        ep_sweeps=result.ep_state.sweeps,
        ep_converged=result.ep_state.converged,
        seed=result.seed,
        timings=Timings(simulation_s=result.timings.simulation_s,
                        hyperopt_s=result.timings.hyperopt_s,
                        prediction_s=result.timings.prediction_s),
    )

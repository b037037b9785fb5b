"""Service handlers: pure functions from request models to response models.

The FastAPI app and the CLI both call these; only error mapping differs
(HTTP status codes vs exit codes).
"""

from __future__ import annotations

from typing import Callable, Optional

from .. import mitl
from ..experiment import deep_smc_probes, run_smoothed_mc
from ..model import parse_model
from ..smc import estimate_at
from . import schemas as sc


def validate_model_handler(req: sc.ModelRequest) -> sc.ModelInfo:
    model = parse_model(req.text)
    return sc.ModelInfo(species=list(model.species),
                        parameters={n: v for n, v in model.parameters},
                        n_reactions=len(model.reactions),
                        initial_state=list(model.initial_state))


def parse_formula_handler(req: sc.FormulaRequest) -> sc.FormulaInfo:
    formula = mitl.parse_formula(req.text)
    return sc.FormulaInfo(pretty=mitl.pretty_formula(formula),
                          horizon=mitl.horizon(formula),
                          mean_species=sorted(mitl.mean_species(formula)))


def smc_handler(req: sc.SmcRequest) -> sc.SmcResponse:
    model = parse_model(req.model_text)
    formula = mitl.parse_formula(req.property_text)
    mitl.validate_formula(formula, model)
    params = model.params_with(req.param_values)
    est = estimate_at(model, params, formula, req.runs, req.seed,
                      pilot_runs=req.pilot_runs)
    return sc.SmcResponse(successes=est.successes, trials=est.trials, p_hat=est.p_hat,
                          ci_low=est.ci_low, ci_high=est.ci_high)


def estimate_handler(req: sc.EstimateRequest,
                     progress: Optional[Callable[[int, int], None]] = None
                     ) -> sc.EstimateResponse:
    model = parse_model(req.model_text)
    formula = mitl.parse_formula(req.property_text)
    domain = sc.domain_from_request(req)
    design = sc.design_from_request(req)
    kernel_mode = sc.kernel_mode_from_request(req, domain.dim)

    result = run_smoothed_mc(model, formula, domain, design, req.runs_per_point,
                             req.predict_counts, kernel_mode, req.seed,
                             rescale_inputs=req.rescale_inputs,
                             pilot_runs=req.pilot_runs, threads=req.threads,
                             max_horizon=req.max_horizon, progress=progress)

    baseline_rows = None
    if req.baseline_counts and req.baseline_runs:
        points, estimates = deep_smc_probes(model, formula, domain, req.baseline_counts,
                                            req.baseline_runs, req.seed + 1,
                                            pilot_runs=req.pilot_runs, progress=progress)
        baseline_rows = [sc.BaselineRow(point=[float(c) for c in pt], successes=e.successes,
                                        trials=e.trials, p_hat=e.p_hat,
                                        ci_low=e.ci_low, ci_high=e.ci_high)
                         for pt, e in zip(points, estimates)]

    return sc.response_from_result(result, baseline_rows)

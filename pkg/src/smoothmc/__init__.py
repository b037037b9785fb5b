"""smoothmc: satisfaction-function estimation for uncertain CTMCs.

Reaction-network models are simulated exactly (SSA), trajectories are
monitored against time-bounded MiTL properties, and a Gaussian-process
probit classifier fitted by expectation propagation turns scattered
success/trial counts into a prediction of the satisfaction probability,
with 95% bounds, over a whole parameter range.
"""

from .ep import (EpState, HyperBounds, KernelConfig, Prediction, TrainingSet, ep_fit,
                 optimize_hyperparams, predict_latent, predict_probability, probit,
                 probit_inv, quadrature_posterior_oracle)
from .errors import (FormulaSyntaxError, InferenceError, ModelSyntaxError,
                     ModelValidationError, MonitorError, RateEvaluationError,
                     SimulationError, SmoothMcError)
from .experiment import (ExperimentResult, FixedKernel, GridDesign, LhsDesign,
                         OptimizeKernel, ParameterDomain, VariedParam, deep_smc_probes,
                         latin_hypercube, poisson_sat_exact, regular_grid,
                         run_smoothed_mc, write_csv)
from .kernel import GramMatrix, cross_gram, gram, kernel_eval
from .mitl import (Formula, IntervalSet, horizon, monitor, parse_formula,
                   pretty_formula, sat_intervals, validate_formula)
from .model import Model, Reaction, eval_rate, parse_model, pretty_model, validate_model
from .simulate import (MeanSignal, Trajectory, mean_signal, mean_trajectory, simulate,
                       simulate_ensemble, substream)
from .smc import BernoulliEstimate, clopper_pearson, estimate_at, sample_observations

__version__ = "0.1.0"

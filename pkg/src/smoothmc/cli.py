"""Command-line front end.

``smoothmc estimate`` runs the full smoothed pipeline and writes
``<prefix>_predictions.csv`` (+ ``.meta`` sidecar), ``<prefix>_training.csv``
and optionally ``<prefix>_baseline.csv``.  ``smoothmc smc`` runs the plain
statistical-model-checking baseline at one parameter point.  Both build the
same request models the HTTP service consumes and execute them in-process by
default; pass ``--server URL`` to send them to a running ``smoothmc serve``
instance instead.

Exit codes: 0 success, 2 argument/model/property errors, 3 simulation
failures, 4 inference failures, 5 I/O failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .errors import (FormulaSyntaxError, InferenceError, ModelSyntaxError,
                     ModelValidationError, MonitorError, RateEvaluationError,
                     SimulationError)
from .experiment import write_metadata, write_prediction_rows, write_training_rows
from .service import schemas as sc
from .service.handlers import estimate_handler, smc_handler

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SIMULATION = 3
EXIT_INFERENCE = 4
EXIT_IO = 5

_PARSE_ERRORS = (ModelSyntaxError, FormulaSyntaxError, ModelValidationError,
                 MonitorError, ValueError)
_SIM_ERRORS = (SimulationError, RateEvaluationError)


def _param_triple(text: str) -> sc.VariedParamSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected name:low:high, got {text!r}")
    name, low_s, high_s = parts
    try:
        low, high = float(low_s), float(high_s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric range in {text!r}") from None
    if not low < high:
        raise argparse.ArgumentTypeError(f"malformed range in {text!r}: need low < high")
    return sc.VariedParamSpec(name=name, low=low, high=high)


def _assignment(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}") from None


def _counts(text: str) -> list[int]:
    try:
        return [int(c) for c in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated counts, got {text!r}") from None


def _train_spec(text: str) -> sc.TrainSpec:
    kind, sep, rest = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected grid:<counts> or lhs:<n>")
    if kind == "grid":
        return sc.TrainSpec(kind="grid", counts=_counts(rest))
    if kind == "lhs":
        try:
            return sc.TrainSpec(kind="lhs", n=int(rest))
        except ValueError:
            raise argparse.ArgumentTypeError(f"lhs needs an integer count, got {rest!r}") from None
    raise argparse.ArgumentTypeError(f"unknown training design {kind!r}")


def _kernel_spec(text: str) -> sc.KernelSpec:
    if text == "optimize":
        return sc.KernelSpec(mode="optimize")
    parts = text.split(":")
    if parts[0] == "fixed" and len(parts) >= 3:
        try:
            return sc.KernelSpec(mode="fixed", amplitude=float(parts[1]),
                                 lengthscales=[float(p) for p in parts[2:]])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(
        f"expected 'optimize' or fixed:<amplitude>:<lengthscale>[:<lengthscale>...], got {text!r}")


def _baseline_spec(text: str) -> tuple[list[int], int]:
    counts_s, sep, runs_s = text.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected <probe counts>:<runs>, e.g. 10:5000")
    try:
        return _counts(counts_s), int(runs_s)
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"malformed baseline spec {text!r}") from None


def _default_threads() -> int:
    env = os.environ.get("SMOOTHCK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothmc",
                                     description="Satisfaction-function estimation for "
                                                 "uncertain reaction-network CTMCs")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run the smoothed pipeline over a parameter range")
    est.add_argument("--model", required=True, help="model file")
    est.add_argument("--property", required=True, help="property file")
    est.add_argument("--param", required=True, action="append", type=_param_triple,
                     metavar="NAME:LOW:HIGH", help="varied parameter (repeatable)")
    est.add_argument("--fix", action="append", type=_assignment, default=[],
                     metavar="NAME=VALUE", help="hold a parameter fixed (repeatable)")
    est.add_argument("--train", required=True, type=_train_spec,
                     metavar="grid:N[,N2]|lhs:N", help="training design")
    est.add_argument("--runs", required=True, type=int, help="observations per training point")
    est.add_argument("--predict", required=True, type=_counts, metavar="N[,N2]",
                     help="prediction grid counts per dimension")
    est.add_argument("--kernel", type=_kernel_spec, default=sc.KernelSpec(mode="optimize"),
                     metavar="optimize|fixed:AMP:LS[:LS...]",
                     help="kernel mode (default: optimize)")
    est.add_argument("--raw-units", action="store_true",
                     help="evaluate the kernel on raw parameter values instead of "
                          "rescaling each range to [0,1]")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out-prefix", required=True, help="output path prefix")
    est.add_argument("--pilot-runs", type=int, default=100,
                     help="ensemble size for mean-signal pilots")
    est.add_argument("--threads", type=int, default=None,
                     help="simulation workers (default: available cores, or "
                          "SMOOTHCK_THREADS)")
    est.add_argument("--max-horizon", type=float, default=None,
                     help="reject properties whose horizon exceeds this budget")
    est.add_argument("--baseline", type=_baseline_spec, default=None,
                     metavar="N[,N2]:RUNS", help="also run deep SMC probes")
    est.add_argument("--server", default=None, help="POST to a running service instead "
                                                    "of computing in-process")

    smc = sub.add_parser("smc", help="plain SMC estimate at one parameter point")
    smc.add_argument("--model", required=True)
    smc.add_argument("--property", required=True)
    smc.add_argument("--value", action="append", type=_assignment, default=[],
                     metavar="NAME=VALUE", help="parameter override (repeatable)")
    smc.add_argument("--runs", required=True, type=int)
    smc.add_argument("--seed", type=int, default=0)
    smc.add_argument("--pilot-runs", type=int, default=100)
    smc.add_argument("--server", default=None)

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    return build_parser().parse_args(argv)


class _Progress:
    """Rate-limited progress lines on stderr."""

    def __init__(self, interval: float = 0.5):
        self.interval = interval
        self.last = 0.0

    def __call__(self, done: int, total: int) -> None:
        now = time.monotonic()
        if done == total or now - self.last >= self.interval:
            self.last = now
            print(f"progress: {done}/{total} points", file=sys.stderr, flush=True)


def _post(server: str, path: str, payload: dict, response_model):
    import httpx

    reply = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    if reply.status_code != 200:
        try:
            detail = reply.json().get("detail", reply.text)
        except json.JSONDecodeError:
            detail = reply.text
        raise InferenceError(f"server returned {reply.status_code}: {detail}")
    return response_model.model_validate(reply.json())


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_outputs(resp: sc.EstimateResponse, prefix: str,
                   request: sc.EstimateRequest | None = None) -> None:
    predictions_path = f"{prefix}_predictions.csv"
    training_path = f"{prefix}_training.csv"
    write_prediction_rows(resp.param_names,
                          [row.point for row in resp.predictions],
                          [(row.prob_mean, row.ci_low, row.ci_high)
                           for row in resp.predictions],
                          predictions_path)
    write_training_rows(resp.param_names,
                        [row.point for row in resp.training],
                        [row.successes for row in resp.training],
                        [row.trials for row in resp.training],
                        training_path)
    ranges = ";".join(f"{name}:{lo:.17g}:{hi:.17g}"
                      for name, (lo, hi) in zip(resp.param_names, resp.rescale_ranges))
    entries = {
        "seed": resp.seed,
        "kernel_amplitude": format(resp.kernel_amplitude, ".17g"),
        "kernel_lengthscales": ";".join(format(l, ".17g") for l in resp.kernel_lengthscales),
        "lengthscale_units": "rescaled" if resp.rescaled else "raw",
        "rescale_ranges": ranges,
        "ep_sweeps": resp.ep_sweeps,
        "ep_converged": resp.ep_converged,
        "timing_simulation_s": f"{resp.timings.simulation_s:.6f}",
        "timing_hyperopt_s": f"{resp.timings.hyperopt_s:.6f}",
        "timing_prediction_s": f"{resp.timings.prediction_s:.6f}",
    }
    if request is not None:
        entries.update({
            "runs_per_point": request.runs_per_point,
            "pilot_runs": request.pilot_runs,
            "design": (f"grid:{','.join(map(str, request.train.counts))}"
                       if request.train.kind == "grid" else f"lhs:{request.train.n}"),
            "threads": request.threads,
            "kernel_mode": request.kernel.mode,
        })
    write_metadata(predictions_path + ".meta", entries)
    if resp.baseline is not None:
        with open(f"{prefix}_baseline.csv", "w", newline="\n") as fh:
            fh.write(",".join(resp.param_names) + ",successes,trials,p_hat,ci_low,ci_high\n")
            for row in resp.baseline:
                cells = [format(c, ".17g") for c in row.point]
                cells += [str(row.successes), str(row.trials), format(row.p_hat, ".17g"),
                          format(row.ci_low, ".17g"), format(row.ci_high, ".17g")]
                fh.write(",".join(cells) + "\n")


def _run_estimate(args: argparse.Namespace) -> int:
    baseline_counts, baseline_runs = args.baseline if args.baseline else (None, None)
    request = sc.EstimateRequest(
        model_text=_read(args.model),
        property_text=_read(args.property),
        varied=args.param,
        fixed=dict(args.fix),
        train=args.train,
        runs_per_point=args.runs,
        predict_counts=args.predict,
        kernel=args.kernel,
        seed=args.seed,
        rescale_inputs=not args.raw_units,
        pilot_runs=args.pilot_runs,
        threads=args.threads if args.threads is not None else _default_threads(),
        max_horizon=args.max_horizon,
        baseline_counts=baseline_counts,
        baseline_runs=baseline_runs,
    )
    if args.server:
        resp = _post(args.server, "/smoothed/estimate",
                     request.model_dump(mode="json"), sc.EstimateResponse)
    else:
        resp = estimate_handler(request, progress=_Progress())
    _write_outputs(resp, args.out_prefix, request)
    print(f"SMC sampling:                {resp.timings.simulation_s:8.2f} s")
    print(f"Hyperparameter optimization: {resp.timings.hyperopt_s:8.2f} s")
    print(f"GP prediction:               {resp.timings.prediction_s:8.2f} s")
    print(f"wrote {args.out_prefix}_predictions.csv (+.meta), "
          f"{args.out_prefix}_training.csv"
          + (f", {args.out_prefix}_baseline.csv" if resp.baseline is not None else ""))
    if not resp.ep_converged:
        print("warning: EP inference did not fully converge; see metadata",
              file=sys.stderr)
    return EXIT_OK


def _run_smc(args: argparse.Namespace) -> int:
    request = sc.SmcRequest(model_text=_read(args.model),
                            property_text=_read(args.property),
                            param_values=dict(args.value), runs=args.runs,
                            seed=args.seed, pilot_runs=args.pilot_runs)
    if args.server:
        resp = _post(args.server, "/smc/estimate",
                     request.model_dump(mode="json"), sc.SmcResponse)
    else:
        resp = smc_handler(request)
    print(json.dumps(resp.model_dump(), indent=2))
    return EXIT_OK


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE

    try:
        if args.command == "estimate":
            return _run_estimate(args)
        if args.command == "smc":
            return _run_smc(args)
        return _run_serve(args)
    except _PARSE_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except _SIM_ERRORS as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIMULATION
    except InferenceError as err:
        print(f"inference error: {err}", file=sys.stderr)
        return EXIT_INFERENCE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

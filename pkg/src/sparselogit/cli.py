"""Command-line interface.

CSV input contract: optional header row; the first column is the binary
response with entries exactly 0 or 1; the remaining columns are predictors;
UTF-8 with a plain decimal point.  Every JSON report embeds the resolved run
manifest, including a timestamp, and is otherwise a pure function of the
input files, flags and seed.  Reported indices are 1-based.

Exit codes: 0 success, 2 usage error, 3 data validation error, 4 numeric
failure.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__
from .baselines import SelectionMethod, loocv_evaluate
from .calibration import calibrate
from .diagnostics import assumption_quantities, event_statistic
from .errors import (
    CalibrationError,
    DataValidationError,
    NumericError,
    ParameterError,
)
from .model import Dataset, residuals
from .simulation import SimulationConfig, run_experiment
from .solver import LambdaGrid, fit_path

SCHEMA_VERSION = 1

_METHOD_CHOICES = [m.value for m in SelectionMethod]

_SIMULATE_DEFAULTS = {
    "n": 200,
    "p": 200,
    "kappa": 0.0,
    "s": 5,
    "reps": 10,
    "n_lambda": 500,
    "constant_c": 1.5,
    "folds": 10,
    "seed": 0,
    "methods": tuple(_METHOD_CHOICES),
}

_SIMULATE_PRESETS = {
    "fig1-desk": {
        "n": 200,
        "p": 200,
        "kappa": 0.5,
        "s": 5,
        "reps": 50,
        "n_lambda": 500,
        "constant_c": 1.5,
        "folds": 10,
        "seed": 7,
        "methods": tuple(_METHOD_CHOICES),
    },
}


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParameterError as exc:
            raise click.UsageError(str(exc)) from exc
        except DataValidationError as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(3)
        except (NumericError, CalibrationError) as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _load_dataset_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as handle:
        raw = list(csv.reader(handle))
    rows = []
    for lineno, row in enumerate(raw, start=1):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        try:
            rows.append(([float(cell) for cell in row], lineno))
        except ValueError as exc:
            if lineno == 1:
                continue  # optional header row
            raise DataValidationError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    width = len(rows[0][0])
    if width < 2:
        raise DataValidationError(
            f"{path}: need a response column plus at least one predictor column"
        )
    for values, lineno in rows:
        if len(values) != width:
            raise DataValidationError(
                f"{path}: line {lineno}: expected {width} columns, got {len(values)}"
            )
    matrix = np.array([values for values, _ in rows])
    y = matrix[:, 0]
    for (values, lineno), value in zip(rows, y):
        if value not in (0.0, 1.0):
            raise DataValidationError(
                f"{path}: line {lineno}: response must be 0 or 1, got {value!r}"
            )
    return matrix[:, 1:], y


def _load_vector_csv(path: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as handle:
        raw = list(csv.reader(handle))
    values = []
    for lineno, row in enumerate(raw, start=1):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        if len(row) != 1:
            raise DataValidationError(f"{path}: line {lineno}: expected a single column")
        try:
            values.append(float(row[0]))
        except ValueError as exc:
            if lineno == 1:
                continue
            raise DataValidationError(f"{path}: line {lineno}: {exc}") from None
    if not values:
        raise DataValidationError(f"{path}: no values")
    return np.array(values)


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)  # constant columns pass through unscaled
    return (X - mu) / sd, mu, sd


def _make_grid(n: int, p: int, lambda_max: float | None, ratio: float, n_lambda: int) -> LambdaGrid:
    if lambda_max is None:
        lambda_max = 10.0 * math.log(p) / n
    if lambda_max <= 0:
        raise ParameterError("lambda-max must be positive")
    if not 0.0 < ratio < 1.0:
        raise ParameterError("lambda-min-ratio must lie in (0, 1)")
    if n_lambda < 1:
        raise ParameterError("n-lambda must be at least 1")
    if n_lambda == 1:
        return LambdaGrid(np.array([lambda_max]))
    return LambdaGrid(np.linspace(ratio * lambda_max, lambda_max, n_lambda))


def _manifest(command: str, parameters: dict, inputs, output, seed=None) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "parameters": parameters,
        "input": inputs,
        "output": output,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _jsonify(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, dict):
        return {key: _jsonify(val) for key, val in value.items()}
    return value


def _emit(result: dict, manifest: dict, output: str | None) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "manifest": manifest, "result": result}
    text = json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _sparse_coefficients(beta: np.ndarray) -> list[dict]:
    return [
        {"index": int(j) + 1, "value": float(beta[j])} for j in np.flatnonzero(beta)
    ]


def _output_option(fn):
    return click.option(
        "-o", "--output", type=click.Path(dir_okay=False), default=None,
        help="Write the JSON report here instead of stdout.",
    )(fn)


def _grid_options(fn):
    for option in (
        click.option("--lambda-max", type=float, default=None,
                     help="Largest grid value; defaults to 10*log(p)/n."),
        click.option("--lambda-min-ratio", type=float, default=1e-4, show_default=True),
        click.option("--n-lambda", type=int, default=500, show_default=True),
    ):
        fn = option(fn)
    return fn


def _solver_options(fn):
    for option in (
        click.option("--tol", type=float, default=1e-7, show_default=True,
                     help="Sup-norm KKT tolerance."),
        click.option("--max-iter", type=int, default=10_000, show_default=True,
                     help="Coordinate-sweep budget per grid value."),
    ):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="sparselogit")
def main():
    """L1-penalized logistic regression with testing-based calibration."""


@main.command("fit-path")
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False))
@_output_option
@_grid_options
@_solver_options
@click.option("--standardize", is_flag=True, help="Center and scale predictors first.")
@click.option("--coefficients", "with_coefficients", is_flag=True,
              help="Include sparse coefficient lists per grid value.")
@click.option("--figures", type=click.Path(file_okay=False), default=None,
              help="Directory for rendered figures.")
@_guarded
def cmd_fit_path(data_csv, output, lambda_max, lambda_min_ratio, n_lambda,
                 tol, max_iter, standardize, with_coefficients, figures):
    """Fit the whole regularization path on a CSV dataset."""
    X, y = _load_dataset_csv(data_csv)
    scale = np.ones(X.shape[1])
    if standardize:
        X, _, scale = _standardize(X)
    data = Dataset(X, y)
    grid = _make_grid(data.n_samples, data.n_features, lambda_max, lambda_min_ratio, n_lambda)
    path = fit_path(data, grid, tol=tol, max_iter=max_iter)

    points = []
    for point in path.points:
        record = {
            "lambda": point.lam,
            "converged": point.converged,
            "iterations": point.iterations,
            "kkt_residual": point.kkt_residual,
            "n_nonzero": int(np.count_nonzero(point.beta)),
            "l1_norm": float(np.abs(point.beta).sum()),
        }
        if with_coefficients:
            record["coefficients"] = _sparse_coefficients(point.beta / scale)
        points.append(record)

    figure_files = []
    if figures:
        from .plotting import save_coefficient_path_figure

        figure_files.append(
            str(save_coefficient_path_figure(path, Path(figures) / "coefficient_paths.png"))
        )

    parameters = {
        "lambda_max": float(grid.values[-1]),
        "lambda_min_ratio": lambda_min_ratio,
        "n_lambda": n_lambda,
        "tol": tol,
        "max_iter": max_iter,
        "standardize": standardize,
        "coefficients": with_coefficients,
    }
    manifest = _manifest("fit-path", parameters, data_csv, output)
    if figure_files:
        manifest["figures"] = figure_files
    _emit({"grid": list(grid.values), "points": points}, manifest, output)


@main.command("calibrate")
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False))
@_output_option
@_grid_options
@_solver_options
@click.option("--constant-c", type=float, default=1.5, show_default=True,
              help="Test constant; also sets the support threshold 3*C*lambda.")
@click.option("--standardize", is_flag=True, help="Center and scale predictors first.")
@click.option("--figures", type=click.Path(file_okay=False), default=None,
              help="Directory for rendered figures.")
@_guarded
def cmd_calibrate(data_csv, output, lambda_max, lambda_min_ratio, n_lambda,
                  tol, max_iter, constant_c, standardize, figures):
    """Select the tuning parameter by pairwise sup-norm tests."""
    X, y = _load_dataset_csv(data_csv)
    mu = np.zeros(X.shape[1])
    scale = np.ones(X.shape[1])
    if standardize:
        X, mu, scale = _standardize(X)
    data = Dataset(X, y)
    grid = _make_grid(data.n_samples, data.n_features, lambda_max, lambda_min_ratio, n_lambda)
    result = calibrate(data, grid, constant_c=constant_c, tol=tol, max_iter=max_iter)

    beta_original = result.beta_hat / scale
    offset = -float((mu / scale) @ result.beta_hat) if standardize else 0.0
    payload = {
        "lambda_hat": result.lambda_hat,
        "lambda_index": result.lambda_index + 1,
        "constant_c": result.constant_c,
        "beta_hat": _sparse_coefficients(beta_original),
        "intercept_offset": offset,
        "support": [int(j) + 1 for j in result.support_hat],
        "n_path_points_fitted": len(result.test_trace),
        "test_trace": [
            {"lambda": rec.lam, "statistic": rec.statistic, "passed": rec.passed}
            for rec in result.test_trace
        ],
    }

    figure_files = []
    if figures:
        from .plotting import save_test_trace_figure

        figure_files.append(
            str(save_test_trace_figure(result.test_trace, result.lambda_hat,
                                       Path(figures) / "test_trace.png"))
        )

    parameters = {
        "lambda_max": float(grid.values[-1]),
        "lambda_min_ratio": lambda_min_ratio,
        "n_lambda": n_lambda,
        "constant_c": constant_c,
        "tol": tol,
        "max_iter": max_iter,
        "standardize": standardize,
    }
    manifest = _manifest("calibrate", parameters, data_csv, output)
    if figure_files:
        manifest["figures"] = figure_files
    _emit(payload, manifest, output)


@main.command("simulate")
@_output_option
@click.option("--preset", type=click.Choice(sorted(_SIMULATE_PRESETS)), default=None,
              help="Named parameter bundle; explicit flags still override.")
@click.option("--n", type=int, default=None)
@click.option("--p", type=int, default=None)
@click.option("--kappa", type=float, default=None)
@click.option("--s", type=int, default=None)
@click.option("--reps", type=int, default=None)
@click.option("--methods", type=click.Choice(_METHOD_CHOICES), multiple=True)
@click.option("--n-lambda", type=int, default=None)
@click.option("--constant-c", type=float, default=None)
@click.option("--folds", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--timing-mode", is_flag=True,
              help="Collect wall-clock times; forces sequential replications.")
@click.option("--trace-csv", type=click.Path(dir_okay=False), default=None,
              help="Write the per-replication trace here.")
@click.option("--figures", type=click.Path(file_okay=False), default=None,
              help="Directory for rendered figures.")
@_guarded
def cmd_simulate(output, preset, n, p, kappa, s, reps, methods, n_lambda,
                 constant_c, folds, seed, threads, timing_mode, trace_csv, figures):
    """Run the seeded synthetic experiment and report per-method summaries."""
    resolved = dict(_SIMULATE_DEFAULTS)
    if preset:
        resolved.update(_SIMULATE_PRESETS[preset])
    overrides = {
        "n": n, "p": p, "kappa": kappa, "s": s, "reps": reps,
        "n_lambda": n_lambda, "constant_c": constant_c, "folds": folds,
        "seed": seed, "methods": methods or None,
    }
    resolved.update({key: value for key, value in overrides.items() if value is not None})

    config = SimulationConfig(
        n=resolved["n"],
        p=resolved["p"],
        kappa=resolved["kappa"],
        s=resolved["s"],
        n_reps=resolved["reps"],
        methods=tuple(SelectionMethod(m) for m in resolved["methods"]),
        n_lambda=resolved["n_lambda"],
        constant_c=resolved["constant_c"],
        seed=resolved["seed"],
        k_folds=resolved["folds"],
        threads=threads,
        timing_mode=timing_mode,
    )
    summary = run_experiment(config)

    if trace_csv:
        with open(trace_csv, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["rep", "method", "lambda", "hamming", "seconds"])
            for row in summary.trace:
                writer.writerow([
                    row.rep, row.method, repr(row.lam), row.hamming,
                    "" if row.seconds is None else f"{row.seconds:.6f}",
                ])

    figure_files = []
    if figures:
        from .plotting import save_hamming_figure, save_runtime_figure

        figure_files.append(
            str(save_hamming_figure(summary.trace, Path(figures) / "hamming.png"))
        )
        if timing_mode:
            figure_files.append(
                str(save_runtime_figure(summary.trace, Path(figures) / "runtimes.png"))
            )

    result = {
        "n_reps": summary.n_reps,
        "methods": [
            {
                "method": m.method,
                "hamming_mean": m.hamming_mean,
                "hamming_sd": m.hamming_sd,
                "seconds_mean": m.seconds_mean,
                "seconds_sd": m.seconds_sd,
                "n_completed": m.n_completed,
                "n_failed": m.n_failed,
            }
            for m in summary.methods
        ],
    }
    parameters = {
        "preset": preset,
        "n": config.n,
        "p": config.p,
        "kappa": config.kappa,
        "s": config.s,
        "reps": config.n_reps,
        "methods": [m.value for m in config.methods],
        "n_lambda": config.n_lambda,
        "constant_c": config.constant_c,
        "folds": config.k_folds,
        "threads": threads,
        "timing_mode": timing_mode,
        "trace_csv": trace_csv,
    }
    manifest = _manifest("simulate", parameters, None, output, seed=config.seed)
    if figure_files:
        manifest["figures"] = figure_files
    _emit(result, manifest, output)


@main.command("evaluate")
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False))
@_output_option
@_grid_options
@_solver_options
@click.option("--method", "methods", type=click.Choice(_METHOD_CHOICES),
              multiple=True, default=("testing",), show_default=True)
@click.option("--constant-c", type=float, default=1.5, show_default=True)
@click.option("--folds", type=int, default=10, show_default=True,
              help="Folds of the inner cross-validation (cv method only).")
@click.option("--refit/--no-refit", default=True, show_default=True,
              help="Also report errors after unpenalized refits.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--standardize", is_flag=True, help="Center and scale predictors first.")
@_guarded
def cmd_evaluate(data_csv, output, lambda_max, lambda_min_ratio, n_lambda, tol,
                 max_iter, methods, constant_c, folds, refit, seed, threads,
                 standardize):
    """Leave-one-out model sizes and prediction errors per method."""
    X, y = _load_dataset_csv(data_csv)
    if standardize:
        X, _, _ = _standardize(X)
    data = Dataset(X, y)
    if data.n_samples < 2:
        raise DataValidationError("evaluation needs at least two samples")
    grid = _make_grid(data.n_samples, data.n_features, lambda_max, lambda_min_ratio, n_lambda)

    reports = []
    for method in methods:
        report = loocv_evaluate(
            data, method, refit=refit, constant_c=constant_c, k_cv=folds,
            seed=seed, grid=grid, threads=threads, tol=tol, max_iter=max_iter,
        )
        reports.append({
            "method": method,
            "model_size_mean": report.model_size_mean,
            "model_size_sd": report.model_size_sd,
            "loocv_error_mean": report.loocv_error_mean,
            "loocv_error_sd": report.loocv_error_sd,
            "loocv_refit_error_mean": report.loocv_refit_error_mean,
            "loocv_refit_error_sd": report.loocv_refit_error_sd,
            "n_evaluated": report.n_evaluated,
            "n_failed": report.n_failed,
        })

    parameters = {
        "methods": list(methods),
        "constant_c": constant_c,
        "folds": folds,
        "refit": refit,
        "threads": threads,
        "lambda_max": float(grid.values[-1]),
        "lambda_min_ratio": lambda_min_ratio,
        "n_lambda": n_lambda,
        "tol": tol,
        "max_iter": max_iter,
        "standardize": standardize,
    }
    manifest = _manifest("evaluate", parameters, data_csv, output, seed=seed)
    _emit({"methods": reports}, manifest, output)


@main.command("diagnose")
@click.argument("data_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth_csv", type=click.Path(exists=True, dir_okay=False))
@_output_option
@click.option("--at-lambda", type=float, default=None,
              help="Also evaluate the noise event at this tuning parameter.")
@_guarded
def cmd_diagnose(data_csv, truth_csv, output, at_lambda):
    """Design-condition diagnostics; requires the true coefficient vector."""
    X, y = _load_dataset_csv(data_csv)
    truth = _load_vector_csv(truth_csv)
    if truth.shape[0] != X.shape[1]:
        raise DataValidationError(
            f"truth vector has length {truth.shape[0]}, expected {X.shape[1]} predictors"
        )
    data = Dataset(X, y)
    support = np.flatnonzero(truth)
    diag = assumption_quantities(X, truth, support)

    noise = residuals(data, truth)
    gamma_valid = math.isfinite(diag.gamma) and 0.0 < diag.gamma <= 1.0
    statistic = event_statistic(X, noise, diag.gamma) if gamma_valid else None
    holds_at = None
    if at_lambda is not None:
        if at_lambda <= 0:
            raise ParameterError("at-lambda must be positive")
        holds_at = None if statistic is None else bool(statistic <= at_lambda)

    result = {
        "c_min": diag.c_min,
        "c_max": diag.c_max,
        "gamma": diag.gamma,
        "a": diag.a,
        "c_b": diag.c_b,
        "lambda_cap": diag.lambda_cap,
        "assumptions_hold": diag.assumptions_hold,
        "support_size": int(support.size),
        "support": [int(j) + 1 for j in support],
        "event_statistic": statistic,
        "at_lambda": at_lambda,
        "event_holds": holds_at,
    }
    manifest = _manifest("diagnose", {"at_lambda": at_lambda}, [data_csv, truth_csv], output)
    _emit(result, manifest, output)


if __name__ == "__main__":
    main()

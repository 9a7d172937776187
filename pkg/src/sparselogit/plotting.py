"""Report figures, rendered straight to files alongside the JSON/CSV output.

Figures are drawn on standalone ``Figure`` objects (no pyplot state), so the
functions are safe to call from the CLI or from worker threads.
"""

from __future__ import annotations

from pathlib import Path

from matplotlib.figure import Figure

_METHOD_ORDER = ("testing", "bic", "cv", "aic")


def _save(fig: Figure, out: str | Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    return out


def save_coefficient_path_figure(path, out: str | Path) -> Path:
    """Coefficient trajectories against the tuning parameter."""
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    lams = [point.lam for point in path.points]
    betas = path.beta_matrix()
    for j in range(betas.shape[1]):
        ax.plot(lams, betas[:, j], linewidth=0.8)
    ax.set_xlabel("tuning parameter")
    ax.set_ylabel("coefficient")
    ax.set_title("regularization path")
    return _save(fig, out)


def save_test_trace_figure(trace, lambda_hat: float, out: str | Path) -> Path:
    """Scanned test statistics with the selected tuning parameter marked."""
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    lams = [record.lam for record in trace]
    stats = [record.statistic for record in trace]
    ax.plot(lams, stats, marker=".", linewidth=0.8)
    ax.axhline(0.0, color="gray", linewidth=0.8, linestyle="--")
    ax.axvline(lambda_hat, color="tab:red", linewidth=0.8, label="selected")
    ax.set_xlabel("tuning parameter")
    ax.set_ylabel("max pairwise statistic - C")
    ax.set_title("calibration test trace")
    ax.legend()
    return _save(fig, out)


def _grouped(trace_rows, attribute: str) -> tuple[list[str], list[list[float]]]:
    present = {row.method for row in trace_rows}
    methods = [m for m in _METHOD_ORDER if m in present]
    methods += sorted(present - set(methods))
    values = [
        [getattr(row, attribute) for row in trace_rows if row.method == m]
        for m in methods
    ]
    return methods, values


def save_hamming_figure(trace_rows, out: str | Path) -> Path:
    """Per-method box plot of support-recovery Hamming distances."""
    methods, values = _grouped(trace_rows, "hamming")
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    ax.boxplot(values, tick_labels=methods)
    ax.set_ylabel("Hamming distance")
    ax.set_title("variable selection error")
    return _save(fig, out)


def save_runtime_figure(trace_rows, out: str | Path) -> Path:
    """Per-method box plot of selection wall-clock times (timing mode only)."""
    timed = [row for row in trace_rows if row.seconds is not None]
    methods, values = _grouped(timed, "seconds")
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.subplots()
    ax.boxplot(values, tick_labels=methods)
    ax.set_ylabel("seconds")
    ax.set_title("selection run time")
    return _save(fig, out)

"""SVG convergence and prediction plots (matplotlib, Agg backend)."""

from __future__ import annotations

import numpy as np

from ._io import atomic_path

LOSS_FLOOR = 1e-300


def _figure():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    # fixed element ids so reruns produce identical files
    matplotlib.rcParams["svg.hashsalt"] = "rkbs-mirror"
    return plt


def log_loss(loss) -> np.ndarray:
    """``log10(max(loss, 1e-300))``: a zero loss plots at -300."""
    return np.log10(np.maximum(np.asarray(loss, dtype=float), LOSS_FLOOR))


def _save(fig, path):
    with atomic_path(path) as tmp:
        fig.savefig(tmp, format="svg", metadata={"Date": None})


def emit_svg_plots(report, paths: dict):
    """Write ``paths["convergence"]`` and ``paths["prediction"]`` for an ExperimentReport."""
    plt = _figure()

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for run in report.runs:
        arr = run.result.trace_array()
        ax.plot(arr[:, 0], log_loss(arr[:, 1]), label=f"p = {run.p:g}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("log10 training loss")
    ax.legend(title="exponent")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, paths["convergence"])
    plt.close(fig)

    ds = report.dataset
    x = ds.X[:, 0]
    order = np.argsort(x, kind="stable")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.scatter(x, ds.Y, s=10, color="black", label="ground truth", zorder=3)
    H = report.similarity
    for run in report.runs:
        ax.plot(x[order], (H @ run.result.alpha_final)[order], label=f"p = {run.p:g}")
    ax.plot(x[order], report.baseline_prediction[order], "--", color="gray", label="Gaussian direct solve")
    ax.set_xlabel("x" if ds.X.shape[1] == 1 else "x0")
    ax.set_ylabel("y")
    ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, paths["prediction"])
    plt.close(fig)

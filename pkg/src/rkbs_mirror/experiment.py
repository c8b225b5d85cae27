"""Step-function regression study: data synthesis, p-sweeps, baseline, outputs.

Configuration and report files are JSON. Random draws come from numpy's
``default_rng`` (PCG64). The experiment seed is split with ``SeedSequence``
into independent streams for the data and for center selection.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__, _backend
from ._io import atomic_write_text
from .errors import ConfigError, NumericalError
from .kernels import (
    CenterSet,
    GaussianKernel,
    LabRbfKernel,
    assemble_similarity,
    fit_lab_bandwidths,
    lab_loss_and_grad,
    rank_diagnostic,
)
from .plotting import emit_svg_plots
from .optimizer import Dataset, FitResult, SolverConfig, StopReason, TraceRecord, fit_matrix

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "PRun",
    "load_config",
    "synth_step_dataset",
    "load_csv_dataset",
    "select_centers",
    "baseline_direct_solve",
    "baseline_grid_search",
    "run_experiment",
    "run_baseline",
    "emit_trace_csv",
    "emit_svg_plots",
    "read_trace_csv",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("iter", "loss", "primal_norm", "dual_norm", "grad_dual_norm")
COND_WARN_TOL = 1e-12


@dataclass
class ExperimentConfig:
    """Every tunable of a run. Unknown keys in a config file are rejected.

    ``eta`` is a number or a grid. With ``eta_scale="spectral"`` each value is
    divided by ``||H_hat||_2**2`` before use (the p=2 stability limit is 1.0
    on that scale); with ``"absolute"`` it is used as given.

    ``theta_init="baseline"`` starts every LAB bandwidth at ``sqrt(2 / sigma2)``
    for the sigma2 picked by the Gaussian baseline, so the LAB kernel starts
    out equal to the best baseline kernel before the bandwidth steps.
    """

    n_train: int = 80
    k_centers: int = 15
    p_values: list = field(default_factory=lambda: [2.0, 1.67, 1.5, 1.4, 1.33, 1.25])
    eta: Union[float, list] = field(default_factory=lambda: [0.125, 0.25, 0.5, 0.9])
    eta_scale: str = "spectral"
    T: int = 50_000
    trace_stride: Optional[int] = None
    kernel: str = "lab"
    kernel_sigma2: float = 0.01
    theta_init: Union[float, str] = 1.0
    theta_steps: int = 10
    theta_lr: float = 1e-2
    theta_ridge: float = 1.0
    step_location: float = 0.5
    step_levels: list = field(default_factory=lambda: [0.0, 1.0])
    baseline_sigma2: Union[float, list] = field(default_factory=lambda: [0.001, 0.01, 0.1, 1.0])
    seed: int = 0
    output_dir: str = "runs/default"
    data_csv: Optional[str] = None
    mode: str = "unreg"
    lam: float = 0.0
    radius: Optional[float] = None
    schedule: str = "fixed"
    lipschitz: Optional[float] = None
    inverse: str = "exact"
    kernel_form: str = "canonical"
    projection_style: str = "agile"
    init: str = "zero"
    init_scale: float = 1.0
    tol: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_train < 1 or self.k_centers < 1:
            raise ConfigError("n_train and k_centers must be positive")
        if self.data_csv is None and self.k_centers > self.n_train:
            raise ConfigError("k_centers must not exceed n_train")
        if not self.p_values:
            raise ConfigError("p_values is empty")
        if any(not float(p) > 1.0 for p in self.p_values):
            raise ConfigError("every p must exceed 1")
        if any(not float(e) > 0 for e in self.eta_grid):
            raise ConfigError("eta values must be positive")
        if self.eta_scale not in ("spectral", "absolute"):
            raise ConfigError("eta_scale must be 'spectral' or 'absolute'")
        if self.T < 0:
            raise ConfigError("T must be >= 0")
        if self.kernel not in ("lab", "gaussian"):
            raise ConfigError("kernel must be 'lab' or 'gaussian'")
        if self.theta_init != "baseline" and (isinstance(self.theta_init, str) or not self.theta_init > 0):
            raise ConfigError("theta_init must be a positive number or 'baseline'")
        if not self.kernel_sigma2 > 0 or not self.theta_lr > 0:
            raise ConfigError("kernel_sigma2 and theta_lr must be positive")
        if self.theta_steps < 0 or self.theta_ridge < 0:
            raise ConfigError("theta_steps and theta_ridge must be >= 0")
        if not 0.0 < self.step_location < 1.0:
            raise ConfigError("step_location must lie in (0, 1)")
        if len(self.step_levels) != 2:
            raise ConfigError("step_levels must be [low, high]")
        if any(not float(s) > 0 for s in self.sigma2_grid):
            raise ConfigError("baseline_sigma2 values must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        # surfaces bad enum values and mode/radius mismatches early
        self.solver_config(float(self.p_values[0]), 1.0)

    @property
    def eta_grid(self) -> list:
        return [float(e) for e in (self.eta if isinstance(self.eta, (list, tuple)) else [self.eta])]

    @property
    def sigma2_grid(self) -> list:
        b = self.baseline_sigma2
        return [float(s) for s in (b if isinstance(b, (list, tuple)) else [b])]

    def solver_config(self, p: float, eta: float) -> SolverConfig:
        return SolverConfig(
            p=p, eta=eta, iterations=self.T, lam=self.lam, mode=self.mode, radius=self.radius,
            schedule=self.schedule, lipschitz=self.lipschitz, kernel_form=self.kernel_form,
            inverse_variant=self.inverse, projection_style=self.projection_style, seed=self.seed,
            init=self.init, init_scale=self.init_scale, trace_stride=self.trace_stride, tol=self.tol,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON config; non-None ``overrides`` replace file values."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def _seed_streams(seed: int):
    data_ss, center_ss = np.random.SeedSequence(seed).spawn(2)
    return data_ss, center_ss


def synth_step_dataset(n: int, step_location: float = 0.5, levels=(0.0, 1.0), seed=0) -> Dataset:
    """``n`` sorted uniform draws on [0, 1]; ``y = high`` where ``x >= step_location``."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = np.sort(rng.random(n))
    low, high = float(levels[0]), float(levels[1])
    y = np.where(x >= step_location, high, low)
    return Dataset(x[:, None], y)


def load_csv_dataset(path) -> Dataset:
    """Read a CSV with a header row; last column is ``y``, the rest are inputs."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ConfigError(f"{path}: need a header and at least one row")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError(f"{path}: need at least one input column and a y column")
    return Dataset(data[:, :-1], data[:, -1])


def select_centers(dataset: Dataset, k: int, seed=0) -> CenterSet:
    """``k`` distinct training inputs sampled without replacement, kept in data order."""
    if k > dataset.n:
        raise ConfigError(f"cannot pick {k} centers from {dataset.n} points")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(dataset.n, size=k, replace=False))
    return CenterSet(dataset.X[idx])


def baseline_direct_solve(X, Y, centers: CenterSet, sigma2: float):
    """Minimum-norm least-squares solution of ``K_g alpha ~= Y`` for the Gaussian kernel.

    Returns ``(alpha, loss)`` with ``loss = ||K_g alpha - Y||^2``.
    """
    K = assemble_similarity(GaussianKernel(sigma2), X, centers)
    Y = np.asarray(Y, dtype=float)
    alpha, _, _, s = np.linalg.lstsq(K, Y, rcond=None)
    if s[0] == 0.0 or s[-1] / s[0] < COND_WARN_TOL:
        warnings.warn(f"Gaussian system is rank deficient for sigma2={sigma2}; "
                      "returning the minimum-norm solution", RuntimeWarning, stacklevel=2)
    r = K @ alpha - Y
    return alpha, float(r @ r)


def baseline_grid_search(X, Y, centers: CenterSet, grid: Sequence[float]) -> dict:
    """Direct solve for every sigma2 in ``grid``; keep the lowest training loss."""
    results = []
    for s2 in grid:
        alpha, loss = baseline_direct_solve(X, Y, centers, s2)
        results.append({"sigma2": float(s2), "loss": loss, "alpha": alpha})
    best = min(results, key=lambda r: r["loss"])
    return {
        "sigma2": best["sigma2"],
        "loss": best["loss"],
        "alpha": best["alpha"],
        "grid": [{"sigma2": r["sigma2"], "loss": r["loss"]} for r in results],
    }


# -- file output -------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def emit_trace_csv(trace: Sequence[TraceRecord], path):
    """Write ``iter,loss,primal_norm,dual_norm,grad_dual_norm`` with 17 significant digits."""
    if not trace:
        raise ValueError("trace is empty")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for rec in trace:
        w.writerow([int(rec[0])] + [_fmt(v) for v in rec[1:]])
    atomic_write_text(Path(path), buf.getvalue())


def read_trace_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        return [TraceRecord(int(r[0]), *(float(v) for v in r[1:])) for r in reader]


def _p_label(p: float) -> str:
    return format(float(p), "g")


def _write_predictions(path, X, Y, columns: dict):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    xcols = ["x"] if X.shape[1] == 1 else [f"x{j}" for j in range(X.shape[1])]
    w.writerow(xcols + ["y_true"] + list(columns))
    vals = list(columns.values())
    for i in range(X.shape[0]):
        w.writerow([_fmt(v) for v in X[i]] + [_fmt(Y[i])] + [_fmt(c[i]) for c in vals])
    atomic_write_text(Path(path), buf.getvalue())


# -- runs ----------------------------------------------------------------------

@dataclass
class PRun:
    """Result of one p value after eta tuning."""

    p: float
    eta: float
    eta_grid: list
    grid_final_losses: list
    result: FitResult
    trace_csv: str

    @property
    def final_loss(self) -> float:
        return self.result.final_loss

    def to_dict(self, n: int) -> dict:
        r = self.result
        return {
            "p": self.p,
            "eta": self.eta,
            "eta_grid": self.eta_grid,
            "grid_final_losses": self.grid_final_losses,
            "initial_loss": r.trace[0].loss,
            "final_loss": r.final_loss,
            "final_mse": r.final_loss / n,
            "steps": r.steps,
            "stop_reason": r.converged_reason.value,
            "alpha": r.alpha_final.tolist(),
            "trace_csv": self.trace_csv,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    output_dir: Path
    dataset: Dataset
    centers: CenterSet
    kernel_info: dict
    runs: list
    baseline: dict
    files: dict
    metadata: dict
    ok: bool = True
    similarity: Optional[np.ndarray] = None
    baseline_prediction: Optional[np.ndarray] = None

    def run_for(self, p: float) -> PRun:
        for run in self.runs:
            if run.p == float(p):
                return run
        raise KeyError(p)

    def to_dict(self) -> dict:
        n = self.dataset.n
        return {
            "ok": self.ok,
            "config": self.config.to_dict(),
            "metadata": self.metadata,
            "kernel": self.kernel_info,
            "centers": self.centers.points.tolist(),
            "runs": [r.to_dict(n) for r in self.runs],
            "baseline": {
                "sigma2": self.baseline["sigma2"],
                "loss": self.baseline["loss"],
                "mse": self.baseline["loss"] / n,
                "alpha": np.asarray(self.baseline["alpha"]).tolist(),
                "grid": self.baseline["grid"],
            },
            "files": self.files,
        }


def _build_dataset(config: ExperimentConfig, data_ss) -> Dataset:
    if config.data_csv:
        ds = load_csv_dataset(config.data_csv)
        if config.k_centers > ds.n:
            raise ConfigError(f"k_centers={config.k_centers} exceeds dataset size {ds.n}")
        return ds
    return synth_step_dataset(config.n_train, config.step_location, config.step_levels, data_ss)


def _build_kernel(config: ExperimentConfig, ds: Dataset, centers: CenterSet, baseline_sigma2=None):
    if config.kernel == "gaussian":
        kern = GaussianKernel(config.kernel_sigma2)
        return kern, {"kind": "gaussian", "sigma2": config.kernel_sigma2}
    if config.theta_init == "baseline":
        # exp(-theta^2 d^2 / 2) == exp(-d^2 / sigma2)
        theta0 = math.sqrt(2.0 / baseline_sigma2)
    else:
        theta0 = float(config.theta_init)
    kern = LabRbfKernel.ones(centers.k, centers.d, theta0)
    info = {"kind": "lab", "theta_init": theta0, "theta_steps": config.theta_steps,
            "theta_lr": config.theta_lr, "theta_ridge": config.theta_ridge}
    if config.theta_steps > 0:
        # alpha for the bandwidth phase: ridge fit at the initial bandwidths, then held fixed
        H0 = assemble_similarity(kern, ds.X, centers)
        if config.theta_ridge > 0:
            alpha = np.linalg.solve(H0.T @ H0 + config.theta_ridge * np.eye(centers.k), H0.T @ ds.Y)
        else:
            alpha = np.linalg.lstsq(H0, ds.Y, rcond=None)[0]
        before, _ = lab_loss_and_grad(kern.theta, ds.X, ds.Y, centers, alpha)
        theta = fit_lab_bandwidths(kern, ds.X, ds.Y, centers, alpha, config.theta_steps, config.theta_lr)
        after, _ = lab_loss_and_grad(theta, ds.X, ds.Y, centers, alpha)
        kern = LabRbfKernel(theta)
        info["theta_phase_loss"] = [before, after]
    info["theta"] = kern.theta.tolist()
    return kern, info


def _tune_p(H, Y, config: ExperimentConfig, p: float, pool) -> tuple:
    scale = 1.0 / np.linalg.norm(H, 2) ** 2 if config.eta_scale == "spectral" else 1.0
    etas = [e * scale for e in config.eta_grid]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        jobs = [(p, eta) for eta in etas]
        results = list(pool.map(lambda job: fit_matrix(H, Y, config.solver_config(*job)), jobs))
    losses = [r.final_loss if r.converged_reason is not StopReason.NON_FINITE else math.inf for r in results]
    best = int(np.argmin(losses))
    return etas, losses, results[best]


def run_experiment(config: ExperimentConfig, output_dir=None) -> ExperimentReport:
    """Run the full p-sweep and write traces, predictions, plots and ``report.json``.

    Raises :class:`NumericalError` (after writing everything it can) when every
    step size diverged for some p.
    """
    t0 = time.perf_counter()
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_ss, center_ss = _seed_streams(config.seed)
    ds = _build_dataset(config, data_ss)
    centers = select_centers(ds, config.k_centers, center_ss)
    baseline = baseline_grid_search(ds.X, ds.Y, centers, config.sigma2_grid)
    kernel, kernel_info = _build_kernel(config, ds, centers, baseline["sigma2"])
    kernel_info["rank_ratio"] = rank_diagnostic(centers, kernel)
    H = assemble_similarity(kernel, ds.X, centers)

    runs = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for p in config.p_values:
            p = float(p)
            etas, losses, best = _tune_p(H, ds.Y, config, p, pool)
            name = f"trace_p{_p_label(p)}.csv"
            emit_trace_csv(best.trace, out / name)
            runs.append(PRun(p, best.eta, etas, [float(v) for v in losses], best, name))

    Kb = assemble_similarity(GaussianKernel(baseline["sigma2"]), ds.X, centers)
    preds = {f"y_pred_p{_p_label(r.p)}": H @ r.result.alpha_final for r in runs}
    preds["y_baseline"] = Kb @ baseline["alpha"]
    _write_predictions(out / "predictions.csv", ds.X, ds.Y, preds)
    baseline_buf = io.StringIO()
    w = csv.writer(baseline_buf, lineterminator="\n")
    w.writerow(["sigma2", "loss"])
    for row in baseline["grid"]:
        w.writerow([_fmt(row["sigma2"]), _fmt(row["loss"])])
    atomic_write_text(out / "baseline_grid.csv", baseline_buf.getvalue())

    files = {
        "predictions_csv": "predictions.csv",
        "baseline_grid_csv": "baseline_grid.csv",
        "convergence_svg": "convergence.svg",
        "prediction_svg": "predictions.svg",
        "report": "report.json",
    }
    ok = all(r.result.converged_reason is not StopReason.NON_FINITE for r in runs)
    report = ExperimentReport(config, out, ds, centers, kernel_info, runs, baseline, files,
                              _metadata(), ok, H, preds["y_baseline"])
    emit_svg_plots(report, {"convergence": out / files["convergence_svg"],
                            "prediction": out / files["prediction_svg"]})
    report.metadata["wall_time_s"] = time.perf_counter() - t0
    atomic_write_text(out / "report.json", json.dumps(report.to_dict(), indent=2) + "\n")
    if not ok:
        bad = [r.p for r in runs if r.result.converged_reason is StopReason.NON_FINITE]
        raise NumericalError(f"non-finite iterates for p in {bad}")
    return report


def run_baseline(config: ExperimentConfig, output_dir=None) -> dict:
    """Baseline only: Gaussian direct solve over the sigma2 grid."""
    out = Path(output_dir if output_dir is not None else config.output_dir)
    data_ss, center_ss = _seed_streams(config.seed)
    ds = _build_dataset(config, data_ss)
    centers = select_centers(ds, config.k_centers, center_ss)
    baseline = baseline_grid_search(ds.X, ds.Y, centers, config.sigma2_grid)
    Kb = assemble_similarity(GaussianKernel(baseline["sigma2"]), ds.X, centers)
    _write_predictions(out / "baseline_predictions.csv", ds.X, ds.Y, {"y_baseline": Kb @ baseline["alpha"]})
    doc = {
        "config": config.to_dict(),
        "sigma2": baseline["sigma2"],
        "loss": baseline["loss"],
        "mse": baseline["loss"] / ds.n,
        "alpha": baseline["alpha"].tolist(),
        "grid": baseline["grid"],
        "files": {"predictions_csv": "baseline_predictions.csv"},
    }
    atomic_write_text(out / "baseline.json", json.dumps(doc, indent=2) + "\n")
    return doc


def _metadata() -> dict:
    return {
        "package_version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "backend": _backend.BACKEND,
        "rng": "numpy.random.default_rng (PCG64), SeedSequence(seed).spawn(2) -> data, centers",
    }

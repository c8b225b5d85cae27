"""Mirror-descent solvers for square loss over the p-norm RKBS.

Three modes share one loop:

* unregularized: ``beta <- beta - eta * grad``
* regularized (mirror map doubles as the regulariser): ``beta <- (1 - 2 eta lam) beta - eta * grad``
* projected: unregularized step, then Bregman projection onto a p-norm ball

with ``alpha = inverse_mirror(beta)`` after every step. ``grad`` is the dual
coefficient vector of the loss derivative: ``2 H^T (H alpha - Y)`` under the
canonical kernel, ``H alpha - Y`` under the adjoint kernel.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import _backend
from .errors import ConfigError, NumericalError
from .kernels import BivariateKernel, CenterSet, assemble_similarity
from .rkbs import (
    PROJECTION_SLACK,
    InverseVariant,
    bregman_project_ball,
    check_exponent,
    conjugate_exponent,
    lp_norm,
    mirror_forward,
    mirror_inverse,
)

__all__ = [
    "Dataset",
    "Mode",
    "Schedule",
    "KernelForm",
    "ProjectionStyle",
    "Init",
    "SolverConfig",
    "TraceRecord",
    "StopReason",
    "FitResult",
    "square_loss",
    "dual_gradient_canonical",
    "dual_gradient_adjoint",
    "mda_step",
    "theorem_eta",
    "lipschitz_bound",
    "resolve_eta",
    "fit",
    "fit_matrix",
]


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        Y = np.asarray(self.Y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise ConfigError(f"X must be a non-empty (n, d) array, got shape {X.shape}")
        if X.shape[0] != Y.shape[0]:
            raise ConfigError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ConfigError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


class Mode(str, enum.Enum):
    UNREGULARIZED = "unreg"
    REGULARIZED = "reg"
    PROJECTED = "proj"


class Schedule(str, enum.Enum):
    FIXED = "fixed"
    THEOREM = "theorem"


class KernelForm(str, enum.Enum):
    CANONICAL = "canonical"
    ADJOINT = "adjoint"


class ProjectionStyle(str, enum.Enum):
    AGILE = "agile"
    LAZY = "lazy"


class Init(str, enum.Enum):
    ZERO = "zero"
    RANDOM = "random"


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings. String values are coerced to the matching enums.

    ``eta`` is ignored under ``Schedule.THEOREM``, where the step size is
    ``(R / L) sqrt(2 (p - 1) / T)``. ``lipschitz=None`` then uses
    :func:`lipschitz_bound`.
    """

    p: float = 2.0
    eta: float = 1e-3
    iterations: int = 1000
    lam: float = 0.0
    mode: Mode = Mode.UNREGULARIZED
    radius: Optional[float] = None
    schedule: Schedule = Schedule.FIXED
    lipschitz: Optional[float] = None
    kernel_form: KernelForm = KernelForm.CANONICAL
    inverse_variant: InverseVariant = InverseVariant.EXACT
    projection_style: ProjectionStyle = ProjectionStyle.AGILE
    seed: int = 0
    init: Init = Init.ZERO
    init_scale: float = 1.0
    trace_stride: Optional[int] = None
    tol: Optional[float] = None

    def __post_init__(self):
        for name, kind in (("mode", Mode), ("schedule", Schedule), ("kernel_form", KernelForm),
                           ("inverse_variant", InverseVariant), ("projection_style", ProjectionStyle),
                           ("init", Init)):
            try:
                object.__setattr__(self, name, kind(getattr(self, name)))
            except ValueError:
                raise ConfigError(f"invalid {name}: {getattr(self, name)!r}") from None
        try:
            check_exponent(self.p, warn=False)
        except ConfigError as exc:
            raise ConfigError(str(exc)) from None
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigError("iterations must be a non-negative integer")
        object.__setattr__(self, "iterations", int(self.iterations))
        if self.schedule is Schedule.FIXED and not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.mode is Mode.PROJECTED:
            if self.radius is None or not self.radius > 0:
                raise ConfigError("projected mode needs a positive radius")
        elif self.schedule is Schedule.THEOREM:
            raise ConfigError("the theorem schedule applies to projected mode only")
        if self.trace_stride is not None and self.trace_stride < 1:
            raise ConfigError("trace_stride must be >= 1")
        if self.tol is not None and not self.tol >= 0:
            raise ConfigError("tol must be >= 0")
        if not self.init_scale > 0:
            raise ConfigError("init_scale must be positive")

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def stride(self) -> int:
        if self.trace_stride is not None:
            return int(self.trace_stride)
        return max(1, self.iterations // 1000)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


class TraceRecord(NamedTuple):
    iter: int
    loss: float
    primal_norm: float
    dual_norm: float
    grad_dual_norm: float


class StopReason(str, enum.Enum):
    MAX_ITERS = "max_iters"
    GRAD_BELOW_TOL = "grad_below_tol"
    NON_FINITE = "non_finite"


_STATUS = {0: StopReason.MAX_ITERS, 1: StopReason.GRAD_BELOW_TOL, 2: StopReason.NON_FINITE}


@dataclass(frozen=True)
class FitResult:
    alpha_final: np.ndarray
    beta_final: np.ndarray
    trace: list
    converged_reason: StopReason
    steps: int
    eta: float
    alpha_mean: Optional[np.ndarray] = None
    backend: str = field(default="", compare=False)

    @property
    def final_loss(self) -> float:
        return self.trace[-1].loss

    def trace_array(self) -> np.ndarray:
        return np.array(self.trace, dtype=float).reshape(-1, 5)


def _check_shapes(H, alpha, Y):
    H = np.asarray(H, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if H.ndim != 2 or H.shape[1] != alpha.shape[0] or H.shape[0] != Y.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape}, alpha {alpha.shape}, Y {Y.shape}")
    return H, alpha, Y


def square_loss(H, alpha, Y) -> float:
    """``sum_i ((H alpha)_i - y_i)^2``."""
    H, alpha, Y = _check_shapes(H, alpha, Y)
    with np.errstate(over="ignore", invalid="ignore"):
        r = H @ alpha - Y
        loss = float(r @ r)
    if not math.isfinite(loss):
        raise NumericalError("square loss is not finite")
    return loss


def dual_gradient_canonical(H, alpha, Y) -> np.ndarray:
    """``2 H^T (H alpha - Y)``: dual coefficients of the loss derivative."""
    H, alpha, Y = _check_shapes(H, alpha, Y)
    return 2.0 * (H.T @ (H @ alpha - Y))


def dual_gradient_adjoint(H, alpha, Y) -> np.ndarray:
    """``H alpha - Y``; only meaningful when the centers are the training inputs."""
    H, alpha, Y = _check_shapes(H, alpha, Y)
    if H.shape[0] != H.shape[1]:
        raise ValueError(f"adjoint form needs k == n, got n={H.shape[0]}, k={H.shape[1]}")
    return H @ alpha - Y


def mda_step(beta, alpha, grad_dual, config: SolverConfig):
    """One mirror-descent step; returns ``(beta_new, alpha_new)``.

    ``alpha`` is accepted for symmetry with the loop state but the new primal
    point depends only on the new dual point (and the projection).
    """
    beta = np.asarray(beta, dtype=float)
    grad_dual = np.asarray(grad_dual, dtype=float)
    lam = config.lam if config.mode is Mode.REGULARIZED else 0.0
    beta_new = (1.0 - 2.0 * config.eta * lam) * beta - config.eta * grad_dual
    alpha_new = mirror_inverse(beta_new, config.q, config.inverse_variant)
    if config.mode is Mode.PROJECTED and lp_norm(alpha_new, config.p) > config.radius * (1.0 + PROJECTION_SLACK):
        alpha_new = bregman_project_ball(alpha_new, config.radius, config.p)
        if config.projection_style is ProjectionStyle.AGILE:
            beta_new = mirror_forward(alpha_new, config.p)
    if not (np.all(np.isfinite(beta_new)) and np.all(np.isfinite(alpha_new))):
        raise NumericalError("non-finite iterate")
    return beta_new, alpha_new


def theorem_eta(R: float, L: float, mu: float, t: int) -> float:
    """Step size ``(R / L) sqrt(2 mu / t)`` balancing the O(1/sqrt(t)) bound."""
    if not (R > 0 and L > 0 and mu > 0 and t > 0):
        raise ConfigError("theorem_eta needs positive R, L, mu, t")
    return (R / L) * math.sqrt(2.0 * mu / t)


def lipschitz_bound(H, Y, p: float, radius: float) -> float:
    """Upper bound on ``||2 H^T (H alpha - Y)||_q`` over ``||alpha||_p <= radius``.

    Uses ``||v||_q <= c1 ||v||_2`` and ``||alpha||_2 <= c2 ||alpha||_p`` with
    ``c1 = k**max(0, 1/q - 1/2)``, ``c2 = k**max(0, 1/2 - 1/p)``; both are 1
    for p in (1, 2].
    """
    H = np.asarray(H, dtype=float)
    Y = np.asarray(Y, dtype=float)
    k = H.shape[1]
    q = conjugate_exponent(p)
    c1 = k ** max(0.0, 1.0 / q - 0.5)
    c2 = k ** max(0.0, 0.5 - 1.0 / p)
    smax = np.linalg.norm(H, 2)
    return 2.0 * (c1 * c2 * smax**2 * radius + lp_norm(H.T @ Y, q))


def resolve_eta(config: SolverConfig, H, Y) -> float:
    if config.schedule is Schedule.THEOREM:
        if config.iterations == 0:
            return 0.0
        L = config.lipschitz if config.lipschitz is not None else lipschitz_bound(H, Y, config.p, config.radius)
        return theorem_eta(config.radius, L, config.p - 1.0, config.iterations)
    return float(config.eta)


def _initial_state(config: SolverConfig, k: int, beta0=None):
    if beta0 is not None:
        beta = np.array(beta0, dtype=float)
        if beta.shape != (k,):
            raise ConfigError(f"beta0 must have shape ({k},)")
    elif config.init is Init.ZERO:
        beta = np.zeros(k)
    else:
        rng = np.random.default_rng(config.seed)
        beta = config.init_scale * rng.standard_normal(k)
    alpha = mirror_inverse(beta, config.q, config.inverse_variant)
    if config.mode is Mode.PROJECTED and lp_norm(alpha, config.p) > config.radius * (1.0 + PROJECTION_SLACK):
        alpha = bregman_project_ball(alpha, config.radius, config.p)
        if config.projection_style is ProjectionStyle.AGILE:
            beta = mirror_forward(alpha, config.p)
    return beta, alpha


def fit_matrix(H, Y, config: SolverConfig, beta0=None, backend=None) -> FitResult:
    """Run the solver on a precomputed similarity matrix.

    Parameters
    ----------
    H : (n, k) array_like
    Y : (n,) array_like
    config : SolverConfig
    beta0 : (k,) array_like, optional
        Warm-start dual point; overrides ``config.init``.
    backend : callable, optional
        A ``run_mda`` implementation; defaults to the one selected at import.
    """
    H = np.ascontiguousarray(H, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float).ravel()
    if H.ndim != 2 or H.shape[0] != Y.shape[0]:
        raise ConfigError(f"H {H.shape} does not match Y {Y.shape}")
    n, k = H.shape
    if config.kernel_form is KernelForm.ADJOINT and n != k:
        raise ConfigError(f"adjoint kernel form needs k == n (got n={n}, k={k})")
    if not np.all(np.isfinite(H)):
        raise NumericalError("similarity matrix has non-finite entries")
    beta, alpha = _initial_state(config, k, beta0)
    eta = resolve_eta(config, H, Y)
    run = backend or _backend.run_mda
    lam = config.lam if config.mode is Mode.REGULARIZED else 0.0
    radius = float(config.radius) if config.mode is Mode.PROJECTED else 0.0
    out_alpha, out_beta, alpha_sum, steps, status, records = run(
        H, Y, beta, alpha, float(config.p), float(eta), float(lam),
        config.iterations, config.stride, -1.0 if config.tol is None else float(config.tol),
        config.kernel_form is KernelForm.CANONICAL,
        config.inverse_variant is InverseVariant.EXACT,
        radius,
        config.projection_style is ProjectionStyle.AGILE,
    )
    trace = [TraceRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))
             for row in records]
    mean = alpha_sum / steps if steps else out_alpha.copy()
    name = "cython" if run is _backend.compiled_run_mda else ("python" if run is _backend.python_run_mda else "custom")
    return FitResult(out_alpha, out_beta, trace, _STATUS[int(status)], int(steps), float(eta), mean, name)


def fit(dataset: Dataset, centers: CenterSet, kernel: BivariateKernel, config: SolverConfig,
        beta0=None, backend=None) -> FitResult:
    """Assemble ``H_hat`` for ``dataset`` against ``centers`` and run the solver."""
    if config.kernel_form is KernelForm.ADJOINT:
        if centers.k != dataset.n or not np.array_equal(centers.points, dataset.X):
            raise ConfigError("adjoint kernel form requires the centers to be the training inputs")
    H = assemble_similarity(kernel, dataset.X, centers)
    return fit_matrix(H, dataset.Y, config, beta0=beta0, backend=backend)

"""Bivariate functions H, similarity matrices and LAB-RBF bandwidth fitting."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError, NumericalError

__all__ = [
    "CenterSet",
    "BivariateKernel",
    "GaussianKernel",
    "LabRbfKernel",
    "TableKernel",
    "assemble_similarity",
    "rank_diagnostic",
    "lab_loss_and_grad",
    "fit_lab_bandwidths",
    "canonical_kernel_dual_coeffs",
    "adjoint_kernel_eval",
    "THETA_FLOOR",
    "RANK_WARN_TOL",
]

THETA_FLOOR = 1e-8
RANK_WARN_TOL = 1e-10


def _as_points(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be an (n, d) array, got shape {X.shape}")
    return X


def _as_point(x, d: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d,):
        raise ValueError(f"point has shape {x.shape}, expected ({d},)")
    return x


class CenterSet:
    """The k fixed centers defining the basis functions ``H(., c_i)``."""

    def __init__(self, points):
        pts = _as_points(points, "centers")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ConfigError("need at least one center of positive dimension")
        if not np.all(np.isfinite(pts)):
            raise ConfigError("centers must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ConfigError("centers must be pairwise distinct")
        pts.setflags(write=False)
        self.points = pts

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def index_of(self, y) -> int:
        y = _as_point(y, self.d)
        hits = np.flatnonzero(np.all(self.points == y, axis=1))
        if hits.size == 0:
            raise KeyError(f"{y} is not a center")
        return int(hits[0])

    def __len__(self):
        return self.k

    def __repr__(self):
        return f"CenterSet(k={self.k}, d={self.d})"


class BivariateKernel:
    """Base class: ``H(x, c_j)`` evaluated against a center set.

    Subclasses implement :meth:`matrix`. :meth:`entry` defaults to evaluating a
    one-row matrix, which keeps scalar and batch evaluation on one code path.
    """

    def matrix(self, X: np.ndarray, C: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def entry(self, x, centers: CenterSet, j: int) -> float:
        x = _as_point(x, centers.d)
        return float(self.matrix(x[None, :], centers.points)[0, j])

    def __call__(self, x, y, centers: CenterSet) -> float:
        """``H(x, y)`` for a center ``y``."""
        return self.entry(x, centers, centers.index_of(y))


@dataclass(frozen=True)
class GaussianKernel(BivariateKernel):
    """``H(x, c) = exp(-||x - c||^2 / sigma2)``; symmetric."""

    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")

    def matrix(self, X, C):
        diff = X[:, None, :] - C[None, :, :]
        return np.exp(-np.sum(diff * diff, axis=-1) / self.sigma2)

    def entry(self, x, centers, j):
        x = _as_point(x, centers.d)
        diff = x - centers.points[j]
        return float(np.exp(-np.sum(diff * diff) / self.sigma2))

    def __call__(self, x, y, centers=None) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x - np.atleast_1d(np.asarray(y, dtype=float))
        return float(np.exp(-np.sum(diff * diff) / self.sigma2))


class LabRbfKernel(BivariateKernel):
    """Locally adaptive bandwidth RBF: ``H(x, c_i) = exp(-||theta_i * (x - c_i)||^2 / 2)``.

    ``theta`` is a (k, d) array of positive per-center bandwidths, so ``H`` is
    generally asymmetric: ``H(c_1, c_2)`` uses ``theta_2`` and ``H(c_2, c_1)``
    uses ``theta_1``.
    """

    def __init__(self, theta):
        theta = np.array(theta, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        if theta.ndim != 2:
            raise ConfigError(f"theta must be (k, d), got shape {theta.shape}")
        if not np.all(theta > 0) or not np.all(np.isfinite(theta)):
            raise ConfigError("bandwidths must be finite and strictly positive")
        theta.setflags(write=False)
        self.theta = theta

    @classmethod
    def ones(cls, k: int, d: int = 1, scale: float = 1.0) -> "LabRbfKernel":
        return cls(np.full((k, d), float(scale)))

    def _check(self, C):
        if C.shape != self.theta.shape:
            raise ValueError(f"theta shape {self.theta.shape} does not match centers {C.shape}")

    def matrix(self, X, C):
        self._check(C)
        scaled = self.theta[None, :, :] * (X[:, None, :] - C[None, :, :])
        return np.exp(-np.sum(scaled * scaled, axis=-1) / 2.0)

    def entry(self, x, centers, j):
        self._check(centers.points)
        x = _as_point(x, centers.d)
        scaled = self.theta[j] * (x - centers.points[j])
        return float(np.exp(-np.sum(scaled * scaled) / 2.0))

    def __repr__(self):
        return f"LabRbfKernel(theta shape={self.theta.shape})"


class TableKernel(BivariateKernel):
    """Explicit lookup ``{(x, c): H(x, c)}`` keyed by coordinate tuples; for tests."""

    def __init__(self, values: Mapping):
        self.values = {(tuple(np.atleast_1d(x).tolist()), tuple(np.atleast_1d(c).tolist())): float(v)
                       for (x, c), v in values.items()}

    @classmethod
    def from_matrix(cls, X, C, M) -> "TableKernel":
        X = _as_points(X)
        C = _as_points(C, "C")
        M = np.asarray(M, dtype=float)
        return cls({(tuple(x), tuple(c)): M[i, j] for i, x in enumerate(X) for j, c in enumerate(C)})

    def matrix(self, X, C):
        out = np.empty((X.shape[0], C.shape[0]))
        for i, x in enumerate(X):
            for j, c in enumerate(C):
                try:
                    out[i, j] = self.values[(tuple(x.tolist()), tuple(c.tolist()))]
                except KeyError:
                    raise KeyError(f"no table entry for H({x.tolist()}, {c.tolist()})") from None
        return out

    def __call__(self, x, y, centers=None) -> float:
        key = (tuple(np.atleast_1d(np.asarray(x, float)).tolist()), tuple(np.atleast_1d(np.asarray(y, float)).tolist()))
        return self.values[key]


def assemble_similarity(kernel: BivariateKernel, X, centers: CenterSet) -> np.ndarray:
    """Similarity matrix ``H_hat[i, j] = H(x_i, c_j)`` of shape (n, k)."""
    X = _as_points(X)
    if X.shape[1] != centers.d:
        raise ValueError(f"inputs have dimension {X.shape[1]}, centers have {centers.d}")
    M = kernel.matrix(X, centers.points)
    if not np.all(np.isfinite(M)):
        raise NumericalError("non-finite kernel value; check the bandwidths")
    return M


def rank_diagnostic(centers: CenterSet, kernel: BivariateKernel, warn: bool = True) -> float:
    """``sigma_min / sigma_max`` of ``[H(c_i, c_j)]``; 0 for a singular matrix.

    The basis functions must be linearly independent; a ratio below
    ``RANK_WARN_TOL`` only warns.
    """
    G = assemble_similarity(kernel, centers.points, centers)
    s = np.linalg.svd(G, compute_uv=False)
    ratio = 0.0 if s[0] == 0.0 else float(s[-1] / s[0])
    if warn and ratio < RANK_WARN_TOL:
        warnings.warn(
            f"basis functions are numerically dependent (condition ratio {ratio:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return ratio


def lab_loss_and_grad(theta, X, Y, centers: CenterSet, alpha):
    """Square loss ``sum_i (H_hat(theta) alpha - Y)_i^2`` and its gradient in theta.

    With ``u_ijl = x_il - c_jl`` and ``H_ij = exp(-sum_l theta_jl^2 u_ijl^2 / 2)``::

        dL/dtheta_jl = -2 alpha_j theta_jl sum_i r_i H_ij u_ijl^2
    """
    theta = np.asarray(theta, dtype=float)
    X = _as_points(X)
    Y = np.asarray(Y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    C = centers.points
    diff = X[:, None, :] - C[None, :, :]
    H = LabRbfKernel(theta).matrix(X, C)
    r = H @ alpha - Y
    w = r[:, None] * H
    grad = -2.0 * alpha[:, None] * theta * np.einsum("ij,ijl->jl", w, diff * diff)
    return float(r @ r), grad


def fit_lab_bandwidths(kernel: LabRbfKernel, X, Y, centers: CenterSet, alpha, steps: int = 10,
                       theta_lr: float = 1e-2, floor: float = THETA_FLOOR) -> np.ndarray:
    """Plain gradient descent on the bandwidths with ``alpha`` held fixed.

    Returns the updated (k, d) theta. Entries driven below ``floor`` are
    clamped there and a warning reports how many.
    """
    if steps < 0:
        raise ConfigError("steps must be >= 0")
    if not theta_lr > 0:
        raise ConfigError("theta_lr must be positive")
    theta = np.array(kernel.theta, dtype=float)
    clamped = 0
    for _ in range(steps):
        _, grad = lab_loss_and_grad(theta, X, Y, centers, alpha)
        theta = theta - theta_lr * grad
        low = theta < floor
        if np.any(low):
            clamped += int(np.count_nonzero(low))
            theta[low] = floor
        if not np.all(np.isfinite(theta)):
            raise NumericalError("bandwidth update produced non-finite values")
    if clamped:
        warnings.warn(f"{clamped} bandwidth entries clamped at {floor}", RuntimeWarning, stacklevel=2)
    return theta


def canonical_kernel_dual_coeffs(x, centers: CenterSet, kernel: BivariateKernel) -> np.ndarray:
    """Dual coefficients of ``K(x, .) = sum_i H(x, c_i) H(c_i, .)``, i.e. ``H(x, c_i)``.

    Under the canonical pairing, ``pairing(alpha, result) == f_alpha(x)``.
    """
    x = _as_point(x, centers.d)
    return assemble_similarity(kernel, x[None, :], centers)[0]


def adjoint_kernel_eval(x, y, centers: CenterSet, kernel: BivariateKernel) -> float:
    """``H(x, y)``: the reproducing kernel under the adjoint bilinear form."""
    return kernel(x, y, centers)


def evaluate(alpha, x, centers: CenterSet, kernel: BivariateKernel) -> float:
    """``f_alpha(x) = sum_i alpha_i H(x, c_i)``."""
    x = _as_point(x, centers.d)
    alpha = np.asarray(alpha, dtype=float)
    total = 0.0
    for j in range(centers.k):
        total += alpha[j] * kernel.entry(x, centers, j)
    return float(total)

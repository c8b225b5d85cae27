"""Finite-center p-norm RKBS: norms, pairing, duality maps and Bregman geometry.

A primal function is ``f_alpha = sum_i alpha_i H(., c_i)`` with norm ``||alpha||_p``;
a dual function is ``g_beta = sum_i beta_i H(c_i, .)`` with norm ``||beta||_q``,
``1/p + 1/q = 1``. Everything here acts on the coefficient vectors.

The mirror map is ``Phi_p(alpha) = 0.5 * ||alpha||_p**2``. Its gradient (the
duality map) is::

    beta_i = sign(alpha_i) |alpha_i|**(p-1) * ||alpha||_p**(2-p)

and the inverse is the same map at the conjugate exponent ``q``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError

__all__ = [
    "InverseVariant",
    "conjugate_exponent",
    "check_exponent",
    "lp_norm",
    "primal_norm",
    "dual_norm",
    "pairing",
    "mirror_potential",
    "mirror_forward",
    "mirror_inverse",
    "bregman_divergence",
    "bregman_project_ball",
    "descent_direction_check",
    "parallelogram_defect",
    "PrimalFunction",
    "DualFunction",
    "MirrorMap",
    "BregmanContext",
    "PROJECTION_SLACK",
]

# points with ||alpha||_p <= R (1 + PROJECTION_SLACK) count as feasible, so a
# rescaled point whose computed norm lands an ulp above R is left alone
PROJECTION_SLACK = 1e-13


class InverseVariant(str, enum.Enum):
    """How the dual-to-primal map is computed.

    EXACT is the true inverse of the duality map (exponent ``2 - q`` on the
    norm). ALG1 uses the ``||beta||_q**(q-1)`` denominator printed in the
    pseudo-code; it returns the unit p-norm direction of the exact inverse.
    """

    EXACT = "exact"
    ALG1 = "alg1"


def conjugate_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1."""
    p = float(p)
    if not p > 1.0:
        raise ConfigError(f"exponent must be > 1, got {p}")
    if p == 2.0:
        return 2.0
    return p / (p - 1.0)


def check_exponent(p: float, warn: bool = True) -> float:
    """Validate a primal exponent.

    p <= 1 is rejected (the conjugate exponent would be infinite). Values
    above 2 are accepted with a warning: the squared p-norm is no longer
    strongly convex there, so convergence guarantees are lost.
    """
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ConfigError(f"exponent must lie in (1, inf), got {p}")
    if warn and p > 2.0:
        warnings.warn(
            f"p={p} > 2: 0.5*||.||_p^2 is not strongly convex, no convergence guarantee",
            RuntimeWarning,
            stacklevel=2,
        )
    return p


def _as_vector(v, name="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"{name} has non-finite entries")
    return v


def lp_norm(v, e: float) -> float:
    """``(sum |v_i|**e)**(1/e)``, scaled by ``max|v_i|`` to avoid over/underflow."""
    v = _as_vector(v)
    m = np.max(np.abs(v)) if v.size else 0.0
    if m == 0.0:
        return 0.0
    return float(m * np.sum((np.abs(v) / m) ** e) ** (1.0 / e))


def primal_norm(alpha, p: float) -> float:
    return lp_norm(alpha, p)


def dual_norm(beta, q: float) -> float:
    return lp_norm(beta, q)


def pairing(alpha, beta) -> float:
    """Canonical action of ``g_beta`` on ``f_alpha``: ``sum_i alpha_i beta_i``."""
    alpha = _as_vector(alpha, "alpha")
    beta = _as_vector(beta, "beta")
    if alpha.shape != beta.shape:
        raise ValueError(f"length mismatch: {alpha.shape[0]} vs {beta.shape[0]}")
    return float(np.dot(alpha, beta))


def mirror_potential(alpha, p: float) -> float:
    """``Phi_p(alpha) = 0.5 * ||alpha||_p**2``."""
    return 0.5 * lp_norm(alpha, p) ** 2


def _duality_map(v: np.ndarray, e: float) -> np.ndarray:
    n = lp_norm(v, e)
    if n == 0.0:
        # continuous limit at the origin
        return np.zeros_like(v)
    # sign(v)|v|^(e-1) n^(2-e) written with |v|/n <= 1 so it cannot overflow
    return np.sign(v) * (np.abs(v) / n) ** (e - 1.0) * n


def mirror_forward(alpha, p: float) -> np.ndarray:
    """Gradient of ``0.5*||.||_p**2`` at ``alpha``; maps primal to dual coefficients."""
    p = check_exponent(p, warn=False)
    return _duality_map(_as_vector(alpha, "alpha"), p)


def mirror_inverse(beta, q: float, variant: InverseVariant | str = InverseVariant.EXACT) -> np.ndarray:
    """Map dual coefficients back to primal coefficients.

    Parameters
    ----------
    beta : array_like
        Dual coefficient vector.
    q : float
        Conjugate exponent of the primal space.
    variant : InverseVariant or str
        ``"exact"`` returns ``sign(beta)|beta|**(q-1) * ||beta||_q**(2-q)``,
        which inverts :func:`mirror_forward`. ``"alg1"`` returns
        ``sign(beta)|beta|**(q-1) / ||beta||_q**(q-1)``, always of unit p-norm.
    """
    q = check_exponent(q, warn=False)
    variant = InverseVariant(variant)
    beta = _as_vector(beta, "beta")
    if variant is InverseVariant.EXACT:
        return _duality_map(beta, q)
    n = lp_norm(beta, q)
    if n == 0.0:
        return np.zeros_like(beta)
    return np.sign(beta) * (np.abs(beta) / n) ** (q - 1.0)


def bregman_divergence(alpha, alpha_prime, p: float) -> float:
    """``Phi(a) - Phi(a') - <a - a', grad Phi(a')>`` for ``Phi = 0.5||.||_p^2``.

    Clamped at zero; negative values can only come from rounding.
    """
    alpha = _as_vector(alpha, "alpha")
    alpha_prime = _as_vector(alpha_prime, "alpha_prime")
    d = (
        mirror_potential(alpha, p)
        - mirror_potential(alpha_prime, p)
        - pairing(alpha - alpha_prime, mirror_forward(alpha_prime, p))
    )
    return max(d, 0.0)


def bregman_project_ball(alpha, radius: float, p: float) -> np.ndarray:
    """Bregman projection onto ``{||a||_p <= radius}``.

    Because ``Phi_p`` is 2-homogeneous the minimiser of ``D(., alpha)`` over the
    ball lies on the ray through ``alpha``, so the projection is a radial
    rescaling.
    """
    if not radius > 0:
        raise ConfigError(f"radius must be positive, got {radius}")
    alpha = _as_vector(alpha, "alpha")
    n = lp_norm(alpha, p)
    if n <= radius * (1.0 + PROJECTION_SLACK):
        return alpha.copy()
    return alpha * (radius / n)


def descent_direction_check(projected, pre_projection, feasible, p: float) -> float:
    """``<proj - f, grad Phi(proj) - grad Phi(pre)>``; non-positive for a valid projection."""
    projected = _as_vector(projected, "projected")
    pre_projection = _as_vector(pre_projection, "pre_projection")
    feasible = _as_vector(feasible, "feasible")
    return pairing(
        projected - feasible,
        mirror_forward(projected, p) - mirror_forward(pre_projection, p),
    )


def parallelogram_defect(alpha, alpha_prime, p: float) -> float:
    """``||a + a'||^2 + ||a - a'||^2 - 2||a||^2 - 2||a'||^2`` in the p-norm.

    Zero for every pair iff the norm comes from an inner product (p = 2). On
    ``a = (1, 1, 0, ...)``, ``a' = (1, -1, 0, ...)`` it equals ``8 - 4 * 2**(2/p)``.
    """
    alpha = _as_vector(alpha, "alpha")
    alpha_prime = _as_vector(alpha_prime, "alpha_prime")
    return (
        lp_norm(alpha + alpha_prime, p) ** 2
        + lp_norm(alpha - alpha_prime, p) ** 2
        - 2.0 * lp_norm(alpha, p) ** 2
        - 2.0 * lp_norm(alpha_prime, p) ** 2
    )


@dataclass(frozen=True)
class PrimalFunction:
    """``f_alpha = sum_i alpha_i H(., c_i)`` in the space with exponent ``p``."""

    alpha: np.ndarray
    p: float
    centers: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_vector(self.alpha, "alpha"))
        object.__setattr__(self, "p", check_exponent(self.p, warn=False))

    @property
    def norm(self) -> float:
        return lp_norm(self.alpha, self.p)

    def to_dual(self) -> "DualFunction":
        return DualFunction(mirror_forward(self.alpha, self.p), conjugate_exponent(self.p), self.centers)

    def __call__(self, x, kernel) -> float:
        from .kernels import canonical_kernel_dual_coeffs

        if self.centers is None:
            raise ValueError("PrimalFunction has no centers attached")
        return pairing(self.alpha, canonical_kernel_dual_coeffs(x, self.centers, kernel))


@dataclass(frozen=True)
class DualFunction:
    """``g_beta = sum_i beta_i H(c_i, .)`` in the dual space with exponent ``q``."""

    beta: np.ndarray
    q: float
    centers: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", _as_vector(self.beta, "beta"))
        object.__setattr__(self, "q", check_exponent(self.q, warn=False))

    @property
    def norm(self) -> float:
        return lp_norm(self.beta, self.q)

    def pairs_with(self, f: PrimalFunction, tol: float = 1e-12) -> bool:
        return abs(1.0 / f.p + 1.0 / self.q - 1.0) <= tol

    def to_primal(self, variant: InverseVariant | str = InverseVariant.EXACT) -> PrimalFunction:
        return PrimalFunction(mirror_inverse(self.beta, self.q, variant), conjugate_exponent(self.q), self.centers)


@dataclass(frozen=True)
class MirrorMap:
    """``Phi_p = 0.5 ||.||_p^2`` with a choice of inverse."""

    p: float
    inverse_variant: InverseVariant = InverseVariant.EXACT

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        object.__setattr__(self, "inverse_variant", InverseVariant(self.inverse_variant))

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def strong_convexity(self) -> float:
        """Modulus ``p - 1`` w.r.t. ``||.||_p`` (valid for p in (1, 2])."""
        return self.p - 1.0

    def potential(self, alpha) -> float:
        return mirror_potential(alpha, self.p)

    def forward(self, alpha) -> np.ndarray:
        return mirror_forward(alpha, self.p)

    def inverse(self, beta) -> np.ndarray:
        return mirror_inverse(beta, self.q, self.inverse_variant)


@dataclass(frozen=True)
class BregmanContext:
    mirror: MirrorMap
    radius: Optional[float] = None

    def __post_init__(self):
        if self.radius is not None and not self.radius > 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")

    def divergence(self, alpha, alpha_prime) -> float:
        return bregman_divergence(alpha, alpha_prime, self.mirror.p)

    def project(self, alpha) -> np.ndarray:
        if self.radius is None:
            return np.asarray(alpha, dtype=float).copy()
        return bregman_project_ball(alpha, self.radius, self.mirror.p)

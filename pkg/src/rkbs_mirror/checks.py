"""Fast self-test of the core invariants, run by ``rkbs-mirror check``."""

from __future__ import annotations

import numpy as np

from . import _backend
from .kernels import CenterSet, GaussianKernel, LabRbfKernel, canonical_kernel_dual_coeffs, evaluate
from .optimizer import SolverConfig, fit_matrix
from .rkbs import (
    bregman_divergence,
    bregman_project_ball,
    conjugate_exponent,
    descent_direction_check,
    lp_norm,
    mirror_forward,
    mirror_inverse,
    pairing,
    parallelogram_defect,
)

P_VALUES = (1.25, 1.33, 1.4, 1.5, 1.67, 2.0)


def _round_trip(rng):
    worst = 0.0
    for p in P_VALUES:
        q = conjugate_exponent(p)
        for _ in range(100):
            a = rng.standard_normal(rng.integers(1, 51))
            err = np.max(np.abs(mirror_inverse(mirror_forward(a, p), q) - a)) / (1 + np.max(np.abs(a)))
            worst = max(worst, err)
    return worst <= 1e-9, f"max scaled error {worst:.2e}"


def _duality(rng):
    worst = 0.0
    for p in P_VALUES:
        q = conjugate_exponent(p)
        for _ in range(100):
            a = rng.standard_normal(rng.integers(1, 51))
            b = mirror_forward(a, p)
            n = lp_norm(a, p)
            worst = max(worst, abs(lp_norm(b, q) - n), abs(pairing(a, b) - n * n))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def _strong_convexity(rng):
    worst = np.inf
    for p in (1.25, 1.5, 2.0):
        for _ in range(200):
            k = rng.integers(1, 20)
            a, b = rng.standard_normal(k), rng.standard_normal(k)
            worst = min(worst, bregman_divergence(a, b, p) - 0.5 * (p - 1) * lp_norm(a - b, p) ** 2)
    return worst >= -1e-12, f"min margin {worst:.2e}"


def _parallelogram(rng):
    a, b = np.array([1.0, 1.0, 0.0]), np.array([1.0, -1.0, 0.0])
    errs = [abs(parallelogram_defect(rng.standard_normal(4), rng.standard_normal(4), 2.0))]
    errs += [abs(parallelogram_defect(a, b, p) - (8 - 4 * 2 ** (2 / p))) for p in (1.33, 1.5)]
    return max(errs) <= 1e-12, f"max deviation {max(errs):.2e}"


def _projection(rng):
    worst_dir, worst_idem = -np.inf, 0.0
    for p in (1.3, 1.7):
        for _ in range(100):
            k = rng.integers(1, 10)
            a = rng.standard_normal(k) * 3
            R = 0.5 * lp_norm(a, p)
            pa = bregman_project_ball(a, R, p)
            worst_idem = max(worst_idem, float(np.max(np.abs(bregman_project_ball(pa, R, p) - pa))))
            f = rng.standard_normal(k)
            f = bregman_project_ball(f, R * rng.random(), p)
            worst_dir = max(worst_dir, descent_direction_check(pa, a, f, p))
    return worst_dir <= 1e-8 and worst_idem == 0.0, f"max direction value {worst_dir:.2e}, idempotence gap {worst_idem:.1e}"


def _reproducing(rng):
    C = CenterSet(np.sort(rng.random(6))[:, None])
    worst = 0.0
    for kern in (GaussianKernel(0.1), LabRbfKernel(rng.uniform(0.5, 3.0, (6, 1)))):
        for _ in range(50):
            a = rng.standard_normal(6)
            x = rng.random(1)
            worst = max(worst, abs(pairing(a, canonical_kernel_dual_coeffs(x, C, kern)) - evaluate(a, x, C, kern)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def _p2_reduction(rng):
    H = rng.standard_normal((10, 4))
    Y = rng.standard_normal(10)
    eta = 0.1 / np.linalg.norm(H, 2) ** 2
    res = fit_matrix(H, Y, SolverConfig(p=2.0, eta=eta, iterations=100, trace_stride=1))
    a = np.zeros(4)
    worst = 0.0
    for rec in res.trace[1:]:
        a = a - eta * 2 * H.T @ (H @ a - Y)
        r = H @ a - Y
        worst = max(worst, abs(rec.loss - r @ r))
    worst = max(worst, float(np.max(np.abs(a - res.alpha_final))))
    return worst <= 1e-10, f"max deviation {worst:.2e}"


def _backends(rng):
    impls = _backend.available_backends()
    if len(impls) < 2:
        return True, "only the python backend is available"
    H = rng.standard_normal((12, 5))
    Y = rng.standard_normal(12)
    cfg = SolverConfig(p=1.5, eta=0.05 / np.linalg.norm(H, 2) ** 2, iterations=300, trace_stride=10)
    a = fit_matrix(H, Y, cfg, backend=impls["python"]).trace_array()
    b = fit_matrix(H, Y, cfg, backend=impls["cython"]).trace_array()
    gap = float(np.max(np.abs(a - b) / (1 + np.abs(a))))
    return gap <= 1e-10, f"max relative gap {gap:.2e}"


CHECKS = {
    "mirror round trip": _round_trip,
    "duality map norm and alignment": _duality,
    "strong convexity": _strong_convexity,
    "parallelogram defect": _parallelogram,
    "Bregman projection": _projection,
    "reproducing property": _reproducing,
    "p=2 reduces to gradient descent": _p2_reduction,
    "backend agreement": _backends,
}


def run_checks(seed: int = 0) -> list:
    """Return ``[(name, passed, detail), ...]`` for every check."""
    out = []
    for name, fn in CHECKS.items():
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out

import math

import numpy as np
import pytest
from scipy.linalg import svdvals

from rkbs_mirror import (
    CenterSet,
    ConfigError,
    GaussianKernel,
    LabRbfKernel,
    NumericalError,
    TableKernel,
    adjoint_kernel_eval,
    assemble_similarity,
    canonical_kernel_dual_coeffs,
    fit_lab_bandwidths,
    lab_loss_and_grad,
    rank_diagnostic,
)
from rkbs_mirror.kernels import THETA_FLOOR


# -- CenterSet -------------------------------------------------------------------------

def test_centers_validation():
    C = CenterSet([[0.0, 1.0], [1.0, 0.0]])
    assert (C.k, C.d) == (2, 2)
    assert C.index_of([1.0, 0.0]) == 1
    with pytest.raises(KeyError):
        C.index_of([0.5, 0.5])
    with pytest.raises(ConfigError):
        CenterSet([[0.0], [0.0]])
    with pytest.raises(ConfigError):
        CenterSet(np.empty((0, 1)))
    with pytest.raises(ConfigError):
        CenterSet([[np.nan]])
    # 1-D input is read as k one-dimensional points
    assert CenterSet([0.0, 0.5, 1.0]).d == 1


# -- assembly --------------------------------------------------------------------------

def test_lab_diagonal_is_one(rng):
    X = rng.random((7, 3))
    kern = LabRbfKernel(rng.uniform(0.1, 5.0, (7, 3)))
    np.testing.assert_array_equal(np.diag(assemble_similarity(kern, X, CenterSet(X))), np.ones(7))


def test_assembly_examples():
    assert assemble_similarity(GaussianKernel(1.0), [[0.0]], CenterSet([[0.0]]))[0, 0] == 1.0
    # exp(-||2 * 1||^2 / 2) = exp(-2), from a 30-digit evaluation
    H = assemble_similarity(LabRbfKernel([[2.0]]), [[1.0]], CenterSet([[0.0]]))
    assert H[0, 0] == pytest.approx(0.135335283236612691894, rel=1e-15)


def test_assembly_errors():
    with pytest.raises(ValueError, match="dimension"):
        assemble_similarity(GaussianKernel(1.0), np.zeros((3, 2)), CenterSet([[0.0]]))
    with pytest.raises(NumericalError):
        assemble_similarity(TableKernel({((0.0,), (0.0,)): np.inf}), [[0.0]], CenterSet([[0.0]]))
    with pytest.raises(ConfigError):
        LabRbfKernel([[1.0], [0.0]])
    with pytest.raises(ConfigError):
        GaussianKernel(0.0)


@pytest.mark.parametrize("kind", ["gaussian", "lab"])
def test_spot_check_bit_exact(rng, kind):
    X = rng.random((30, 2))
    C = CenterSet(rng.random((8, 2)))
    kern = GaussianKernel(0.3) if kind == "gaussian" else LabRbfKernel(rng.uniform(0.5, 4.0, (8, 2)))
    H = assemble_similarity(kern, X, C)
    for _ in range(10):
        i, j = rng.integers(30), rng.integers(8)
        d = X[i] - C.points[j]
        if kind == "gaussian":
            expected = np.exp(-(d[0] * d[0] + d[1] * d[1]) / 0.3)
        else:
            t = kern.theta[j]
            expected = np.exp(-((t[0] * d[0]) ** 2 + (t[1] * d[1]) ** 2) / 2.0)
        assert H[i, j] == expected


def test_gaussian_symmetric_lab_asymmetric():
    C = CenterSet([[0.0], [0.7]])
    g = GaussianKernel(0.5)
    assert adjoint_kernel_eval([0.0], [0.7], C, g) == adjoint_kernel_eval([0.7], [0.0], C, g)
    lab = LabRbfKernel([[1.0], [3.0]])
    assert adjoint_kernel_eval([0.0], [0.0], C, lab) == 1.0
    h12 = adjoint_kernel_eval([0.0], [0.7], C, lab)  # uses theta_2 = 3
    h21 = adjoint_kernel_eval([0.7], [0.0], C, lab)  # uses theta_1 = 1
    assert h12 == pytest.approx(math.exp(-(3 * 0.7) ** 2 / 2), rel=1e-15)
    assert h21 == pytest.approx(math.exp(-(0.7) ** 2 / 2), rel=1e-15)
    assert h12 != h21


def test_table_kernel():
    X = np.array([[0.0], [1.0]])
    M = np.array([[0.25, 0.5], [0.75, 1.0]])
    kern = TableKernel.from_matrix(X, X, M)
    np.testing.assert_array_equal(assemble_similarity(kern, X, CenterSet(X)), M)
    with pytest.raises(KeyError):
        assemble_similarity(kern, [[2.0]], CenterSet(X))


def test_canonical_coeffs():
    C = CenterSet([[0.0], [1.0]])
    lab = LabRbfKernel([[2.0], [1.0]])
    assert canonical_kernel_dual_coeffs([1.0], C, lab)[1] == 1.0
    beta = canonical_kernel_dual_coeffs([1.0], CenterSet([[0.0]]), GaussianKernel(1.0))
    np.testing.assert_allclose(beta, [math.exp(-1.0)], rtol=1e-15)


# -- rank diagnostic -----------------------------------------------------------------------

def test_rank_single_center():
    assert rank_diagnostic(CenterSet([[0.3]]), GaussianKernel(1.0)) == 1.0


def test_rank_matches_svd_oracle():
    C = CenterSet([[0.0], [3.0]])
    kern = GaussianKernel(1.0)
    G = np.array([[1.0, math.exp(-9.0)], [math.exp(-9.0), 1.0]])
    s = svdvals(G)
    ratio = rank_diagnostic(C, kern)
    assert ratio == pytest.approx(s[-1] / s[0], rel=1e-12)
    assert ratio > 1e-6


def test_rank_scale_free(rng):
    pts = rng.random((5, 1))
    C = CenterSet(pts)
    G = assemble_similarity(GaussianKernel(0.2), pts, C)
    r1 = rank_diagnostic(C, TableKernel.from_matrix(pts, pts, G))
    r2 = rank_diagnostic(C, TableKernel.from_matrix(pts, pts, 2 * G))
    assert r1 == pytest.approx(r2, abs=1e-12)


def test_rank_warns_when_dependent():
    C = CenterSet([[0.0], [1e-9]])
    with pytest.warns(RuntimeWarning, match="dependent"):
        rank_diagnostic(C, GaussianKernel(1.0))


# -- bandwidth fitting ---------------------------------------------------------------------

def _fd_theta_grad(theta, X, Y, C, alpha, h=1e-6):
    g = np.empty_like(theta)
    for idx in np.ndindex(theta.shape):
        tp, tm = theta.copy(), theta.copy()
        tp[idx] += h
        tm[idx] -= h
        g[idx] = (lab_loss_and_grad(tp, X, Y, C, alpha)[0] - lab_loss_and_grad(tm, X, Y, C, alpha)[0]) / (2 * h)
    return g


def test_bandwidth_gradient_one_center_one_point():
    X, Y, C, alpha = np.array([[0.4]]), np.array([0.9]), CenterSet([[0.0]]), np.array([1.3])
    theta = np.array([[1.7]])
    _, g = lab_loss_and_grad(theta, X, Y, C, alpha)
    # d/dtheta (alpha e^{-theta^2 u^2/2} - y)^2 = -2 r alpha theta u^2 e^{-theta^2 u^2/2}
    h = math.exp(-(1.7 * 0.4) ** 2 / 2)
    r = 1.3 * h - 0.9
    assert g[0, 0] == pytest.approx(-2 * r * 1.3 * 1.7 * 0.16 * h, rel=1e-12)
    assert g[0, 0] == pytest.approx(_fd_theta_grad(theta, X, Y, C, alpha)[0, 0], rel=1e-6)


def test_bandwidth_gradient_random(rng):
    for _ in range(20):
        n, k, d = rng.integers(1, 6), rng.integers(1, 6), rng.integers(1, 3)
        X = rng.random((n, d))
        C = CenterSet(rng.random((k, d)))
        Y, alpha = rng.standard_normal(n), rng.standard_normal(k)
        theta = rng.uniform(0.5, 3.0, (k, d))
        _, g = lab_loss_and_grad(theta, X, Y, C, alpha)
        fd = _fd_theta_grad(theta, X, Y, C, alpha)
        assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


def test_bandwidth_fixed_points(rng):
    X = rng.random((4, 1))
    C = CenterSet(X[:2])
    kern = LabRbfKernel([[1.5], [0.7]])
    alpha = np.array([0.3, -0.2])
    np.testing.assert_array_equal(fit_lab_bandwidths(kern, X, rng.standard_normal(4), C, alpha, steps=0), kern.theta)
    Y = assemble_similarity(kern, X, C) @ alpha  # zero residual
    np.testing.assert_array_equal(fit_lab_bandwidths(kern, X, Y, C, alpha, steps=5), kern.theta)


def test_bandwidth_descent_decreases_loss(rng):
    X = np.sort(rng.random(20))[:, None]
    Y = (X[:, 0] > 0.5).astype(float)
    C = CenterSet(X[::4])
    kern = LabRbfKernel.ones(5, 1, 3.0)
    alpha = np.linalg.lstsq(assemble_similarity(kern, X, C), Y, rcond=None)[0]
    theta = fit_lab_bandwidths(kern, X, Y, C, alpha, steps=10, theta_lr=1e-3)
    assert lab_loss_and_grad(theta, X, Y, C, alpha)[0] < lab_loss_and_grad(kern.theta, X, Y, C, alpha)[0]


def test_bandwidth_clamped_at_floor():
    X, Y, C = np.array([[1.0]]), np.array([5.0]), CenterSet([[0.0]])
    kern = LabRbfKernel([[1.0]])
    with pytest.warns(RuntimeWarning, match="clamped"):
        theta = fit_lab_bandwidths(kern, X, Y, C, np.array([1.0]), steps=3, theta_lr=100.0)
    assert theta[0, 0] == THETA_FLOOR


def test_bandwidth_argument_checks():
    kern = LabRbfKernel([[1.0]])
    with pytest.raises(ConfigError):
        fit_lab_bandwidths(kern, [[0.0]], [0.0], CenterSet([[0.0]]), [1.0], steps=-1)
    with pytest.raises(ConfigError):
        fit_lab_bandwidths(kern, [[0.0]], [0.0], CenterSet([[0.0]]), [1.0], theta_lr=0.0)

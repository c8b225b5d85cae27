"""Pure-numpy mirror-descent loop; fallback for the compiled ``_mda_core``.

Both implementations share the signature and return layout of :func:`run_mda`.
"""

import numpy as np

STATUS_MAX_ITERS = 0
STATUS_GRAD_TOL = 1
STATUS_NON_FINITE = 2
PROJECTION_SLACK = 1e-13  # same as rkbs.PROJECTION_SLACK


def _norm(v, e):
    m = np.max(np.abs(v))
    if m == 0.0:
        return 0.0
    return m * np.sum((np.abs(v) / m) ** e) ** (1.0 / e)


def _dmap(v, e):
    n = _norm(v, e)
    if n == 0.0:
        return np.zeros_like(v)
    return np.sign(v) * (np.abs(v) / n) ** (e - 1.0) * n


def _dmap_alg1(v, e):
    n = _norm(v, e)
    if n == 0.0:
        return np.zeros_like(v)
    return np.sign(v) * (np.abs(v) / n) ** (e - 1.0)


def run_mda(H, Y, beta0, alpha0, p, eta, lam, iterations, stride, tol,
            canonical, exact, radius, agile):
    """Run ``iterations`` mirror-descent steps on the square loss.

    Parameters
    ----------
    H : (n, k) ndarray
        Similarity matrix.
    Y : (n,) ndarray
        Targets.
    beta0, alpha0 : (k,) ndarray
        Initial dual and primal coefficients.
    p, eta, lam : float
        Primal exponent, step size, regularisation (0 disables).
    iterations, stride : int
        Step budget and trace-recording stride.
    tol : float
        Stop once the dual step direction has q-norm <= tol; negative disables.
    canonical : bool
        Canonical-kernel gradient ``2 H^T r`` if True, adjoint ``r`` otherwise.
    exact : bool
        Exact inverse mirror map if True, the unit-normalised variant otherwise.
    radius : float
        p-norm ball radius; <= 0 means unconstrained.
    agile : bool
        After projecting, reset the dual iterate to the image of the projected point.

    Returns
    -------
    alpha, beta, alpha_sum : ndarray
        Final iterates and the sum of post-step primal iterates.
    steps : int
        Number of completed steps.
    status : int
        0 budget exhausted, 1 gradient tolerance reached, 2 a step produced a
        non-finite iterate, loss or gradient (that step is discarded).
    records : (m, 5) ndarray
        Rows of ``iter, loss, ||alpha||_p, ||beta||_q, ||H^T r||_q``.
    """
    # divergence is detected and reported through the status code
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(H, Y, beta0, alpha0, p, eta, lam, iterations, stride, tol,
                    canonical, exact, radius, agile)


def _run(H, Y, beta0, alpha0, p, eta, lam, iterations, stride, tol,
         canonical, exact, radius, agile):
    H = np.ascontiguousarray(H, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    alpha = np.array(alpha0, dtype=float)
    beta = np.array(beta0, dtype=float)
    q = 2.0 if p == 2.0 else p / (p - 1.0)
    inverse = _dmap if exact else _dmap_alg1
    shrink = 1.0 - 2.0 * eta * lam
    alpha_sum = np.zeros_like(alpha)
    records = []

    # residual, loss and H^T r of the current iterate; a candidate step is
    # accepted only if all of them are finite, so every record is finite
    r = H @ alpha - Y
    g = H.T @ r
    loss = r @ r

    def record(t):
        records.append((t, loss, _norm(alpha, p), _norm(beta, q), _norm(g, q)))

    record(0)
    status = STATUS_MAX_ITERS
    steps = 0
    for t in range(1, iterations + 1):
        direction = 2.0 * g if canonical else r
        if tol >= 0.0:
            eff = direction + 2.0 * lam * beta if lam != 0.0 else direction
            if _norm(eff, q) <= tol:
                status = STATUS_GRAD_TOL
                break
        beta_new = shrink * beta - eta * direction
        alpha_new = inverse(beta_new, q)
        if radius > 0.0:
            n = _norm(alpha_new, p)
            if n > radius * (1.0 + PROJECTION_SLACK):
                alpha_new = alpha_new * (radius / n)
                if agile:
                    beta_new = _dmap(alpha_new, p)
        r_new = H @ alpha_new - Y
        g_new = H.T @ r_new
        loss_new = r_new @ r_new
        if not (np.isfinite(loss_new) and np.all(np.isfinite(g_new))
                and np.all(np.isfinite(alpha_new)) and np.all(np.isfinite(beta_new))):
            status = STATUS_NON_FINITE
            break
        alpha, beta, r, g, loss = alpha_new, beta_new, r_new, g_new, loss_new
        alpha_sum += alpha
        steps = t
        if t % stride == 0 and t != iterations:
            record(t)
    if records[-1][0] != steps:
        record(steps)
    return alpha, beta, alpha_sum, steps, status, np.array(records, dtype=float)

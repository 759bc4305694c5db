"""Independent oracle routines used by the test suite.

Everything in this file is deliberately written *without* calling the package
code it is used to check.  The eigenvalue oracle goes through the
characteristic polynomial, the regularized-solution oracle through plain batch
gradient descent, the noise-covariance oracle through brute-force sampling.
Keep it that way: the moment an oracle shares a code path with the production
routine, the corresponding test stops being evidence.
"""

from __future__ import annotations

import numpy as np


def charpoly_coefficients(mat: np.ndarray) -> np.ndarray:
    """Coefficients of det(xI - mat) via the Faddeev-LeVerrier recursion.

    Returns c of length n+1 with the convention
    det(xI - mat) = c[0]*x^n + c[1]*x^(n-1) + ... + c[n],  c[0] = 1.
    Pure matrix arithmetic; no eigenvalue routine involved.
    """
    n = mat.shape[0]
    c = np.zeros(n + 1)
    c[0] = 1.0
    mk = np.zeros_like(mat)
    for k in range(1, n + 1):
        mk = mat @ mk + c[k - 1] * np.eye(n)
        c[k] = -np.trace(mat @ mk) / k
    return c


def _polyval(c: np.ndarray, x: float) -> float:
    acc = 0.0
    for ck in c:
        acc = acc * x + ck
    return acc


def charpoly_eigenvalues(mat: np.ndarray, *, samples: int = 40001) -> np.ndarray:
    """All eigenvalues of a small symmetric PSD matrix by root bracketing.

    Works by evaluating the characteristic polynomial on a dense grid over the
    Gershgorin interval and bisecting every sign change.  Intended for the
    n <= 4 graph Laplacians used as eigensolver cross-checks; assumes simple
    roots apart from the structural zero, which is deflated exactly.
    """
    n = mat.shape[0]
    if n == 1:
        return np.array([float(mat[0, 0])])
    c = charpoly_coefficients(mat)
    # Laplacians are singular by construction: deflate the exact zero root so
    # bracketing never has to straddle a tangency at the origin.
    deflate_zero = abs(c[-1]) < 1e-9 * max(1.0, np.abs(c).max())
    if deflate_zero:
        c = c[:-1]
    hi = float(np.max(np.sum(np.abs(mat), axis=1))) + 1.0
    xs = np.linspace(-1e-6, hi, samples)
    vals = np.array([_polyval(c, x) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(xs[i])
            continue
        if a * b < 0.0:
            lo_x, hi_x = xs[i], xs[i + 1]
            for _ in range(200):
                mid = 0.5 * (lo_x + hi_x)
                fm = _polyval(c, mid)
                if fm == 0.0:
                    break
                if fm * _polyval(c, lo_x) < 0.0:
                    hi_x = mid
                else:
                    lo_x = mid
            roots.append(0.5 * (lo_x + hi_x))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    if deflate_zero:
        roots.append(0.0)
    out = np.sort(np.array(roots))
    return out


def batch_gd_minimize(
    covs: np.ndarray,
    targets: np.ndarray,
    laplacian: np.ndarray,
    eta: float,
    *,
    tol: float = 1e-12,
    max_iters: int = 2_000_000,
) -> np.ndarray:
    """Minimize sum_k 1/2 (w_k-w0_k)' R_k (w_k-w0_k) + eta/2 * smoothness.

    Plain full-gradient descent with a Gershgorin-safe constant step, run until
    the gradient norm falls below tol * (1 + initial gradient norm).  This is
    the reference the closed-form solver is judged against, so it must not use
    any linear solve.

    covs: (N, M, M) per-agent SPD matrices; targets: (N, M); laplacian: (N, N).
    Returns the minimizer as an (N, M) array.
    """
    n, m = targets.shape
    lip_local = max(float(np.max(np.sum(np.abs(covs[k]), axis=1))) for k in range(n))
    lip_lap = float(np.max(np.sum(np.abs(laplacian), axis=1)))
    step = 1.0 / (lip_local + eta * lip_lap + 1e-12)

    w = np.zeros((n, m))
    diff = w - targets
    grad = np.einsum("kij,kj->ki", covs, diff) + eta * (laplacian @ w)
    g0 = np.linalg.norm(grad)
    threshold = tol * (1.0 + g0)
    for _ in range(max_iters):
        w = w - step * grad
        diff = w - targets
        grad = np.einsum("kij,kj->ki", covs, diff) + eta * (laplacian @ w)
        if np.linalg.norm(grad) <= threshold:
            break
    return w


def empirical_noise_covariance(
    cov: np.ndarray,
    target: np.ndarray,
    point: np.ndarray,
    noise_var: float,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample covariance of the gradient noise at a fixed evaluation point.

    Draws regressors u ~ N(0, cov) and scalar noise v ~ N(0, noise_var),
    forms the stochastic gradient -u'(d - u.w) with d = u.target + v, subtracts
    the true gradient cov(point - target), and returns the (mean-removed)
    sample covariance of the difference.
    """
    m = cov.shape[0]
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n_samples, m))
    u = z @ chol.T
    v = np.sqrt(noise_var) * rng.standard_normal(n_samples)
    err = u @ (target - point) + v  # = d - u.point
    stoch = -u * err[:, None]
    true_grad = cov @ (point - target)
    s = stoch - true_grad[None, :]
    s = s - s.mean(axis=0)
    return (s.T @ s) / (n_samples - 1)


def dense_quadratic_smoothness(blocks: np.ndarray, laplacian: np.ndarray) -> float:
    """Smoothness via the explicit dense quadratic form W' (L kron I) W."""
    n, m = blocks.shape
    big = np.kron(laplacian, np.eye(m))
    w = blocks.reshape(-1)
    return float(w @ big @ w)


def make_random_spd(rng: np.random.Generator, m: int, eig_range=(0.5, 2.0)) -> np.ndarray:
    """Random SPD matrix with eigenvalues drawn uniformly from eig_range."""
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    eigs = rng.uniform(*eig_range, size=m)
    return q @ np.diag(eigs) @ q.T


def random_connected_adjacency(
    rng: np.random.Generator,
    n: int,
    *,
    extra_edge_prob: float = 0.3,
    weight_range=(0.05, 1.0),
) -> np.ndarray:
    """Random symmetric weighted adjacency, connected by construction.

    Builds a random spanning tree (guaranteeing connectivity without any
    spectral test) and sprinkles extra edges on top.
    """
    adj = np.zeros((n, n))
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = order[i], order[rng.integers(0, i)]
        w = rng.uniform(*weight_range)
        adj[a, b] = adj[b, a] = w
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i, j] == 0.0 and rng.random() < extra_edge_prob:
                w = rng.uniform(*weight_range)
                adj[i, j] = adj[j, i] = w
    return adj

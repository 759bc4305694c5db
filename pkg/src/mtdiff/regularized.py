"""Closed-form solutions of the smoothness-regularized network problem.

The network cost is sum_k J_k(w_k) + (eta/2) * smoothness(W).  For the
built-in quadratic costs the minimizer solves the SPD linear system
(H + eta * (L kron I)) W = H W0 with H = blockdiag{R_uk}, which also yields
the limiting consensus solution (eta -> infinity), the per-frequency low-pass
view for uniform covariance profiles, and the steady-state offset that the
adaptive recursion carries at finite step-size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUniformProfile, SingularSystem, UnstableConfiguration
from .graphs import Graph, StackedSignal, gft
from .tasks import TaskEnsemble


@dataclass(frozen=True, eq=False)
class RegularizedSolution:
    """Minimizer of the regularized network cost at one penalty strength.

    mismatch_sq is the raw squared distance ||W0_eta - W0||^2 (no 1/N);
    spectral_blocks[m] is the graph-frequency content of the solution.
    """

    eta: float
    solution: StackedSignal
    mismatch_sq: float
    spectral_blocks: np.ndarray


@dataclass(frozen=True, eq=False)
class BiasReport:
    """Steady-state mean offset of the adaptive recursion from W0_eta."""

    mu: float
    eta: float
    bias_vector: np.ndarray
    bias_sq_norm: float


def _stacked_hessian(ensemble: TaskEnsemble, at: np.ndarray | None = None) -> np.ndarray:
    """Block-diagonal curvature blockdiag{H_k} evaluated via the per-node
    hessian-at-point interface (point-independent for quadratic costs)."""
    n, m = ensemble.n_agents, ensemble.dim
    big = np.zeros((n * m, n * m))
    for k in range(n):
        point = None if at is None else at[k]
        big[k * m : (k + 1) * m, k * m : (k + 1) * m] = ensemble.hessian(k, point)
    return big


def _stacked_laplacian(g: Graph, m: int) -> np.ndarray:
    return np.kron(g.laplacian, np.eye(m))


def _spd_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve an SPD system, certifying with Cholesky and falling back to a
    symmetric eigendecomposition if the factorization fails."""
    try:
        np.linalg.cholesky(mat)
        return np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
        if np.any(vals <= 1e-14 * max(1.0, float(vals.max()))):
            raise SingularSystem(
                f"system matrix is numerically singular (min eig {vals.min():.3e})"
            )
        return vecs @ ((vecs.T @ rhs) / vals)


def solve_regularized(ensemble: TaskEnsemble, g: Graph, eta: float) -> RegularizedSolution:
    """Minimize the regularized network cost at penalty strength eta >= 0.

    eta = 0 returns the per-node targets themselves; as eta grows every block
    is pulled toward the common consensus solution.
    """
    if eta < 0.0:
        raise ValueError("eta must be nonnegative")
    n, m = ensemble.n_agents, ensemble.dim
    targets = ensemble.targets.values
    if eta == 0.0:
        sol = StackedSignal(n, m, targets)
    else:
        hess = _stacked_hessian(ensemble)
        mat = hess + eta * _stacked_laplacian(g, m)
        w = _spd_solve(mat, hess @ targets)
        sol = StackedSignal(n, m, w)
    mismatch = sol.values - targets
    return RegularizedSolution(
        eta=float(eta),
        solution=sol,
        mismatch_sq=float(mismatch @ mismatch),
        spectral_blocks=gft(sol, g).blocks.copy(),
    )


def pareto_solution(ensemble: TaskEnsemble) -> np.ndarray:
    """Common vector minimizing the aggregate cost sum_k J_k(w).

    For quadratic costs this is the covariance-weighted mean of the targets,
    and it is the limit every block of the regularized solution approaches as
    the penalty grows without bound.
    """
    total = ensemble.regressor_cov.sum(axis=0)
    rhs = np.einsum(
        "kij,kj->i", ensemble.regressor_cov, ensemble.targets.blocks
    )
    return _spd_solve(total, rhs)


def spectral_filter_solution(
    ensemble: TaskEnsemble, g: Graph, eta: float
) -> np.ndarray:
    """Per-frequency form of the regularized solution for uniform profiles.

    With a common regressor covariance R_u the problem decouples across graph
    frequencies: block m of the solution's transform is
    (eta * lambda_m I + R_u)^{-1} R_u applied to the target's block m — a
    low-pass response in the graph frequency lambda_m.  Returns the (N, M)
    array of filtered blocks.
    """
    if not ensemble.is_uniform:
        raise NonUniformProfile(
            "per-frequency filtering requires a common regressor covariance"
        )
    r_u = ensemble.regressor_cov[0]
    m = ensemble.dim
    target_bar = gft(ensemble.targets, g).blocks
    out = np.empty_like(target_bar)
    for idx, lam in enumerate(g.eigenvalues):
        out[idx] = np.linalg.solve(eta * lam * np.eye(m) + r_u, r_u @ target_bar[idx])
    return out


def _combine_matrix(g: Graph, m: int, mu: float, eta: float) -> np.ndarray:
    return np.eye(g.n_agents * m) - mu * eta * _stacked_laplacian(g, m)


def long_term_bias(
    ensemble: TaskEnsemble, g: Graph, mu: float, eta: float
) -> BiasReport:
    """Steady-state mean offset E[W0_eta - W_inf] of the adaptive recursion.

    Solves (I - B_eta) x = mu^2 eta^2 (L kron I)^2 W0_eta with
    B_eta = (I - mu*eta*L kron I)(I - mu*H_eta), i.e. the fixed point of the
    noise-free error recursion.  The system is solved, never inverted.

    Raises UnstableConfiguration when any step-size condition fails, naming
    the violated bounds.
    """
    # Imported here to avoid a cycle: the engine needs this module's solver.
    from .engine import check_stability

    verdict = check_stability(ensemble, g, mu, eta)
    if not verdict.ok:
        raise UnstableConfiguration(
            "unstable (mu, eta): " + "; ".join(verdict.failed_messages()),
            failed=tuple(c.name for c in verdict.conditions if not c.ok),
        )
    n, m = ensemble.n_agents, ensemble.dim
    reg = solve_regularized(ensemble, g, eta)
    if eta == 0.0:
        bias = np.zeros(n * m)
        return BiasReport(mu=float(mu), eta=0.0, bias_vector=bias, bias_sq_norm=0.0)
    lap = _stacked_laplacian(g, m)
    hess = _stacked_hessian(ensemble, at=reg.solution.blocks)
    b_eta = _combine_matrix(g, m, mu, eta) @ (np.eye(n * m) - mu * hess)
    rhs = (mu * eta) ** 2 * (lap @ (lap @ reg.solution.values))
    bias = np.linalg.solve(np.eye(n * m) - b_eta, rhs)
    return BiasReport(
        mu=float(mu),
        eta=float(eta),
        bias_vector=bias,
        bias_sq_norm=float(bias @ bias),
    )

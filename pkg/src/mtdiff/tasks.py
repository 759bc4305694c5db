"""Per-node least-mean-squares learning tasks and streaming data generation.

Each node k estimates its own target vector w0_k from scalar observations
d = u . w0_k + v, where the row regressor u is zero-mean Gaussian with
covariance R_uk and v is independent zero-mean Gaussian measurement noise.
The ensemble also synthesizes families of targets whose variation across the
graph is controlled in the graph-frequency domain, which is what makes
cooperation between neighbors worthwhile in the first place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MtdiffError
from .graphs import Graph, StackedSignal


@dataclass(frozen=True, eq=False)
class TaskEnsemble:
    """Immutable bundle of N regression tasks of common dimension M.

    regressor_cov has shape (N, M, M) with SPD slices; noise_var holds the
    per-node observation-noise variances.  Cholesky factors are cached at
    construction both to validate positive definiteness and to make sampling
    cheap.
    """

    targets: StackedSignal
    regressor_cov: np.ndarray
    noise_var: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        covs = np.asarray(self.regressor_cov, dtype=float)
        nv = np.asarray(self.noise_var, dtype=float).reshape(-1)
        n, m = self.targets.n_agents, self.targets.block_dim
        if covs.shape != (n, m, m):
            raise DimensionMismatch(
                f"regressor_cov must have shape {(n, m, m)}, got {covs.shape}"
            )
        if nv.shape != (n,):
            raise DimensionMismatch(f"noise_var must have {n} entries, got {nv.shape}")
        if np.any(nv <= 0.0):
            raise MtdiffError("every noise variance must be positive")
        sym_err = float(np.max(np.abs(covs - covs.transpose(0, 2, 1))))
        if sym_err > 1e-10:
            raise MtdiffError(f"regressor covariance asymmetry {sym_err:.3e}")
        covs = 0.5 * (covs + covs.transpose(0, 2, 1))
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise MtdiffError("regressor covariances must be positive definite") from exc
        for arr in (covs, nv, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "regressor_cov", covs)
        object.__setattr__(self, "noise_var", nv)
        object.__setattr__(self, "_chol", chol)

    @property
    def n_agents(self) -> int:
        return self.targets.n_agents

    @property
    def dim(self) -> int:
        return self.targets.block_dim

    @property
    def is_uniform(self) -> bool:
        """True when every node shares the same regressor covariance."""
        return bool(np.all(self.regressor_cov == self.regressor_cov[0]))

    def hessian(self, agent: int, w: np.ndarray | None = None) -> np.ndarray:
        """Cost curvature at a point.

        For the built-in quadratic cost this is R_uk regardless of w; the
        point argument exists so non-quadratic costs can slot in later without
        changing any caller.
        """
        return self.regressor_cov[agent]

    def true_gradient(self, agent: int, w: np.ndarray) -> np.ndarray:
        """Exact cost gradient R_uk (w - w0_k)."""
        return self.regressor_cov[agent] @ (np.asarray(w, float) - self.targets.block(agent))


@dataclass(frozen=True)
class DataSample:
    """One streaming observation for one node."""

    agent: int
    regressor: np.ndarray
    observation: float


def make_smooth_target(g: Graph, tau: np.ndarray, dim: int) -> StackedSignal:
    """Synthesize targets whose graph-frequency content decays like exp(-tau_j * lambda_m).

    Component j of frequency block m is exp(-tau[j] * lambda_m) / sqrt(M), so
    tau = 0 gives unit-norm content at every frequency (an all-pass family)
    while large tau concentrates energy at the low-frequency end, i.e. targets
    that vary slowly across the graph.
    """
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if tau.size != dim:
        raise DimensionMismatch(f"tau must have {dim} entries, got {tau.size}")
    if np.any(tau < 0.0):
        raise MtdiffError("tau entries must be nonnegative")
    lam = g.eigenvalues[:, None]  # (N, 1)
    spectral = np.exp(-lam * tau[None, :]) / np.sqrt(dim)  # (N, M)
    return StackedSignal.from_blocks(g.eigenvectors @ spectral)


def uniform_profile(
    targets: StackedSignal,
    *,
    sigma_u_sq: float = 1.0,
    sigma_v_sq: float = 0.1,
) -> TaskEnsemble:
    """Every node gets R_u = sigma_u_sq * I and the same noise variance."""
    n, m = targets.n_agents, targets.block_dim
    covs = np.broadcast_to(sigma_u_sq * np.eye(m), (n, m, m)).copy()
    return TaskEnsemble(targets, covs, np.full(n, float(sigma_v_sq)))


def scalar_profile(
    targets: StackedSignal,
    sigma_u_sq: np.ndarray,
    sigma_v_sq: np.ndarray,
) -> TaskEnsemble:
    """Per-node isotropic covariances R_uk = sigma_u_sq[k] * I."""
    n, m = targets.n_agents, targets.block_dim
    su = np.asarray(sigma_u_sq, dtype=float).reshape(-1)
    if su.size != n:
        raise DimensionMismatch(f"sigma_u_sq must have {n} entries, got {su.size}")
    covs = su[:, None, None] * np.eye(m)[None, :, :]
    return TaskEnsemble(targets, covs, np.asarray(sigma_v_sq, dtype=float))


def varying_profile(
    targets: StackedSignal,
    *,
    seed: int,
    sigma_u_sq_range: tuple[float, float] = (0.8, 1.2),
    sigma_v_sq_range: tuple[float, float] = (0.05, 0.15),
) -> TaskEnsemble:
    """Seeded heterogeneous scalar profile.

    Per-node regressor powers and noise variances are drawn uniformly from the
    given ranges.  This is a documented stand-in for heterogeneous hardware:
    the reference experiment publishes its per-node variances only as a plot,
    so the exact values are not reproducible and we settle for "same flavor,
    fixed seed".
    """
    rng = np.random.default_rng(seed)
    n = targets.n_agents
    su = rng.uniform(*sigma_u_sq_range, size=n)
    sv = rng.uniform(*sigma_v_sq_range, size=n)
    return scalar_profile(targets, su, sv)


def sample(ensemble: TaskEnsemble, agent: int, rng: np.random.Generator) -> DataSample:
    """Draw one observation for a node: u ~ N(0, R_uk), d = u.w0_k + v.

    Consumes exactly M+1 standard normals from `rng` (M for the regressor,
    then one for the noise), matching the stream layout the simulation engine
    uses, so a scalar replay of an engine stream sees identical data.
    """
    m = ensemble.dim
    z = rng.standard_normal(m + 1)
    u = ensemble._chol[agent] @ z[:m]
    v = np.sqrt(ensemble.noise_var[agent]) * z[m]
    d = float(u @ ensemble.targets.block(agent) + v)
    return DataSample(agent=agent, regressor=u, observation=d)


def stochastic_gradient(
    ensemble: TaskEnsemble, agent: int, w: np.ndarray, s: DataSample
) -> np.ndarray:
    """Instantaneous gradient estimate -u'(d - u.w) for the quadratic cost.

    Averaged over draws it equals the true gradient R_uk (w - w0_k); the
    difference is the zero-mean gradient noise whose covariance the theory
    module predicts in closed form.
    """
    if s.agent != agent:
        raise MtdiffError(f"sample belongs to node {s.agent}, not {agent}")
    w = np.asarray(w, dtype=float)
    if w.shape != (ensemble.dim,):
        raise DimensionMismatch(f"w must have shape ({ensemble.dim},), got {w.shape}")
    return -s.regressor * (s.observation - float(s.regressor @ w))

"""Multitask diffusion adaptation over networks.

Simulation engine, closed-form steady-state theory, and experiment tooling
for diffusion LMS with a graph-Laplacian smoothness penalty: N nodes each
estimate their own regression vector while a penalty of strength eta pulls
neighboring estimates together.  The library answers the questions that
matter when tuning such a network — where the regularized solution sits, how
biased and how noisy the adaptive iterates are around it, and which eta
minimizes the error against the true per-node targets.
"""

from .engine import (
    LongTermResult,
    SimConfig,
    SimResult,
    StabilityCondition,
    StabilityVerdict,
    check_stability,
    default_horizon,
    monte_carlo,
    require_stable,
    run_long_term,
    run_single,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    Disconnected,
    GraphError,
    MtdiffError,
    NegativeWeight,
    NonUniformProfile,
    NonzeroDiagonal,
    NotSymmetric,
    NumericalDivergence,
    SingularSystem,
    UnstableConfiguration,
)
from .graphs import (
    Graph,
    StackedSignal,
    build_graph,
    gft,
    igft,
    load_edge_list,
    random_geometric_graph,
    smoothness,
)
from .regularized import (
    BiasReport,
    RegularizedSolution,
    long_term_bias,
    pareto_solution,
    solve_regularized,
    spectral_filter_solution,
)
from .tasks import (
    DataSample,
    TaskEnsemble,
    make_smooth_target,
    sample,
    scalar_profile,
    stochastic_gradient,
    uniform_profile,
    varying_profile,
)
from .theory import (
    EtaSweep,
    TheoryReport,
    lyapunov_msd,
    msd_bar,
    msd_noncoop,
    msd_theory,
    msd_uniform,
    noise_covariance,
    optimize_eta,
    theory_report,
)

__version__ = "0.1.0"

# Bumped whenever a module's numerical behavior changes; recorded in every
# output file's metadata header so results stay attributable.
MODULE_VERSIONS = {
    "graphs": 1,
    "tasks": 1,
    "regularized": 1,
    "engine": 1,
    "theory": 1,
}

__all__ = [
    "BiasReport",
    "ConfigError",
    "DataSample",
    "DimensionMismatch",
    "Disconnected",
    "EtaSweep",
    "Graph",
    "GraphError",
    "LongTermResult",
    "MODULE_VERSIONS",
    "MtdiffError",
    "NegativeWeight",
    "NonUniformProfile",
    "NonzeroDiagonal",
    "NotSymmetric",
    "NumericalDivergence",
    "RegularizedSolution",
    "SimConfig",
    "SimResult",
    "SingularSystem",
    "StabilityCondition",
    "StabilityVerdict",
    "StackedSignal",
    "TaskEnsemble",
    "TheoryReport",
    "UnstableConfiguration",
    "__version__",
    "build_graph",
    "check_stability",
    "default_horizon",
    "gft",
    "igft",
    "load_edge_list",
    "long_term_bias",
    "lyapunov_msd",
    "make_smooth_target",
    "monte_carlo",
    "msd_bar",
    "msd_noncoop",
    "msd_theory",
    "msd_uniform",
    "noise_covariance",
    "optimize_eta",
    "pareto_solution",
    "random_geometric_graph",
    "require_stable",
    "run_long_term",
    "run_single",
    "sample",
    "scalar_profile",
    "smoothness",
    "solve_regularized",
    "spectral_filter_solution",
    "stochastic_gradient",
    "theory_report",
    "uniform_profile",
    "varying_profile",
]

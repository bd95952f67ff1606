"""Approximate pure Nash equilibria of expensive continuous games.

Per-player Gaussian-process payoff surrogates, a closed-form
approximate-regret acquisition, and an epsilon-greedy sequential loop
that spends a fixed oracle budget; plus exact-payoff baselines and an
experiment harness with CSV/SVG emission and a CLI.
"""

from .acquisition import (
    AcquisitionConfig,
    RegretAcquisition,
    RegretEstimate,
    bar_mu_exact,
    bar_mu_sampled,
    bar_sigma_exact,
    bar_sigma_sampled,
    q_vector,
    Q_matrix,
    regret_hat,
)
from .baselines import (
    BRConfig,
    BRTrajectory,
    best_response,
    grid_solver,
    iterated_br,
    random_baseline,
    true_regret,
)
from .games import (
    ActionSpace,
    GameSpec,
    Observation,
    ObservationSet,
    UtilitiesUnavailableError,
    analytic_regret_saddle,
    make_problem,
    make_saddle,
    oracle_eval,
)
from .globalopt import OptBudget, maximize, minimize
from .gp import FittingError, KernelParams, PlayerSurrogate, fit, kernel_eval, kernel_matrix, log_marginal_likelihood
from .harness import ConvergenceTable, ExperimentConfig, emit_csv, emit_plot, run_experiment
from .solver import IterationRow, RunRecord, SolverConfig, initial_design, recommend, run, select_next

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "RegretAcquisition", "RegretEstimate",
    "bar_mu_exact", "bar_mu_sampled", "bar_sigma_exact", "bar_sigma_sampled",
    "q_vector", "Q_matrix", "regret_hat",
    "BRConfig", "BRTrajectory", "best_response", "grid_solver", "iterated_br",
    "random_baseline", "true_regret",
    "ActionSpace", "GameSpec", "Observation", "ObservationSet",
    "UtilitiesUnavailableError", "analytic_regret_saddle", "make_problem",
    "make_saddle", "oracle_eval",
    "OptBudget", "maximize", "minimize",
    "FittingError", "KernelParams", "PlayerSurrogate", "fit", "kernel_eval",
    "kernel_matrix", "log_marginal_likelihood",
    "ConvergenceTable", "ExperimentConfig", "emit_csv", "emit_plot", "run_experiment",
    "IterationRow", "RunRecord", "SolverConfig", "initial_design", "recommend",
    "run", "select_next",
    "__version__",
]

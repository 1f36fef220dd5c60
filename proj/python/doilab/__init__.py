"""Doi-Onsager kinetic solver and its small-Deborah limit."""

from ._doilab import (
    BifurcationRow,
    ConvergenceReport,
    ConvergenceRow,
    EquilibriumParams,
    ExperimentConfig,
    KernelSpec,
    LimitCoefficients,
    NumericalError,
    alpha_star,
    bifurcation_table,
    dirichlet_energy,
    epsilon_sweep,
    equilibrium_params,
    gamma_constant,
    hmhf,
    hmhf_stable_dt,
    initial_director,
    lambda_coefficient,
    load_config,
    parse_config,
    partition_function,
    s2,
    solve_eta,
)

__all__ = [name for name in dir() if not name.startswith("_")]

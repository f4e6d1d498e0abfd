"""Hoeffding-type concentration for finite-state Markov chains.

Spectral quantities live in :mod:`.chain`, bound evaluators in :mod:`.bounds`,
exact oracles and simulation in :mod:`.sim`, the lazy-kernel eigenvalue
machinery in :mod:`.extremal`, and the statistical-learning reproductions in
:mod:`.learnlab`.
"""

from .bounds import (
    BoundReport,
    McmcPlan,
    StepFunction,
    alpha,
    bound_inhomogeneous,
    bound_t21,
    bound_t22,
    bound_t23,
    bound_t62,
    bound_ta1,
    c_p_prefactor,
    classical_hoeffding,
    density_pnorm,
    inhomogeneous_proxy,
    mcmc_plan,
)
from .chain import (
    FiniteChain,
    MeasurePair,
    SpectralSummary,
    absolute_lambda,
    additive_reversiblization,
    build_chain,
    leon_perron_kernel,
    load_chain,
    right_lambda,
    spectral_radius_lambda,
    spectral_summary,
    time_reversal,
)
from .sim import (
    asymptotic_variance,
    empirical_tail,
    exact_mgf,
    sample_path,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "McmcPlan",
    "StepFunction",
    "alpha",
    "bound_inhomogeneous",
    "bound_t21",
    "bound_t22",
    "bound_t23",
    "bound_t62",
    "bound_ta1",
    "c_p_prefactor",
    "classical_hoeffding",
    "density_pnorm",
    "inhomogeneous_proxy",
    "mcmc_plan",
    "FiniteChain",
    "MeasurePair",
    "SpectralSummary",
    "absolute_lambda",
    "additive_reversiblization",
    "build_chain",
    "leon_perron_kernel",
    "load_chain",
    "right_lambda",
    "spectral_radius_lambda",
    "spectral_summary",
    "time_reversal",
    "asymptotic_variance",
    "empirical_tail",
    "exact_mgf",
    "sample_path",
]

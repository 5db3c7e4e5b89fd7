"""Rank distributions of sign systems.

Bose-Einstein type occupation curves (including negative temperature),
uniform sampling of energia-constrained compositions, partition-function
asymptotics and fitting of empirical rank-size data.
"""
__version__ = "0.1.0"

from .core import (
    CardinalitySpectrum,
    Composition,
    Direction,
    EnergiaConstraint,
    energia_of,
    excess_minimizer,
    satisfies,
    user_cardinality_transform,
)
from .equilibrium import (
    Branch,
    EquilibriumParams,
    OccupationCurve,
    cumulative_curve,
    occupation,
    solve_equilibrium,
    solve_nu_given_beta,
)
from .errors import (
    CapExceededError,
    DataError,
    DegenerateError,
    DimensionError,
    DomainError,
    FitError,
    RankDistError,
    SolverError,
)
from .partition import (
    PartitionResult,
    partition_exact,
    partition_saddle,
    tail_mass_ratio,
)
from .rankfit import (
    RankedData,
    RankFit,
    build_ranks,
    fit_rank_curve,
    invert_rank_ratio,
    rank_curve,
    synthetic_prices,
    theoretical_rank_from_equilibrium,
)
from .sampler import (
    ChainConfig,
    EnsembleStats,
    concentration_experiment,
    enumerate_feasible,
    mean_cumulative_exact,
    sample_uniform,
)

"""Canonical partition function over compositions and its saddle-point form.

``Z(beta, N) = sum exp(-beta * sum_i N_i w_i)`` over all compositions with
``sum_i N_i = N``.  Equivalently ``Z`` is the coefficient of ``x**N`` in
``prod_i 1 / (1 - x exp(-beta w_i))``.

With ``c_i(m)`` the coefficient of ``x**m`` using the first ``i`` bins,
``c_i(m) = sum_{j<=i} exp(-beta w_j) c_j(m-1)``, so each step in ``m`` is a
cumulative log-sum-exp over the bins.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import CardinalitySpectrum, Direction, EnergiaConstraint
from .equilibrium import EquilibriumParams, occupations, solve_nu_given_beta
from .errors import CapExceededError, DomainError
from .sampler import ENUMERATION_CAP, _feasible_blocks, composition_count, iter_compositions

logger = logging.getLogger(__name__)

__all__ = [
    "PartitionResult",
    "DP_CAP",
    "log_multiset",
    "partition_exact",
    "partition_brute",
    "mean_energia_exact",
    "log_zeta",
    "partition_saddle",
    "tail_mass_ratio",
]

DP_CAP = 10**8
# Gaussian normalisation of the stationary-phase integral
SADDLE_NORMALISATION = "gaussian: -0.5*log(2*pi*d2 log zeta / d nu2)"


@dataclass(frozen=True)
class PartitionResult:
    beta: float
    n: int
    exact_log: float
    saddle_log: float
    nu_star: float
    rel_gap: float
    normalisation: str = SADDLE_NORMALISATION

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "n": self.n,
            "exact_log": self.exact_log,
            "saddle_log": self.saddle_log,
            "nu_star": self.nu_star,
            "rel_gap": self.rel_gap,
        }


def log_multiset(n: int, s: int) -> float:
    """``log C(n + s - 1, s - 1)``."""
    return float(gammaln(n + s) - gammaln(n + 1) - gammaln(s))


def _check_dp(spec, n, cap):
    cells = spec.s * (n + 1)
    if cells > cap:
        raise CapExceededError(
            f"partition DP needs {cells} cells, cap is {cap}", size=cells, cap=cap
        )


def partition_exact(spec: CardinalitySpectrum, n: int, beta: float, cap: int = DP_CAP) -> float:
    """``log Z(beta, n)`` by log-domain coefficient extraction."""
    if n < 0:
        raise DomainError("N must be non-negative")
    _check_dp(spec, n, cap)
    log_w = -beta * spec.values
    row = np.zeros(spec.s)
    for _ in range(n):
        row = np.logaddexp.accumulate(log_w + row)
    return float(row[-1])


def mean_energia_exact(spec: CardinalitySpectrum, n: int, beta: float, cap: int = DP_CAP) -> float:
    """Mean energia of the ``exp(-beta E)`` weighted ensemble, by the same DP.

    Tracks ``log(c_i(m) * mean_i(m))`` alongside ``log c_i(m)``, where
    ``mean_i(m)`` is the mean energia of ``m`` signs in the first ``i`` bins.
    """
    _check_dp(spec, n, cap)
    w = spec.values
    log_w = -beta * w
    row = np.zeros(spec.s)
    mean = np.zeros(spec.s)
    for _ in range(n):
        new_row = np.logaddexp.accumulate(log_w + row)
        weighted = np.logaddexp.accumulate(log_w + row + np.log(w + mean))
        row, mean = new_row, np.exp(weighted - new_row)
    return float(mean[-1])


def partition_brute(spec: CardinalitySpectrum, n: int, beta: float,
                    cap: int = ENUMERATION_CAP) -> float:
    """``log Z`` by summing over every composition; the small-instance oracle."""
    size = composition_count(n, spec.s)
    if size > cap:
        raise CapExceededError(f"{size} compositions exceed cap {cap}", size=size, cap=cap)
    parts = []
    for block in iter_compositions(n, spec.s):
        e = block @ spec.values
        parts.append(-beta * e)
    logs = np.concatenate(parts)
    top = logs.max()
    return float(top + math.log(math.fsum(np.exp(logs - top).tolist())))


def log_zeta(spec: CardinalitySpectrum, beta: float, nu: float) -> float:
    """``log prod_i 1/(1 - exp(nu - beta w_i))``."""
    gap = beta * spec.values - nu
    if np.any(gap <= 0):
        raise DomainError("nu must lie below beta*w_i for every bin")
    return -math.fsum(np.log(-np.expm1(-gap)).tolist())


def partition_saddle(spec: CardinalitySpectrum, n: int, beta: float,
                     exact: bool = True, cap: int = DP_CAP) -> PartitionResult:
    """Saddle-point approximation of ``log Z`` against the exact DP value.

    ``nu*`` puts the stationary point of the contour integral at the real
    axis (the occupations sum to ``n``).  Then

        log Z ~ -nu* n + log zeta(beta, nu*) - 0.5 log(2 pi V)

    with ``V = sum_i n_i (1 + n_i)``, the second ``nu``-derivative of
    ``log zeta``.
    """
    n = int(n)
    _check_regime(spec, n)
    nu = solve_nu_given_beta(spec, n, beta)
    occ = occupations(spec.values, EquilibriumParams(beta, nu))
    variance = math.fsum((occ * (1.0 + occ)).tolist())
    saddle = -nu * n + log_zeta(spec, beta, nu) - 0.5 * math.log(2.0 * math.pi * variance)
    if exact:
        exact_log = partition_exact(spec, n, beta, cap)
        gap = abs(exact_log - saddle) / abs(exact_log) if exact_log != 0 else abs(saddle)
    else:
        exact_log, gap = float("nan"), float("nan")
    return PartitionResult(float(beta), n, exact_log, saddle, nu, gap)


def _check_regime(spec, n, a1=0.1, a2=10.0, bound=None):
    if not (a1 * n <= spec.s <= a2 * n):
        logger.warning("s=%d is not comparable to N=%d; saddle asymptotics may not apply",
                       spec.s, n)
    if bound is not None and spec.w_max > bound:
        logger.warning("cardinalities exceed the bound %r", bound)


def tail_mass_ratio(spec: CardinalitySpectrum, n: int, beta: float, energia: float,
                    epsilon: float, cap: int = ENUMERATION_CAP) -> float:
    """Weighted mass of feasible states far above the energia bound.

    Returns ``sum exp(-beta E) / #feasible`` over compositions with
    ``E > energia + n**(1/2 + epsilon)``, where *feasible* means
    ``E >= energia``.
    """
    threshold = energia + n ** (0.5 + epsilon)
    if threshold > spec.w_max * n:
        return 0.0
    constraint = EnergiaConstraint(energia, Direction.AT_LEAST)
    total = 0
    tail = []
    for block, e in _feasible_blocks(spec, n, constraint, cap):
        total += block.shape[0]
        tail.extend((-beta * e[e > threshold]).tolist())
    if total == 0:
        raise DomainError("no feasible composition")
    if not tail:
        return 0.0
    return math.fsum(np.exp(tail).tolist()) / total

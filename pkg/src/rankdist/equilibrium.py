"""Bose-Einstein type equilibrium for a constrained ensemble of compositions.

Given a spectrum ``w_1..w_s``, a dictionary length ``N`` and an energia ``E``
the solver finds ``(beta, nu)`` with

    sum_i 1 / (exp(beta*w_i - nu) - 1)       = N
    sum_i w_i / (exp(beta*w_i - nu) - 1)     = E

Energia above the uniform value ``N * mean(w)`` gives ``beta < 0``: the
occupations then grow with cardinality (negative temperature).

The system is solved as two nested monotone 1-d problems: for fixed ``beta``
the total occupation is strictly increasing in ``nu``, and after eliminating
``nu`` the energia is strictly decreasing in ``beta``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import CardinalitySpectrum, Direction, EnergiaConstraint
from .errors import DegenerateError, DomainError, SolverError

logger = logging.getLogger(__name__)

__all__ = [
    "Branch",
    "EquilibriumParams",
    "OccupationCurve",
    "occupation",
    "occupations",
    "solve_nu_given_beta",
    "solve_equilibrium",
    "cumulative_curve",
    "total_occupation",
    "equilibrium_energia",
]

MAX_ITER = 200
INNER_RTOL = 1e-13
OUTER_RTOL = 1e-8


class Branch(enum.Enum):
    POSITIVE_T = "positive_t"
    NEGATIVE_T = "negative_t"
    BOUNDARY = "boundary"  # beta = 0 exactly


@dataclass(frozen=True)
class EquilibriumParams:
    beta: float
    nu: float
    branch: Branch = Branch.POSITIVE_T
    residual_norm: float = 0.0
    iterations: int = 0
    n: int = None
    flags: tuple = ()

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "nu": self.nu,
            "branch": self.branch.value,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "n": self.n,
            "flags": list(self.flags),
        }


@dataclass(frozen=True, eq=False)
class OccupationCurve:
    """Cumulative theoretical occupation ``phi[l] = sum_{i<=l} n_i``."""

    phi: np.ndarray
    occupations: np.ndarray = field(repr=False)

    def __len__(self):
        return int(self.phi.size)


def _gaps(x, nu):
    return x - nu


def occupations(values, params: EquilibriumParams) -> np.ndarray:
    """Vector of Bose-Einstein occupations, raising on the first invalid bin."""
    w = np.asarray(values, dtype=np.float64)
    gap = params.beta * w - params.nu
    bad = np.flatnonzero(~(gap > 0))
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"beta*w - nu = {gap.flat[i]!r} <= 0 at bin {i}; occupation undefined"
        )
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(gap)


def occupation(w: float, params: EquilibriumParams) -> float:
    """Occupation ``1 / (exp(beta*w - nu) - 1)`` of a single bin."""
    gap = params.beta * w - params.nu
    if not gap > 0:
        raise DomainError(f"beta*w - nu = {gap!r} <= 0; occupation undefined")
    with np.errstate(over="ignore"):
        return float(1.0 / np.expm1(gap))


def total_occupation(spec: CardinalitySpectrum, beta: float, nu: float) -> float:
    x = beta * spec.values
    with np.errstate(over="ignore", divide="ignore"):
        return math.fsum((1.0 / np.expm1(x - nu)).tolist())


def _solve_gap(x_rel, n):
    """Solve ``sum 1/expm1(x_rel + t) = n`` for ``t > 0``; ``min(x_rel) == 0``.

    Works in ``u = log t``; the left side is strictly decreasing in ``t``.
    Returns ``(t, iterations)``.
    """

    def g(u):
        with np.errstate(over="ignore"):
            tot = np.sum(1.0 / np.expm1(x_rel + math.exp(u)))
        return math.log(tot) - math.log(n)

    # the smallest gap alone carries n at t0, so the total is >= n there
    u_lo = math.log(math.log1p(1.0 / n))
    u_hi = u_lo
    g_hi = g(u_hi)
    expansions = 0
    while g_hi > 0:
        u_hi += 1.0
        expansions += 1
        if expansions > MAX_ITER:
            raise SolverError("could not bracket nu from above", bracket=(u_lo, u_hi))
        g_hi = g(u_hi)
    if g_hi == 0:
        return math.exp(u_hi), expansions
    if u_hi == u_lo:
        # total < n already at t0 cannot happen; guard against rounding anyway
        u_lo -= 1.0
    try:
        u, res = brentq(g, u_lo, u_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                        maxiter=MAX_ITER, full_output=True)
    except (RuntimeError, ValueError) as exc:
        raise SolverError(f"nu root search failed: {exc}", bracket=(u_lo, u_hi)) from exc
    return math.exp(u), expansions + res.iterations


def _nu_for_beta(spec, n, beta):
    x = beta * spec.values
    x_min = float(x.min())
    t, iters = _solve_gap(x - x_min, n)
    return x_min - t, iters


def solve_nu_given_beta(spec: CardinalitySpectrum, n: int, beta: float) -> float:
    """Chemical-potential-like ``nu`` normalising the total occupation to ``n``.

    The result always satisfies ``beta*w_i - nu > 0`` for every bin.
    """
    if n < 1:
        raise DomainError("N must be a positive integer")
    nu, _ = _nu_for_beta(spec, n, float(beta))
    return nu


def equilibrium_energia(spec: CardinalitySpectrum, n: int, beta: float):
    """Energia of the normalised equilibrium at ``beta``; returns ``(E, nu)``."""
    nu, _ = _nu_for_beta(spec, n, beta)
    with np.errstate(over="ignore"):
        occ = 1.0 / np.expm1(beta * spec.values - nu)
    return math.fsum((spec.values * occ).tolist()), nu


def _residuals(spec, n, energia, beta, nu):
    occ = occupations(spec.values, EquilibriumParams(beta, nu))
    r_n = (math.fsum(occ.tolist()) - n) / n
    r_e = (math.fsum((spec.values * occ).tolist()) - energia) / energia
    return r_n, r_e


def _boundary(spec, n, flags=()):
    return EquilibriumParams(
        beta=0.0,
        nu=-math.log1p(spec.s / n),
        branch=Branch.BOUNDARY,
        residual_norm=0.0,
        iterations=0,
        n=int(n),
        flags=tuple(flags),
    )


def solve_equilibrium(spec: CardinalitySpectrum, n: int, constraint: EnergiaConstraint) -> EquilibriumParams:
    """Solve the normalisation and energia equations for ``(beta, nu)``.

    Raises
    ------
    DomainError
        The energia lies on the wrong side of ``N * mean(w)`` for the
        constraint direction.
    DegenerateError
        The energia reaches ``N * w_max`` (or ``N * w_min`` from below), where
        every sign condenses into one extreme bin.
    SolverError
        A root could not be bracketed or the residuals miss tolerance.
    """
    n = int(n)
    if n < 1:
        raise DomainError("N must be a positive integer")
    energia = constraint.energia
    if spec.s == 1:
        return _boundary(spec, n, flags=("underdetermined",))

    uniform = n * spec.mean
    if math.isclose(energia, uniform, rel_tol=1e-14, abs_tol=0.0):
        flags = ("underdetermined",) if spec.w_min == spec.w_max else ()
        return _boundary(spec, n, flags)

    if constraint.direction is Direction.AT_LEAST:
        if energia < uniform:
            raise DomainError(
                f"AT_LEAST needs energia >= N*mean(w) = {uniform!r}, got {energia!r}"
            )
        if energia >= spec.w_max * n:
            raise DegenerateError(
                f"energia {energia!r} >= N*w_max = {spec.w_max * n!r}: all signs condense"
            )
        sign = -1.0
    else:
        if energia >= uniform:
            raise DomainError(
                f"AT_MOST needs energia < N*mean(w) = {uniform!r}, got {energia!r}"
            )
        if energia <= spec.w_min * n:
            raise DegenerateError(
                f"energia {energia!r} <= N*w_min = {spec.w_min * n!r}: all signs condense"
            )
        sign = 1.0

    def f(beta):
        e, _ = equilibrium_energia(spec, n, beta)
        return (e - energia) / energia

    scale = 1.0 / (spec.w_max - spec.w_min)
    a, f_a = 0.0, (uniform - energia) / energia
    b = sign * scale
    f_b = f(b)
    calls = 1
    # energia decreases in beta, so f changes sign once along the ray
    while np.sign(f_b) == np.sign(f_a):
        if abs(f_b) > abs(f_a):
            logger.warning("energia not monotone along beta ray at beta=%r", b)
        a, f_a = b, f_b
        b *= 2.0
        f_b = f(b)
        calls += 1
        if calls > MAX_ITER:
            raise SolverError("could not bracket beta", bracket=(a, b))
    if f_b == 0.0:
        beta = b
    else:
        lo, hi = sorted((a, b))
        try:
            beta, res = brentq(f, lo, hi, xtol=1e-17 * scale, rtol=4 * np.finfo(float).eps,
                               maxiter=MAX_ITER, full_output=True)
        except (RuntimeError, ValueError) as exc:
            raise SolverError(f"beta root search failed: {exc}", bracket=(lo, hi)) from exc
        calls += res.function_calls
    nu, _ = _nu_for_beta(spec, n, beta)
    r_n, r_e = _residuals(spec, n, energia, beta, nu)
    residual = math.hypot(r_n, r_e)
    if abs(r_n) > OUTER_RTOL or abs(r_e) > OUTER_RTOL:
        raise SolverError(
            f"residuals (N: {r_n:.3g}, E: {r_e:.3g}) above tolerance", bracket=(a, b)
        )
    return EquilibriumParams(
        beta=float(beta),
        nu=float(nu),
        branch=Branch.NEGATIVE_T if beta < 0 else Branch.POSITIVE_T,
        residual_norm=residual,
        iterations=calls,
        n=n,
    )


def cumulative_curve(spec: CardinalitySpectrum, params: EquilibriumParams) -> OccupationCurve:
    """Theoretical cumulative occupation curve for solved parameters."""
    if spec.s == 1 and params.n is not None:
        occ = np.array([float(params.n)])
    else:
        occ = occupations(spec.values, params)
    occ.setflags(write=False)
    phi = np.cumsum(occ)
    phi.setflags(write=False)
    return OccupationCurve(phi=phi, occupations=occ)

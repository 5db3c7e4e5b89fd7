"""Rank structures of empirical cardinality data and the closed-form rank curve.

Signs are ranked by non-decreasing cardinality (ties keep input order).  For
a cutoff cardinality ``w`` the count ``r_l`` of signs with cardinality
``<= w`` and the count ``r_{-l}`` of signs above it always add up to the
dictionary size.

The fitted curve is ``r(w) = c1 / (1 + alpha * w**gamma) + c2``.  It falls
in ``w`` when ``c1 > 0``; an empirical cumulative count rises, so fits of
real catalogs come out with ``c1 < 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import CardinalitySpectrum, user_cardinality_transform
from .equilibrium import EquilibriumParams, cumulative_curve
from .errors import DataError, DomainError, FitError

__all__ = [
    "RankedData",
    "RankFit",
    "build_ranks",
    "rank_curve",
    "invert_rank_ratio",
    "curve_points",
    "fit_rank_curve",
    "synthetic_prices",
    "theoretical_rank_from_equilibrium",
    "ALPHA_GRID",
    "GAMMA_GRID",
]

ALPHA_GRID = (0.1, 1.0, 10.0)
GAMMA_GRID = (0.5, 1.0, 2.0)
MIN_DISTINCT = 8


@dataclass(frozen=True, eq=False)
class RankedData:
    """Sorted cardinalities with their ranks and cutoff counts.

    ``omega[k]`` has rank ``k + 1``; ``r_le[k]`` counts signs with cardinality
    ``<= omega[k]`` and ``r_minus[k]`` those strictly above it.
    """

    omega: np.ndarray
    ranks: np.ndarray
    r_le: np.ndarray
    r_minus: np.ndarray
    order: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.omega.size)

    @property
    def omega_min(self) -> float:
        return float(self.omega[0])

    def items(self):
        return list(zip(self.omega.tolist(), self.ranks.tolist()))

    def cutoffs(self):
        """Distinct cardinalities with ``(r_l, r_{-l})`` at each."""
        last = np.r_[self.omega[1:] != self.omega[:-1], True]
        return self.omega[last], self.r_le[last], self.r_minus[last]


def build_ranks(values) -> RankedData:
    w = np.asarray(values, dtype=np.float64).ravel()
    if w.size == 0:
        raise DataError("no cardinalities given")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DataError("cardinalities must be finite and positive")
    order = np.argsort(w, kind="stable")
    omega = w[order]
    r_le = np.searchsorted(omega, omega, side="right")
    return RankedData(
        omega=omega,
        ranks=np.arange(1, w.size + 1),
        r_le=r_le,
        r_minus=w.size - r_le,
        order=order,
    )


@dataclass(frozen=True)
class RankFit:
    """Fitted rank curve.

    ``alpha`` is in the original cardinality units; ``c1`` and ``c2`` are in
    count units divided by ``count_scale``.
    """

    c1: float
    c2: float
    alpha: float
    gamma: float
    sigma: float = 0.0
    inflection_omega: float = None
    converged: bool = True
    mode: str = "cumulative"
    omega_scale: float = 1.0
    count_scale: float = 1.0
    n_points: int = 0
    nfev: int = 0

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 0):
            raise DomainError("alpha and gamma must be positive")
        if self.inflection_omega is None:
            object.__setattr__(self, "inflection_omega", self.alpha ** (-1.0 / self.gamma))

    def predict(self, omega):
        return rank_curve(omega, self)

    def to_record(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "inflection_omega": self.inflection_omega,
            "converged": self.converged,
            "mode": self.mode,
            "omega_scale": self.omega_scale,
            "count_scale": self.count_scale,
            "n_points": self.n_points,
            "nfev": self.nfev,
        }


def _model(x, c1, c2, alpha, gamma):
    return c1 / (1.0 + alpha * x**gamma) + c2


def rank_curve(omega, fit: RankFit):
    """``c1 / (1 + alpha * w**gamma) + c2``."""
    w = np.asarray(omega, dtype=np.float64)
    if np.any(w <= 0):
        raise DomainError("cardinality must be positive")
    out = _model(w, fit.c1, fit.c2, fit.alpha, fit.gamma)
    return float(out) if out.ndim == 0 else out


def invert_rank_ratio(r_l, r_minus_l, alpha: float, gamma: float,
                      variant: str = "printed") -> float:
    """Cardinality recovered from the cutoff counts.

    ``variant="printed"`` gives ``(r_l / (alpha * r_{-l}))**(1/gamma)``;
    ``variant="self_consistent"`` swaps the ratio, which is the exact inverse
    of ``r_l = total / (1 + alpha * w**gamma)``.
    """
    if not (r_l > 0 and r_minus_l > 0):
        raise DomainError("both cutoff counts must be positive")
    if not (alpha > 0 and gamma > 0):
        raise DomainError("alpha and gamma must be positive")
    if variant == "printed":
        ratio = r_l / r_minus_l
    elif variant == "self_consistent":
        ratio = r_minus_l / r_l
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return float((ratio / alpha) ** (1.0 / gamma))


def curve_points(data: RankedData, mode: str = "cumulative"):
    """Empirical ``(w, count)`` points.

    ``cumulative``: one point per distinct cardinality, count of signs with
    cardinality ``<= w``.  ``rank``: one point per sign, its rank.
    """
    if mode == "cumulative":
        x, r_le, _ = data.cutoffs()
        return x, r_le.astype(np.float64)
    if mode == "rank":
        return data.omega, data.ranks.astype(np.float64)
    raise ValueError(f"unknown fit mode {mode!r}")


def _linear_c(x, y, alpha, gamma):
    basis = np.column_stack([1.0 / (1.0 + alpha * x**gamma), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return coef


def fit_rank_curve(data: RankedData, normalize: bool = True, mode: str = "cumulative",
                   alpha_grid=ALPHA_GRID, gamma_grid=GAMMA_GRID, restarts: int = 6,
                   xtol: float = 1e-9, ftol: float = 1e-12,
                   maxiter: int = 20000, callback=None) -> RankFit:
    """Least-squares fit of the rank curve by multi-start Nelder-Mead.

    With ``normalize`` the cardinalities are divided by their maximum and the
    counts by the dictionary size, so ``sigma`` (root-mean-square residual)
    is comparable across catalogs.  Each start takes ``(alpha, gamma)`` from
    the grid and ``(c1, c2)`` from linear least squares, then runs the simplex
    on ``(c1, c2, log alpha, log gamma)``, restarting from its own optimum
    until the objective stops improving.
    """
    if isinstance(data, RankedData):
        ranked = data
    else:
        ranked = build_ranks(data)
    x, y = curve_points(ranked, mode)
    if np.unique(x).size < MIN_DISTINCT:
        raise FitError(f"need at least {MIN_DISTINCT} distinct cardinalities, got {np.unique(x).size}")
    omega_scale = float(x.max()) if normalize else 1.0
    count_scale = float(ranked.total) if normalize else 1.0
    xs = x / omega_scale
    ys = y / count_scale

    def objective(theta):
        c1, c2, la, lg = theta
        if abs(la) > 700 or abs(lg) > 20:
            return np.inf
        with np.errstate(over="ignore", invalid="ignore"):
            r = _model(xs, c1, c2, math.exp(la), math.exp(lg)) - ys
        val = float(np.dot(r, r) / r.size)
        return val if math.isfinite(val) else np.inf

    best = None
    nfev = 0
    for a0 in alpha_grid:
        for g0 in gamma_grid:
            c1, c2 = _linear_c(xs, ys, a0, g0)
            theta = np.array([c1, c2, math.log(a0), math.log(g0)])
            f_prev = objective(theta)
            ok = True
            for _ in range(restarts):
                res = minimize(objective, theta, method="Nelder-Mead", callback=callback,
                               options={"xatol": xtol, "fatol": ftol * f_prev + 1e-30, "maxiter": maxiter,
                                        "maxfev": 2 * maxiter, "adaptive": True})
                nfev += res.nfev
                if res.fun <= f_prev:
                    theta = res.x
                improved = f_prev - res.fun
                f_prev = min(f_prev, res.fun)
                ok = bool(res.success)
                if improved <= ftol * f_prev or f_prev <= 1e-30:
                    break
            if best is None or f_prev < best[0]:
                best = (f_prev, theta, ok)
    f, theta, ok = best
    if not math.isfinite(f):
        raise FitError("objective is not finite at any start")
    c1, c2, la, lg = (float(v) for v in theta)
    gamma = math.exp(lg)
    alpha = math.exp(la) / omega_scale**gamma
    return RankFit(
        c1=c1,
        c2=c2,
        alpha=alpha,
        gamma=gamma,
        sigma=math.sqrt(f),
        converged=ok,
        mode=mode,
        omega_scale=omega_scale,
        count_scale=count_scale,
        n_points=int(xs.size),
        nfev=nfev,
    )


def synthetic_prices(c1: float, c2: float, alpha: float, gamma: float, n: int,
                     noise: float = 0.0, rng: np.random.Generator = None) -> np.ndarray:
    """Prices whose cumulative fraction follows the rank curve exactly.

    The ``k``-th cheapest of ``n`` items is placed where the curve reaches
    ``k / n``.  ``noise`` is the standard deviation of a log-normal
    multiplicative perturbation applied afterwards.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if not (alpha > 0 and gamma > 0):
        raise DomainError("alpha and gamma must be positive")
    y = np.arange(1, n + 1) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (c1 / (y - c2) - 1.0) / alpha
    if not np.all(np.isfinite(u) & (u > 0)):
        lo, hi = sorted((c2, c1 + c2))
        raise DomainError(
            f"curve range ({lo:.6g}, {hi:.6g}) does not cover cumulative fractions (0, 1]"
        )
    prices = u ** (1.0 / gamma)
    if noise:
        if rng is None:
            rng = np.random.default_rng(0)
        prices = prices * np.exp(noise * rng.standard_normal(n))
    return prices


def theoretical_rank_from_equilibrium(spec: CardinalitySpectrum, params: EquilibriumParams) -> np.ndarray:
    """``(w_l, phi_l)`` pairs: the equilibrium occupation read as rank vs cardinality."""
    phi = cumulative_curve(spec, params).phi
    return np.column_stack([spec.values, phi])


def user_cardinalities(values, alpha: float, gamma: float) -> np.ndarray:
    """Convenience wrapper mapping a price list to user cardinalities."""
    return np.asarray(user_cardinality_transform(np.asarray(values, dtype=float), alpha, gamma))

"""Exact enumeration and uniform MCMC sampling of constrained compositions.

The feasible set holds every composition ``N_1 + ... + N_s = N`` whose
energia respects an :class:`~rankdist.core.EnergiaConstraint`.  All its members
are taken to be equally likely.  Small instances are enumerated; large ones
are sampled with a lazy Metropolis chain whose proposal (move one sign from
bin ``i`` to bin ``j``, ``(i, j)`` uniform over all ``s**2`` ordered pairs) is
symmetric, so a move is accepted exactly when the new state is feasible.

Irreducibility: from any feasible state of the ``AT_LEAST`` set, moving signs
one at a time into the top bin never lowers the energia and ends at the
corner ``N_s = N``; every move is reversible, so all feasible states
communicate through that corner.  ``AT_MOST`` is symmetric with the bottom
bin.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import CardinalitySpectrum, Composition, Direction, EnergiaConstraint
from .equilibrium import EquilibriumParams, cumulative_curve, solve_equilibrium
from .errors import CapExceededError, DomainError

__all__ = [
    "ChainConfig",
    "EnsembleStats",
    "ConcentrationResult",
    "composition_count",
    "iter_compositions",
    "feasible_mask",
    "enumerate_feasible",
    "count_feasible",
    "mean_cumulative_exact",
    "make_rng",
    "corner_state",
    "warm_start",
    "sample_counts",
    "sample_uniform",
    "ensemble_stats",
    "concentration_point",
    "concentration_experiment",
    "loglog_slope",
]

ENUMERATION_CAP = 10**7
_BLOCK = 1 << 15
# energia closer than this (relative) to the bound is re-checked with fsum
_EXACT_BAND = 1e-9


@dataclass(frozen=True)
class ChainConfig:
    """Burn-in and thinning are measured in sweeps of ``N`` proposed moves."""

    burn_in: int = 50
    thinning: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        if self.thinning < 1:
            raise DomainError("thinning must be >= 1")


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    n: int
    s: int
    sample_count: int
    mean_cumulative: np.ndarray
    deviation_quantiles: dict
    epsilon: float
    exceed_fraction: float
    phi_max_error: float
    deviations: np.ndarray = field(repr=False)

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "sample_count": self.sample_count,
            "epsilon": self.epsilon,
            "deviation_quantiles": {str(q): v for q, v in self.deviation_quantiles.items()},
            "exceed_fraction": self.exceed_fraction,
            "phi_max_error": self.phi_max_error,
        }


def composition_count(n: int, s: int) -> int:
    """Number of compositions of ``n`` into ``s`` non-negative parts."""
    return math.comb(n + s - 1, s - 1)


def _check_cap(n, s, cap):
    size = composition_count(n, s)
    if size > cap:
        raise CapExceededError(
            f"enumeration of C({n + s - 1}, {s - 1}) = {size} compositions exceeds cap {cap}",
            size=size,
            cap=cap,
        )
    return size


def iter_compositions(n: int, s: int, block: int = _BLOCK):
    """Yield all compositions of ``n`` into ``s`` parts as int arrays, lexicographically.

    Stars and bars: the ``s - 1`` bar positions among ``n + s - 1`` slots are
    produced by ``itertools.combinations`` in lexicographic order, which maps
    to lexicographic order of the counts.
    """
    if s == 1:
        yield np.array([[n]], dtype=np.int64)
        return
    slots = n + s - 1
    combos = itertools.combinations(range(slots), s - 1)
    while True:
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, block)), dtype=np.int64
        )
        if flat.size == 0:
            return
        bars = flat.reshape(-1, s - 1)
        m = bars.shape[0]
        padded = np.empty((m, s + 1), dtype=np.int64)
        padded[:, 0] = -1
        padded[:, 1:-1] = bars
        padded[:, -1] = slots
        yield np.diff(padded, axis=1) - 1


def feasible_mask(counts: np.ndarray, spec: CardinalitySpectrum, constraint: EnergiaConstraint):
    """Boolean mask of rows of ``counts`` that respect the energia bound.

    Returns ``(mask, energia)``.  Rows whose dot-product energia lies within a
    relative band of the bound are recomputed with ``math.fsum`` so the
    answer agrees with :func:`rankdist.core.satisfies`.
    """
    e = counts @ spec.values
    bound = constraint.energia
    near = np.flatnonzero(np.abs(e - bound) <= _EXACT_BAND * max(abs(bound), 1.0))
    for r in near:
        e[r] = math.fsum((counts[r] * spec.values).tolist())
    if constraint.direction is Direction.AT_LEAST:
        return e >= bound, e
    return e <= bound, e


def _feasible_blocks(spec, n, constraint, cap):
    _check_cap(n, spec.s, cap)
    for block in iter_compositions(n, spec.s):
        mask, e = feasible_mask(block, spec, constraint)
        yield block[mask], e[mask]


def enumerate_feasible(spec: CardinalitySpectrum, n: int, constraint: EnergiaConstraint,
                       cap: int = ENUMERATION_CAP) -> list:
    """All feasible compositions, in lexicographic order of their counts."""
    out = []
    for block, _ in _feasible_blocks(spec, n, constraint, cap):
        out.extend(Composition(row, n) for row in block)
    return out


def count_feasible(spec, n, constraint, cap=ENUMERATION_CAP) -> int:
    return sum(b.shape[0] for b, _ in _feasible_blocks(spec, n, constraint, cap))


def mean_cumulative_exact(spec: CardinalitySpectrum, n: int, constraint: EnergiaConstraint,
                          cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Mean of ``B_l`` over the equiprobable feasible set."""
    total = np.zeros(spec.s, dtype=np.int64)
    count = 0
    for block, _ in _feasible_blocks(spec, n, constraint, cap):
        total += np.cumsum(block, axis=1).sum(axis=0)
        count += block.shape[0]
    if count == 0:
        raise DomainError("no feasible composition")
    return total / count


def make_rng(seed: int, *stream) -> np.random.Generator:
    """Counter-based generator for one stream split off a master seed."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(x) for x in stream))
    return np.random.Generator(np.random.Philox(ss))


def corner_state(spec, n, constraint) -> np.ndarray:
    """Extreme composition that is feasible whenever anything is."""
    counts = np.zeros(spec.s, dtype=np.int64)
    if constraint.direction is Direction.AT_LEAST:
        counts[-1] = n
    else:
        counts[0] = n
    mask, _ = feasible_mask(counts[None, :], spec, constraint)
    if not mask[0]:
        raise DomainError(
            f"corner state {counts.tolist()} violates the constraint; feasible set is empty"
        )
    return counts


def _round_to_total(target, n):
    target = np.asarray(target, dtype=float) * (n / np.sum(target))
    counts = np.floor(target).astype(np.int64)
    short = n - int(counts.sum())
    if short:
        order = np.argsort(-(target - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def warm_start(spec, n, constraint, target=None) -> np.ndarray:
    """Feasible start near ``target`` occupations (uniform by default).

    The target is rounded to integers summing to ``n``; while the energia
    bound is violated, one sign moves from the lowest occupied bin to the top
    bin (``AT_LEAST``) or from the highest occupied bin to the bottom one.
    Each repair step moves toward the corner state, so the loop terminates.
    """
    corner = corner_state(spec, n, constraint)
    if target is None:
        target = np.ones(spec.s)
    counts = _round_to_total(target, n)
    at_least = constraint.direction is Direction.AT_LEAST
    for _ in range(n + 1):
        mask, _ = feasible_mask(counts[None, :], spec, constraint)
        if mask[0]:
            return counts
        occupied = np.flatnonzero(counts)
        if at_least:
            i, j = occupied[0], spec.s - 1
        else:
            i, j = occupied[-1], 0
        if i == j:
            break
        counts[i] -= 1
        counts[j] += 1
    return corner


def sample_counts(spec: CardinalitySpectrum, n: int, constraint: EnergiaConstraint,
                  config: ChainConfig, k: int, rng: np.random.Generator = None,
                  start=None) -> np.ndarray:
    """Run one chain and return ``k`` recorded states as a ``(k, s)`` int array.

    ``start`` is a feasible composition, ``"corner"`` or ``"warm"`` (default,
    see :func:`warm_start`).  The first state is recorded after burn-in plus
    one thinning interval.
    """
    if k < 0:
        raise DomainError("k must be non-negative")
    if rng is None:
        rng = make_rng(config.seed, 0)
    s = spec.s
    if start is None or (isinstance(start, str) and start == "warm"):
        counts_arr = warm_start(spec, n, constraint)
    elif isinstance(start, str) and start == "corner":
        counts_arr = corner_state(spec, n, constraint)
    else:
        counts_arr = np.asarray(start.counts if isinstance(start, Composition) else start,
                                dtype=np.int64)
        mask, _ = feasible_mask(counts_arr[None, :], spec, constraint)
        if counts_arr.sum() != n or not mask[0]:
            raise DomainError("start state is infeasible")
    out = np.empty((k, s), dtype=np.int64)
    if s == 1:
        out[:] = counts_arr
        return out

    w = spec.values.tolist()
    w_arr = spec.values
    counts = counts_arr.tolist()
    bound = constraint.energia
    at_least = constraint.direction is Direction.AT_LEAST
    band = _EXACT_BAND * max(abs(bound), 1.0)
    energia = math.fsum((counts_arr * w_arr).tolist())

    def advance(moves):
        nonlocal energia
        done = 0
        while done < moves:
            m = min(_BLOCK, moves - done)
            picks = rng.integers(0, s, size=2 * m).tolist()
            for t in range(0, 2 * m, 2):
                i = picks[t]
                j = picks[t + 1]
                if i == j or counts[i] == 0:
                    continue
                e_new = energia + (w[j] - w[i])
                if abs(e_new - bound) <= band:
                    counts[i] -= 1
                    counts[j] += 1
                    e_new = math.fsum([c * x for c, x in zip(counts, w)])
                    ok = e_new >= bound if at_least else e_new <= bound
                    if ok:
                        energia = e_new
                    else:
                        counts[i] += 1
                        counts[j] -= 1
                    continue
                if (e_new >= bound) if at_least else (e_new <= bound):
                    counts[i] -= 1
                    counts[j] += 1
                    energia = e_new
            done += m

    advance(config.burn_in * n)
    for r in range(k):
        advance(config.thinning * n)
        out[r] = counts
        # resync the running energia to avoid drift
        energia = math.fsum([c * x for c, x in zip(counts, w)])
    return out


def sample_uniform(spec: CardinalitySpectrum, n: int, constraint: EnergiaConstraint,
                   config: ChainConfig, k: int, stream: int = 0) -> list:
    """Draw ``k`` approximately uniform feasible compositions from one chain."""
    rng = make_rng(config.seed, stream)
    return [Composition(row, n) for row in sample_counts(spec, n, constraint, config, k, rng)]


def _head_start(s, epsilon):
    return max(1, math.ceil(epsilon * s)) - 1


def ensemble_stats(samples: np.ndarray, phi: np.ndarray, epsilon: float = 0.05,
                   quantiles=(0.5, 0.9, 0.99), threshold=None) -> EnsembleStats:
    """Deviation statistics ``D = max_{l >= eps*s} |B_l - phi_l|`` over samples."""
    samples = np.asarray(samples)
    k, s = samples.shape
    n = int(samples[0].sum()) if k else 0
    cum = np.cumsum(samples, axis=1)
    start = _head_start(s, epsilon)
    dev = np.abs(cum[:, start:] - phi[start:]).max(axis=1) if k else np.zeros(0)
    mean_cum = cum.mean(axis=0) if k else np.full(s, np.nan)
    if threshold is None:
        threshold = n ** (0.75 + epsilon)
    qs = {float(q): float(np.quantile(dev, q)) for q in sorted(quantiles)} if k else {}
    return EnsembleStats(
        n=n,
        s=s,
        sample_count=k,
        mean_cumulative=mean_cum,
        deviation_quantiles=qs,
        epsilon=float(epsilon),
        exceed_fraction=float(np.mean(dev >= threshold)) if k else float("nan"),
        phi_max_error=float(np.max(np.abs(mean_cum - phi))) if k else float("nan"),
        deviations=dev,
    )


@dataclass(frozen=True, eq=False)
class ConcentrationResult:
    points: list
    slope: float
    slope_quantile: float
    params: dict

    def __iter__(self):
        return iter(self.points)

    def to_record(self) -> dict:
        return {
            "slope": self.slope,
            "slope_quantile": self.slope_quantile,
            "bound_exponent": 0.75,
            "points": [stats.to_record() for _, stats in self.points],
            **self.params,
        }


def default_family(n: int, s_ratio: float = 1.0) -> CardinalitySpectrum:
    """Bounded spectrum ``w_i = i/s`` with ``s = round(s_ratio * n)``."""
    return CardinalitySpectrum.uniform_grid(max(1, round(s_ratio * n)))


def concentration_point(n, energia_ratio, epsilon, k, config, spec=None,
                        quantiles=(0.5, 0.9, 0.99)):
    """Solve, sample and measure deviations for one dictionary length ``n``."""
    spec = default_family(n) if spec is None else spec
    constraint = EnergiaConstraint(energia_ratio * n * spec.mean, Direction.AT_LEAST)
    params = solve_equilibrium(spec, n, constraint)
    phi = cumulative_curve(spec, params).phi
    rng = make_rng(config.seed, n)
    start = warm_start(spec, n, constraint, cumulative_curve(spec, params).occupations)
    samples = sample_counts(spec, n, constraint, config, k, rng, start=start)
    return ensemble_stats(samples, phi, epsilon, quantiles), params


def _point_job(args):
    n, family, ratio, eps, k, config, quantiles = args
    spec = family(n) if family is not None else None
    stats, _ = concentration_point(n, ratio, eps, k, config, spec, quantiles)
    return n, stats


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        return float("nan")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def concentration_experiment(spec_family=None, n_grid=(64, 128, 256, 512),
                             energia_ratio: float = 1.2, epsilon: float = 0.05,
                             k: int = 2000, config: ChainConfig = ChainConfig(),
                             quantiles=(0.5, 0.9, 0.99), slope_quantile: float = 0.99,
                             workers: int = 1) -> ConcentrationResult:
    """Empirical check that cumulative counts concentrate on the equilibrium curve.

    For each ``N`` in the grid the chain's seed stream is keyed by ``N``
    itself, so results do not depend on grid order or on ``workers``.
    """
    quantiles = tuple(sorted(set(quantiles) | {slope_quantile}))
    jobs = [(int(n), spec_family, energia_ratio, epsilon, k, config, quantiles) for n in n_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point_job, jobs))
    else:
        points = [_point_job(job) for job in jobs]
    ys = [stats.deviation_quantiles[slope_quantile] for _, stats in points]
    slope = loglog_slope([n for n, _ in points], ys) if len(points) > 1 else float("nan")
    return ConcentrationResult(
        points=points,
        slope=slope,
        slope_quantile=slope_quantile,
        params={
            "n_grid": [int(n) for n in n_grid],
            "energia_ratio": energia_ratio,
            "epsilon": epsilon,
            "k": k,
            "burn_in": config.burn_in,
            "thinning": config.thinning,
            "seed": config.seed,
        },
    )

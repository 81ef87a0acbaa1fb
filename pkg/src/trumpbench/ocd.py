"""Online convergence detection.

Multi-objective runs are stopped from the per-generation time series of
quality indicators: once a window of values is either statistically flat
(variance significantly below a limit) or trend-free (regression slope
indistinguishable from zero) for two consecutive generations, the run is
declared converged.  The single-objective baseline stops on stagnation of
the population's min / mean / max fitness.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from trumpbench.indicators import (
    FrontSet,
    eps_indicator,
    fit_normalize_transform,
    hypervolume,
    prune_to_front,
    r2_indicator,
    simplex_lattice_weights,
)

DEFAULT_INDICATORS = ("hv", "eps", "r2")


class Decision(enum.Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"


@dataclass(frozen=True)
class OCDParams:
    """Window length (generations), variance limit, test level and tracked indicators."""

    window: int = 10
    var_limit: float = 1e-4
    alpha: float = 0.05
    indicators: tuple[str, ...] = DEFAULT_INDICATORS

    def __post_init__(self) -> None:
        if self.window < 3:
            raise ValueError("window must be at least 3 generations")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.var_limit <= 0.0:
            raise ValueError("var_limit must be positive")
        if not self.indicators:
            raise ValueError("need at least one tracked indicator")


@dataclass
class OCDState:
    """Ring buffers of the last ``window`` values per indicator plus the hit streak."""

    params: OCDParams
    buffers: dict[str, deque] = field(init=False)
    consecutive_hits: int = 0
    generations: int = 0

    def __post_init__(self) -> None:
        self.buffers = {
            name: deque(maxlen=self.params.window) for name in self.params.indicators
        }


def variance_below_limit(values: np.ndarray, var_limit: float, alpha: float) -> bool:
    """One-sided chi-square test: is the variance significantly below var_limit?"""
    v = np.asarray(values, dtype=float)
    n = v.size
    statistic = (n - 1) * np.var(v, ddof=1) / var_limit
    return bool(statistic < sps.chi2.ppf(alpha, n - 1))


def slope_is_zero(values: np.ndarray, alpha: float) -> bool:
    """True when the window's regression slope is confidently negligible.

    Mere insignificance is not enough (a noisy, trendless window would
    pass); the one-sided confidence bound on |slope| must fall below a
    machine-relevant trend threshold relative to the data scale.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    x = np.arange(n, dtype=float)
    sxx = float(((x - x.mean()) ** 2).sum())
    slope = float(((x - x.mean()) * (y - y.mean())).sum()) / sxx
    resid = y - (y.mean() + slope * (x - x.mean()))
    rss = float((resid**2).sum())
    threshold = 1e-8 * max(1.0, float(np.abs(y).max()))
    if rss <= 1e-24 * max(1.0, float((y**2).sum())):
        return abs(slope) < threshold
    se = np.sqrt(rss / (n - 2) / sxx)
    upper_bound = abs(slope) + float(sps.t.ppf(1.0 - alpha, n - 2)) * se
    return bool(upper_bound < threshold)


def ocd_update(state: OCDState, generation_values: dict[str, float]) -> Decision:
    """Feed one generation's indicator values; returns the stop decision.

    A generation scores a hit when all tracked indicators pass the variance
    test, or all have a statistically zero trend.  Two consecutive hits
    terminate the run, which cannot happen before generation window + 1.
    """
    params = state.params
    missing = set(params.indicators) - set(generation_values)
    if missing:
        raise ValueError(f"missing indicator values: {sorted(missing)}")
    for name in params.indicators:
        value = float(generation_values[name])
        if not np.isfinite(value):
            raise ValueError(f"non-finite value for indicator {name!r}")
        state.buffers[name].append(value)
    state.generations += 1

    if state.generations < params.window:
        return Decision.CONTINUE

    all_variance = True
    all_slope = True
    for name in params.indicators:
        window = np.array(state.buffers[name])
        if not variance_below_limit(window, params.var_limit, params.alpha):
            all_variance = False
        if not slope_is_zero(window, params.alpha):
            all_slope = False
        if not (all_variance or all_slope):
            break

    if all_variance or all_slope:
        state.consecutive_hits += 1
    else:
        state.consecutive_hits = 0
    if state.consecutive_hits >= 2:
        return Decision.CONVERGED
    return Decision.CONTINUE


@dataclass
class StagnationState:
    """Window of (min, mean, max) population fitness triples."""

    window: int
    triples: deque = field(init=False)

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError("window must be at least 2")
        self.triples = deque(maxlen=self.window)


def so_convergence(
    state: StagnationState,
    min_mean_max: tuple[float, float, float],
    window: int | None = None,
    tol: float = 1e-9,
) -> Decision:
    """Stagnation check: every series' spread over the window below ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if window is not None and window != state.window:
        raise ValueError("window does not match the tracked state")
    state.triples.append(tuple(float(v) for v in min_mean_max))
    if len(state.triples) < state.window:
        return Decision.CONTINUE
    series = np.array(state.triples)
    spread = series.max(axis=0) - series.min(axis=0)
    if np.all(spread < tol):
        return Decision.CONVERGED
    return Decision.CONTINUE


class RunIndicatorTracker:
    """Per-generation quality of the sliding non-dominated union.

    The measured set each generation is the non-dominated union of every
    objective vector seen so far; it is compared against the first
    generation's union as a fixed baseline.  The [1, 2] normalization is
    frozen once the detection window first fills, so later values share
    one scale.  While the run improves the series trend; once the archive
    stalls they are exactly constant.
    """

    REF_OFFSET = 0.1

    def __init__(self, n_objectives: int, window: int = 10, r2_subdivisions: int = 20):
        if window < 1:
            raise ValueError("window must be at least one generation")
        self.m = n_objectives
        self.window = window
        self.archive: np.ndarray | None = None
        self.weights = simplex_lattice_weights(n_objectives, r2_subdivisions)
        self.baseline: np.ndarray | None = None
        self.transform = None
        self.generations = 0

    def observe(self, point: np.ndarray) -> None:
        """Add one evaluated objective vector to the running archive."""
        p = np.asarray(point, dtype=float).reshape(1, -1)
        if self.archive is None:
            self.archive = p.copy()
            return
        dominated = np.all(self.archive <= p, axis=1) & np.any(self.archive < p, axis=1)
        if np.any(dominated) or any(np.array_equal(row, p[0]) for row in self.archive):
            return
        keep = ~(np.all(p <= self.archive, axis=1) & np.any(p < self.archive, axis=1))
        self.archive = np.vstack([self.archive[keep], p])

    def generation_values(self) -> dict[str, float]:
        """Indicator triple (hv, eps, r2) of the current archive."""
        if self.archive is None:
            raise RuntimeError("no observations recorded yet")
        self.generations += 1
        if self.baseline is None:
            self.baseline = self.archive.copy()
        transform = self.transform
        if transform is None:
            transform = fit_normalize_transform(np.vstack([self.archive, self.baseline]))
            if self.generations == self.window:
                self.transform = transform
        archive_norm = transform.apply(self.archive)
        base_norm = transform.apply(self.baseline)
        ref_point = np.full(self.m, 2.0 + self.REF_OFFSET)
        hv_val = hypervolume(archive_norm, ref_point)
        eps_val = eps_indicator(
            FrontSet(archive_norm, "archive"), FrontSet(base_norm, "baseline")
        )
        ideal = np.minimum(archive_norm.min(axis=0), base_norm.min(axis=0)) - 0.01
        r2_val = r2_indicator(FrontSet(archive_norm, "archive"), self.weights, ideal)
        return {"hv": hv_val, "eps": eps_val, "r2": r2_val}

"""Confidence intervals and the sample-size study used to pick how many
games per evaluation and how many optimizer runs per approach."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class CIResult:
    """Two-sided t confidence interval for a mean: center and halfwidth."""

    mean: float
    halfwidth: float
    n: int
    alpha: float


@dataclass(frozen=True)
class SampleSizeRow:
    sample_size: int
    metric: str
    halfwidth_q95: float


@dataclass(frozen=True)
class SampleSizeTable:
    rows: tuple[SampleSizeRow, ...]

    def for_metric(self, metric: str) -> list[SampleSizeRow]:
        return [r for r in self.rows if r.metric == metric]

    def write_csv(self, path) -> None:
        lines = ["size,metric,halfwidth_q95"]
        for r in self.rows:
            lines.append(f"{r.sample_size},{r.metric},{r.halfwidth_q95!r}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def t_quantile(prob: float, dof: int) -> float:
    """Student-t quantile (via the regularized incomplete beta inverse)."""
    if dof < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return float(sps.t.ppf(prob, dof))


def ci_halfwidth(samples: Sequence[float], alpha: float = 0.05) -> CIResult:
    """Halfwidth of the two-sided (1 - alpha) t interval for the mean."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples for a confidence interval")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    sd = float(np.std(x, ddof=1))
    half = t_quantile(1.0 - alpha / 2.0, n - 1) * sd / np.sqrt(n)
    return CIResult(mean=float(x.mean()), halfwidth=half, n=n, alpha=alpha)


# A sampler draws `size` per-observation metric values (e.g. one win
# indicator per simulated game) so each repeat yields its own interval.
MetricSampler = Callable[[int, np.random.Generator], np.ndarray]


def sample_size_study(
    sampler: MetricSampler,
    sizes: Sequence[int],
    repeats: int,
    alpha: float,
    rng: np.random.Generator,
    metric: str = "metric",
) -> SampleSizeTable:
    """For each sample size, the .95 quantile of the CI halfwidth over repeats.

    Each repeat draws a fresh size-long sample, computes its t interval,
    and the upper quantile of those halfwidths is reported as the accuracy
    attainable at that size.
    """
    if repeats < 2:
        raise ValueError("need at least two repeats")
    rows = []
    for size in sizes:
        halfwidths = np.empty(repeats)
        for r in range(repeats):
            values = np.asarray(sampler(int(size), rng), dtype=float)
            if values.size != size:
                raise ValueError(
                    f"sampler returned {values.size} values for requested size {size}"
                )
            halfwidths[r] = ci_halfwidth(values, alpha).halfwidth
        q95 = float(np.quantile(halfwidths, 0.95))
        rows.append(SampleSizeRow(sample_size=int(size), metric=metric, halfwidth_q95=q95))
    return SampleSizeTable(tuple(rows))


def playtest_feasibility(
    sd_vector: Sequence[float],
    players: int,
    games_each: int,
    alpha: float = 0.05,
) -> np.ndarray:
    """Per-metric CI halfwidths from a human-playtest budget.

    With n = players * games_each observations per metric and the given
    per-game standard deviations, this is the accuracy a survey could reach.
    """
    n = players * games_each
    if n < 2:
        raise ValueError("need at least two observations in total")
    sd = np.asarray(sd_vector, dtype=float)
    return t_quantile(1.0 - alpha / 2.0, n - 1) * sd / np.sqrt(n)

"""Empirical attainment functions over groups of optimizer runs.

The attainment function of a run group maps a goal point to the fraction
of runs whose front reaches it (some front point weakly dominates it).
Because these functions are piecewise constant with breakpoints only at
observed coordinates, surfaces and the two-group test statistic are exact
when evaluated on the grid of componentwise coordinate combinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trumpbench.indicators import FrontSet

# Refuse to materialize evaluation grids beyond this many cells.
MAX_GRID_CELLS = 50_000_000


@dataclass(frozen=True)
class RunGroup:
    """The fronts of repeated optimizer runs under one label."""

    fronts: tuple[FrontSet, ...]
    label: str

    def __post_init__(self) -> None:
        if len(self.fronts) < 1:
            raise ValueError("a run group needs at least one run")
        dims = {f.m for f in self.fronts}
        if len(dims) != 1:
            raise ValueError(f"fronts disagree on objective count: {sorted(dims)}")

    @property
    def m(self) -> int:
        return self.fronts[0].m

    def __len__(self) -> int:
        return len(self.fronts)


@dataclass(frozen=True)
class EAFTestResult:
    """Two-group attainment comparison via random label permutations."""

    statistic: float
    critical_value: float
    p_value: float
    permutations: int
    alpha: float
    reject: bool
    seed: int | None = None


def eaf_value(group: RunGroup, z) -> float:
    """Fraction of the group's runs whose front weakly dominates ``z``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (group.m,):
        raise ValueError(f"goal point must have {group.m} coordinates")
    attained = sum(bool(np.all(f.points <= z, axis=1).any()) for f in group.fronts)
    return attained / len(group)


def _axes(point_sets: list[np.ndarray]) -> list[np.ndarray]:
    stacked = np.vstack(point_sets)
    return [np.unique(stacked[:, d]) for d in range(stacked.shape[1])]


def _grid_shape(axes: list[np.ndarray]) -> tuple[int, ...]:
    shape = tuple(len(a) for a in axes)
    cells = int(np.prod(shape))
    if cells > MAX_GRID_CELLS:
        raise ValueError(
            f"evaluation grid of {cells} cells exceeds the supported size; "
            "reduce the number of distinct coordinates"
        )
    return shape

def _attained_grid(points: np.ndarray, axes: list[np.ndarray]) -> np.ndarray:
    """Boolean grid: cell z is True when some point is <= z componentwise."""
    shape = tuple(len(a) for a in axes)
    attained = np.zeros(shape, dtype=bool)
    for p in points:
        idx = tuple(int(np.searchsorted(axes[d], p[d], side="left")) for d in range(len(axes)))
        attained[tuple(slice(i, None) for i in idx)] = True
    return attained


def attainment_surface(group: RunGroup, level: float) -> FrontSet:
    """Minimal goal points attained by at least ``level`` of the runs.

    Evaluated on the grid of componentwise combinations of coordinates
    occurring in the group; the result is a mutually non-dominated set.
    """
    if not 0.0 < level <= 1.0:
        raise ValueError("level must lie in (0, 1]")
    axes = _axes([f.points for f in group.fronts])
    shape = _grid_shape(axes)
    counts = np.zeros(shape, dtype=np.int32)
    for front in group.fronts:
        counts += _attained_grid(front.points, axes)
    needed = level * len(group) - 1e-9
    eligible = counts >= needed

    # The eligible region is upward closed, so a cell is minimal exactly
    # when no single-coordinate step down stays eligible.
    dominated_from_below = np.zeros(shape, dtype=bool)
    for d in range(len(axes)):
        shifted = np.zeros(shape, dtype=bool)
        src = [slice(None)] * len(axes)
        dst = [slice(None)] * len(axes)
        src[d] = slice(None, -1)
        dst[d] = slice(1, None)
        shifted[tuple(dst)] = eligible[tuple(src)]
        dominated_from_below |= shifted
    minimal = eligible & ~dominated_from_below
    idx = np.argwhere(minimal)
    points = np.column_stack([axes[d][idx[:, d]] for d in range(len(axes))])
    return FrontSet(points, origin=f"{group.label}_{level:g}")


def _pattern_matrix(groups: list[RunGroup]) -> np.ndarray:
    """Distinct per-cell attainment patterns across all runs, (patterns, runs).

    Collapsing identical grid columns keeps the permutation loop exact while
    shrinking it to at most 2^runs patterns.
    """
    fronts = [f.points for g in groups for f in g.fronts]
    axes = _axes(fronts)
    shape = _grid_shape(axes)
    n_cells = int(np.prod(shape))
    per_run = np.empty((len(fronts), n_cells), dtype=bool)
    for r, pts in enumerate(fronts):
        per_run[r] = _attained_grid(pts, axes).reshape(-1)
    packed = np.packbits(per_run, axis=0)
    uniq = np.unique(packed, axis=1)
    return np.unpackbits(uniq, axis=0, count=len(fronts)).astype(bool).T


def eaf_test(
    group_a: RunGroup,
    group_b: RunGroup,
    permutations: int = 10_000,
    alpha: float = 0.05,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> EAFTestResult:
    """Compare two attainment functions with a KS-style permutation test.

    The statistic is the largest absolute attainment difference over the
    joint evaluation grid; its null distribution comes from random
    reassignments of run labels with group sizes preserved.
    """
    if len(group_a) < 2 or len(group_b) < 2:
        raise ValueError("both groups need at least two runs")
    if group_a.m != group_b.m:
        raise ValueError("groups must share the objective count")
    if permutations < 1:
        raise ValueError("need at least one permutation")
    if rng is None:
        rng = np.random.default_rng(seed)

    patterns = _pattern_matrix([group_a, group_b])
    n_a = len(group_a)
    n_total = n_a + len(group_b)

    def statistic(order: np.ndarray) -> float:
        part_a = patterns[:, order[:n_a]].mean(axis=1)
        part_b = patterns[:, order[n_a:]].mean(axis=1)
        return float(np.abs(part_a - part_b).max())

    observed = statistic(np.arange(n_total))
    null_stats = np.empty(permutations)
    for b in range(permutations):
        null_stats[b] = statistic(rng.permutation(n_total))

    p_value = float(np.mean(null_stats >= observed - 1e-12))
    critical_value = _critical_value(null_stats, alpha)
    reject = p_value < alpha
    if reject != (observed > critical_value + 1e-12):
        raise AssertionError("inconsistent permutation-test decision rule")
    return EAFTestResult(
        statistic=observed,
        critical_value=critical_value,
        p_value=p_value,
        permutations=permutations,
        alpha=alpha,
        reject=reject,
        seed=seed,
    )


def _critical_value(null_stats: np.ndarray, alpha: float) -> float:
    """Smallest observed null value whose strict upper tail is below alpha."""
    n = null_stats.size
    for c in np.unique(null_stats):
        if np.sum(null_stats > c + 1e-12) < alpha * n:
            return float(c)
    return float(null_stats.max())


def set_strictly_dominates(first, second) -> bool:
    """True iff every point of ``second`` is strictly dominated by some point of ``first``."""
    a = np.atleast_2d(np.asarray(first.points if isinstance(first, FrontSet) else first, float))
    b = np.atleast_2d(np.asarray(second.points if isinstance(second, FrontSet) else second, float))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("set dominance needs non-empty sets")
    strictly = np.all(a[:, None, :] < b[None, :, :], axis=2)
    return bool(strictly.any(axis=0).all())

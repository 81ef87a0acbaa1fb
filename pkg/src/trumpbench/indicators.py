"""Unary quality indicators for minimization fronts plus the shared
normalization onto [1, 2] used before comparing optimizer output."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from trumpbench.hv import union_box_volume


def prune_to_front(points: np.ndarray) -> np.ndarray:
    """Unique points of a set that are not weakly dominated by another point.

    Weak dominance: a <= b in every coordinate with a != b.  Exact
    duplicates are collapsed to one representative.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        return pts.copy()
    uniq = np.unique(pts, axis=0)
    n = uniq.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = np.all(uniq <= uniq[i], axis=1)
        lt = np.any(uniq < uniq[i], axis=1)
        dominated_by = le & lt
        dominated_by[i] = False
        if np.any(dominated_by & keep):
            keep[i] = False
    return uniq[keep]


@dataclass(frozen=True, eq=False)
class FrontSet:
    """A mutually non-dominated point set tagged with its originating run."""

    points: np.ndarray
    origin: str = ""

    def __post_init__(self) -> None:
        pruned = prune_to_front(self.points)
        pruned.setflags(write=False)
        object.__setattr__(self, "points", pruned)

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrontSet):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.points, other.points)


class IndicatorKind(enum.Enum):
    HV = "hv"
    EPS = "eps"
    R2 = "r2"


@dataclass(frozen=True)
class IndicatorValue:
    """One indicator measurement and a note about the reference it used."""

    kind: IndicatorKind
    value: float
    reference: str = ""

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError("indicator values must be finite")


def hypervolume(points, ref) -> float:
    """Exact hypervolume of a minimization front w.r.t. ``ref`` (m <= 3).

    Points not strictly below the reference contribute nothing and are
    dropped with a warning.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float)
    if pts.shape[1] > 3:
        raise ValueError(f"exact hypervolume supports up to 3 objectives, got {pts.shape[1]}")
    keep = np.all(pts < ref, axis=1)
    if not np.all(keep):
        warnings.warn(
            f"{int((~keep).sum())} point(s) do not strictly dominate the reference "
            "point and are ignored",
            stacklevel=2,
        )
    if not np.any(keep):
        return 0.0
    return union_box_volume(ref - pts[keep])


def hv_indicator(front: FrontSet, refset: FrontSet, ref) -> float:
    """Hypervolume missed by ``front`` relative to ``refset`` (smaller is better)."""
    return hypervolume(refset.points, ref) - hypervolume(front.points, ref)


def eps_indicator(front: FrontSet, refset: FrontSet) -> float:
    """Additive epsilon: smallest shift making ``front`` weakly dominate ``refset``."""
    a = front.points
    r = refset.points
    if a.shape[0] == 0 or r.shape[0] == 0:
        raise ValueError("epsilon indicator needs non-empty sets")
    if a.shape[1] != r.shape[1]:
        raise ValueError("sets must share the objective count")
    # For each reference point: the best achievable worst-coordinate shift.
    diffs = a[:, None, :] - r[None, :, :]
    return float(diffs.max(axis=2).min(axis=0).max())


def eps_dominance_check(front: FrontSet, refset: FrontSet) -> bool:
    """True iff every reference point is weakly dominated by some front point."""
    a = front.points
    r = refset.points
    le = np.all(a[:, None, :] <= r[None, :, :], axis=2)
    return bool(le.any(axis=0).all())


def simplex_lattice_weights(m: int, subdivisions: int = 20) -> np.ndarray:
    """All nonnegative weight vectors with components k/subdivisions summing to 1."""
    if m < 1 or subdivisions < 1:
        raise ValueError("need m >= 1 and subdivisions >= 1")
    rows = []
    for combo in combinations_with_replacement(range(m), subdivisions):
        counts = np.bincount(np.array(combo), minlength=m)
        rows.append(counts / subdivisions)
    return np.unique(np.array(rows), axis=0)


def r2_indicator(front: FrontSet, weights: np.ndarray, ideal) -> float:
    """Mean over weight vectors of the best weighted Tchebycheff utility."""
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[0] == 0:
        raise ValueError("need at least one weight vector")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.allclose(w.sum(axis=1), 1.0):
        raise ValueError("each weight vector must sum to 1")
    a = front.points
    if a.shape[0] == 0:
        raise ValueError("front must be non-empty")
    ideal = np.asarray(ideal, dtype=float)
    dist = np.abs(a - ideal)  # (nA, m)
    # utility[w, a] = max_j w_j * |a_j - ideal_j|
    utility = (w[:, None, :] * dist[None, :, :]).max(axis=2)
    return float(utility.min(axis=1).mean())


@dataclass(frozen=True)
class NormalizeTransform:
    """Per-objective affine map sending observed min to 1 and max to 2."""

    lo: np.ndarray
    span: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones_like(pts)
        nz = self.span > 0
        out[:, nz] = 1.0 + (pts[:, nz] - self.lo[nz]) / self.span[nz]
        return out


def fit_normalize_transform(points: np.ndarray) -> NormalizeTransform:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    return NormalizeTransform(lo=lo, span=span)


def normalize_sets(sets: list[FrontSet]) -> tuple[list[FrontSet], NormalizeTransform]:
    """Map all sets jointly onto [1, 2] per objective; constant objectives go to 1."""
    if not sets or all(len(s) == 0 for s in sets):
        raise ValueError("need at least one point to normalize")
    stacked = np.vstack([s.points for s in sets if len(s)])
    transform = fit_normalize_transform(stacked)
    normalized = [FrontSet(transform.apply(s.points), origin=s.origin) for s in sets]
    return normalized, transform


def write_front_csv(front: FrontSet, path) -> None:
    """Write one point per row under a ``f1,...,fm`` header."""
    m = front.m
    lines = [",".join(f"f{j + 1}" for j in range(m))]
    for row in front.points:
        lines.append(",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_front_csv(path, origin: str | None = None) -> FrontSet:
    """Read a front file written by write_front_csv."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: front file needs a header and at least one point")
    m = len(lines[0].split(","))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != m:
            raise ValueError(f"{path}, line {lineno}: expected {m} values")
        rows.append([float(x) for x in fields])
    return FrontSet(np.array(rows), origin=origin if origin is not None else str(path))

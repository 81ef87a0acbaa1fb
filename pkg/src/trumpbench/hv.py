"""Exact hypervolume computation shared by objectives, selection and
quality indicators.

Everything here works on the canonical "union of boxes anchored at the
origin" problem: given points ``p_1..p_n`` with nonnegative coordinates,
compute the volume of ``union_i [0, p_i]``.  Minimization-oriented fronts
are mapped onto this form by reflecting through their reference point.
"""

from __future__ import annotations

import numpy as np


def union_box_volume(points: np.ndarray) -> float:
    """Volume of the union of axis-aligned boxes spanned from the origin.

    ``points`` is an (n, m) array of box corners with all coordinates >= 0.
    Exact for any dimension via a recursive sweep over the last coordinate;
    cost grows as O(n^(m-1) log n), intended for m <= 4 at the sizes used
    here.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n, m = pts.shape
    if n == 0:
        return 0.0
    if np.any(pts < 0):
        raise ValueError("union_box_volume requires nonnegative coordinates")
    if m == 1:
        return float(pts[:, 0].max())
    if m == 2:
        return _volume_2d(pts)
    return _volume_sweep(pts)


def _volume_2d(pts: np.ndarray) -> float:
    # Staircase sweep: sort by x descending, accumulate the running max y.
    order = np.argsort(-pts[:, 0], kind="stable")
    x = pts[order, 0]
    y = np.maximum.accumulate(pts[order, 1])
    widths = x - np.append(x[1:], 0.0)
    return float(widths @ y)


def _volume_sweep(pts: np.ndarray) -> float:
    # Slice along the last coordinate; each slab contributes its height
    # times the (m-1)-dimensional volume of the boxes reaching that high.
    last = pts[:, -1]
    order = np.argsort(-last, kind="stable")
    sorted_last = last[order]
    proj = pts[order, :-1]
    heights = sorted_last - np.append(sorted_last[1:], 0.0)
    vol = 0.0
    for i in range(len(order)):
        h = heights[i]
        if h == 0.0:
            continue
        prefix = proj[: i + 1]
        if prefix.shape[1] == 2:
            vol += h * _volume_2d(prefix)
        elif prefix.shape[1] == 1:
            vol += h * float(prefix[:, 0].max())
        else:
            vol += h * _volume_sweep(prefix)
    return vol


def hypervolume_min(points: np.ndarray, ref: np.ndarray) -> float:
    """Hypervolume of a minimization front w.r.t. ``ref``.

    Points not strictly below ``ref`` in every coordinate enclose no volume
    and are ignored.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float)
    keep = np.all(pts < ref, axis=1)
    if not np.any(keep):
        return 0.0
    return union_box_volume(ref - pts[keep])


def leave_one_out_contributions(points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Per-point hypervolume contribution of a minimization front.

    contribution[i] = HV(points) - HV(points without i).  Every point must
    strictly dominate ``ref``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float)
    if not np.all(pts < ref):
        raise ValueError("every point must be strictly below the reference point")
    boxes = ref - pts
    total = union_box_volume(boxes)
    n = boxes.shape[0]
    if n == 1:
        return np.array([total])
    contrib = np.empty(n)
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        contrib[i] = total - union_box_volume(boxes[mask])
        mask[i] = True
    # Exact arithmetic would never go negative; guard against float noise.
    np.maximum(contrib, 0.0, out=contrib)
    return contrib

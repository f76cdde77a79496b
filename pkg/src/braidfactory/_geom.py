"""Vectorized integer-grid segment geometry shared by metrics and annealing."""

from __future__ import annotations

import numpy as np


def _cross(ox, oy, ax, ay, bx, by):
    """Cross product (a-o) x (b-o), elementwise."""
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    """Closed-segment intersection test, broadcast elementwise.

    Inputs are (..., 2) integer arrays; exact arithmetic.  Touching at a
    point and collinear overlap both count.
    """
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    q1 = np.asarray(q1)
    q2 = np.asarray(q2)
    d1 = _cross(q1[..., 0], q1[..., 1], q2[..., 0], q2[..., 1], p1[..., 0], p1[..., 1])
    d2 = _cross(q1[..., 0], q1[..., 1], q2[..., 0], q2[..., 1], p2[..., 0], p2[..., 1])
    d3 = _cross(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], q1[..., 0], q1[..., 1])
    d4 = _cross(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], q2[..., 0], q2[..., 1])
    proper = (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (
        ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
    )
    touch = (
        ((d1 == 0) & _on_segment(q1, q2, p1))
        | ((d2 == 0) & _on_segment(q1, q2, p2))
        | ((d3 == 0) & _on_segment(p1, p2, q1))
        | ((d4 == 0) & _on_segment(p1, p2, q2))
    )
    return proper | touch


def _on_segment(a, b, p) -> np.ndarray:
    """Assuming p collinear with segment ab: is p within the bounding box?"""
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.all((p >= lo) & (p <= hi), axis=-1)


def count_crossings(seg_a: np.ndarray, seg_b: np.ndarray, end_u: np.ndarray, end_v: np.ndarray) -> int:
    """Number of unordered segment pairs that intersect.

    ``seg_a``/``seg_b`` are (m, 2) endpoint coordinates, ``end_u``/``end_v``
    the endpoint vertex indices used to exclude pairs sharing a vertex.
    Runs one vectorized row per segment (O(m^2) work, O(m) memory).
    """
    m = len(seg_a)
    total = 0
    for i in range(m - 1):
        hits = segments_intersect(seg_a[i], seg_b[i], seg_a[i + 1 :], seg_b[i + 1 :])
        shared = (
            (end_u[i + 1 :] == end_u[i])
            | (end_u[i + 1 :] == end_v[i])
            | (end_v[i + 1 :] == end_u[i])
            | (end_v[i + 1 :] == end_v[i])
        )
        total += int(np.count_nonzero(hits & ~shared))
    return total


def crossings_of_one(
    idx: int, seg_a: np.ndarray, seg_b: np.ndarray, end_u: np.ndarray, end_v: np.ndarray
) -> int:
    """Crossings between segment ``idx`` and all other segments."""
    hits = segments_intersect(seg_a[idx], seg_b[idx], seg_a, seg_b)
    shared = (
        (end_u == end_u[idx])
        | (end_u == end_v[idx])
        | (end_v == end_u[idx])
        | (end_v == end_v[idx])
    )
    hits &= ~shared
    hits[idx] = False
    return int(np.count_nonzero(hits))


def pairwise_midpoint_distance_sum(mids: np.ndarray) -> float:
    """Sum of Euclidean distances over all unordered midpoint pairs."""
    total = 0.0
    for i in range(len(mids) - 1):
        d = mids[i + 1 :] - mids[i]
        total += float(np.sqrt((d * d).sum(axis=1)).sum())
    return total

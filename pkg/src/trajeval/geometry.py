"""Exact 2D segment-segment minimum distance and agent-pair collision tests.

Two moving agents collide when, at some timestep, the motion segments they
trace during that step come within twice the agent radius of each other.  Only
same-timestep segments are compared; ties at exactly the threshold count as no
collision.  Everything here is pure and stateless; the batch entry points are
what the metrics layer uses to stay fast on large corpora.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ShapeError

_TINY = 1e-300  # guard for zero-length segment denominators


class Segment(NamedTuple):
    a: tuple[float, float]
    b: tuple[float, float]


def _point_segment_distance(p, a, b):
    """Distance from points ``p`` to closed segments ``(a, b)``, all (..., 2)."""
    ab = b - a
    denom = np.einsum("...i,...i", ab, ab)
    t = np.einsum("...i,...i", p - a, ab) / np.maximum(denom, _TINY)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def segment_distance_batch(a1, b1, a2, b2) -> np.ndarray:
    """Minimum distances between closed segments (a1,b1) and (a2,b2), shapes (..., 2).

    Zero exactly when a pair properly crosses; touching or collinear-overlap
    configurations reduce to an endpoint lying on the other segment, which the
    point-segment distances capture.
    """
    a1, b1, a2, b2 = (np.asarray(x, dtype=np.float64) for x in (a1, b1, a2, b2))
    u = b1 - a1
    v = b2 - a2
    d1 = _cross(u, a2 - a1)
    d2 = _cross(u, b2 - a1)
    d3 = _cross(v, a1 - a2)
    d4 = _cross(v, b1 - a2)
    crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
    dist = np.minimum.reduce([
        _point_segment_distance(a1, a2, b2),
        _point_segment_distance(b1, a2, b2),
        _point_segment_distance(a2, a1, b1),
        _point_segment_distance(b2, a1, b1),
    ])
    return np.where(crossing, 0.0, dist)


def segment_distance(s1: Segment, s2: Segment) -> float:
    """Exact Euclidean minimum distance between two closed 2D segments.

    Degenerate (point) segments are fine; the result is symmetric and zero iff
    the segments intersect.
    """
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    if s1.shape != (2, 2) or s2.shape != (2, 2):
        raise ShapeError(f"segments must be pairs of 2D points, got {s1.shape} and {s2.shape}",
                         expected=(2, 2), actual=(s1.shape, s2.shape))
    if not (np.isfinite(s1).all() and np.isfinite(s2).all()):
        raise ValueError("segment endpoints must be finite")
    return float(segment_distance_batch(s1[0], s1[1], s2[0], s2[1]))


def agents_collide(track_n, track_m, radius_b: float) -> bool:
    """True iff two equal-length tracks pass within ``2 * radius_b`` of each other.

    Compares the same-timestep motion segments of the two tracks; for a single
    timestep, compares the points themselves.  The comparison is strict, so a
    pair at exactly the threshold does not collide.
    """
    track_n = np.asarray(track_n, dtype=np.float64)
    track_m = np.asarray(track_m, dtype=np.float64)
    if track_n.shape != track_m.shape or track_n.ndim != 2 or track_n.shape[1] != 2:
        raise ShapeError(
            f"tracks must share shape (T, 2), got {track_n.shape} and {track_m.shape}",
            expected=track_n.shape, actual=track_m.shape)
    if track_n.shape[0] < 1:
        raise ShapeError("tracks must have at least one timestep",
                         expected="(T>=1, 2)", actual=track_n.shape)
    if not radius_b > 0:
        raise ValueError(f"radius_b must be > 0, got {radius_b}")
    if track_n.shape[0] == 1:
        return bool(np.linalg.norm(track_n[0] - track_m[0]) < 2.0 * radius_b)
    d = segment_distance_batch(track_n[:-1], track_n[1:], track_m[:-1], track_m[1:])
    return bool((d < 2.0 * radius_b).any())


def sample_collision_flags(sample, radius_b: float) -> np.ndarray:
    """Per-agent collision indicators for one joint sample of shape (N, T, 2).

    ``flags[n]`` is True when agent n collides with at least one other agent.
    Vectorized over all agent pairs and timesteps.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim != 3 or sample.shape[2] != 2:
        raise ShapeError(f"sample must have shape (N, T, 2), got {sample.shape}",
                         expected=("N", "T", 2), actual=sample.shape)
    if not radius_b > 0:
        raise ValueError(f"radius_b must be > 0, got {radius_b}")
    n_agents, t_len = sample.shape[:2]
    flags = np.zeros(n_agents, dtype=bool)
    if n_agents < 2:
        return flags
    ii, jj = np.triu_indices(n_agents, k=1)
    if t_len == 1:
        dmin = np.linalg.norm(sample[ii, 0] - sample[jj, 0], axis=-1)
    else:
        d = segment_distance_batch(sample[ii, :-1], sample[ii, 1:],
                                   sample[jj, :-1], sample[jj, 1:])
        dmin = d.min(axis=1)
    hit = dmin < 2.0 * radius_b
    np.logical_or.at(flags, ii, hit)
    np.logical_or.at(flags, jj, hit)
    return flags

"""Shared generators for randomized tests."""
from __future__ import annotations

import numpy as np


def random_instance(rng: np.random.Generator, kmax: int = 20, nmax: int = 10,
                    tmax: int = 12, scale: float = 3.0):
    """A random (pred, gt) pair with shapes (K, N, T, 2) and (N, T, 2)."""
    k = int(rng.integers(1, kmax + 1))
    n = int(rng.integers(1, nmax + 1))
    t = int(rng.integers(1, tmax + 1))
    pred = scale * rng.standard_normal((k, n, t, 2))
    gt = scale * rng.standard_normal((n, t, 2))
    return pred, gt


def random_tracks(rng: np.random.Generator, t: int = 12, step_scale: float = 0.35,
                  spread: float = 2.0):
    """Two random smooth tracks of length ``t`` (random walks from random starts)."""
    starts = spread * rng.standard_normal((2, 2))
    steps = step_scale * rng.standard_normal((2, t - 1, 2)) if t > 1 else np.zeros((2, 0, 2))
    tracks = np.concatenate([starts[:, None, :],
                             starts[:, None, :] + np.cumsum(steps, axis=1)], axis=1)
    return tracks[0], tracks[1]


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])

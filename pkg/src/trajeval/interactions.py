"""Heuristic per-agent interaction categories: group, leader-follower,
collision-avoidance, static.

An agent is labeled with a category when it interacts that way with at least
one other agent over the full evaluation window; the categories overlap, so an
agent may carry none, one, or several labels.  All thresholds are exposed and
loadable from a flat key=value config file.  Agents below the static
displacement threshold have no defined heading and are excluded from the
heading-based categories.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .geometry import sample_collision_flags
from .trajdata import PredictionSet, Sequence

CATEGORIES = ("group", "leader_follower", "collision_avoidance", "static")


@dataclass(frozen=True)
class InteractionThresholds:
    """Distance (scene units), angle (degrees), and speed-ratio cutoffs."""

    d_group: float = 2.0
    theta_parallel: float = 15.0
    d_lf_lateral: float = 0.5
    lf_gap_range: tuple[float, float] = (0.3, 3.0)
    d_ca: float = 1.0
    theta_nonparallel: float = 15.0
    static_disp: float = 0.5
    speed_ratio_band: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        for name in ("d_group", "d_lf_lateral", "d_ca", "static_disp"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("theta_parallel", "theta_nonparallel"):
            v = getattr(self, name)
            if not 0 < v < 180:
                raise ValueError(f"{name} must lie in (0, 180) degrees, got {v}")
        for name in ("lf_gap_range", "speed_ratio_band"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be (lo, hi) with lo <= hi")


@dataclass(frozen=True)
class InteractionLabels:
    """Per-agent boolean category membership, aligned with the sequence's agents."""

    agent_ids: tuple[int, ...]
    group: tuple[bool, ...]
    leader_follower: tuple[bool, ...]
    collision_avoidance: tuple[bool, ...]
    static: tuple[bool, ...]

    def members(self, category: str) -> np.ndarray:
        return np.asarray(getattr(self, category), dtype=bool)


def _heading_deg_diff(h1, h2) -> float:
    cosang = float(np.clip(np.dot(h1, h2), -1.0, 1.0))
    return float(np.degrees(np.arccos(cosang)))


def classify(seq: Sequence, thr: InteractionThresholds = InteractionThresholds()) -> InteractionLabels:
    """Label every agent of a sequence using its full observed+future track."""
    track = seq.full_track()                      # (N, L, 2)
    n = track.shape[0]
    disp_vec = track[:, -1] - track[:, 0]
    disp = np.linalg.norm(disp_vec, axis=1)
    static = disp < thr.static_disp
    moving = ~static
    heading = np.zeros_like(disp_vec)
    heading[moving] = disp_vec[moving] / disp[moving, None]
    steps = np.diff(track, axis=1)
    speed = np.linalg.norm(steps, axis=2).mean(axis=1)

    # same-frame pairwise distances, (N, N, L)
    dists = np.linalg.norm(track[:, None] - track[None, :], axis=3)
    mean_dist = dists.mean(axis=2)
    min_dist = dists.min(axis=2)
    rel_mean = (track[:, None] - track[None, :]).mean(axis=2)   # mean of p_n - p_m

    group = np.zeros(n, dtype=bool)
    leader_follower = np.zeros(n, dtype=bool)
    collision_avoidance = np.zeros(n, dtype=bool)
    lo_gap, hi_gap = thr.lf_gap_range
    lo_ratio, hi_ratio = thr.speed_ratio_band
    for i in range(n):
        if static[i]:
            continue
        for j in range(n):
            if j == i or static[j]:
                continue
            hdiff = _heading_deg_diff(heading[i], heading[j])
            if hdiff < thr.theta_parallel:
                ratio = speed[i] / speed[j] if speed[j] > 0 else np.inf
                if mean_dist[i, j] < thr.d_group and lo_ratio <= ratio <= hi_ratio:
                    group[i] = True
                r = rel_mean[i, j]
                longitudinal = abs(float(np.dot(r, heading[j])))
                lateral = abs(float(r[0] * heading[j][1] - r[1] * heading[j][0]))
                if lateral < thr.d_lf_lateral and lo_gap <= longitudinal <= hi_gap:
                    leader_follower[i] = True
            elif hdiff > thr.theta_nonparallel and min_dist[i, j] < thr.d_ca:
                collision_avoidance[i] = True

    return InteractionLabels(
        agent_ids=seq.agent_ids,
        group=tuple(bool(v) for v in group),
        leader_follower=tuple(bool(v) for v in leader_follower),
        collision_avoidance=tuple(bool(v) for v in collision_avoidance),
        static=tuple(bool(v) for v in static),
    )


def category_stats(seqs: list[Sequence],
                   thr: InteractionThresholds = InteractionThresholds()) -> dict[str, float]:
    """Agent-weighted proportion of agents in each category across all sequences."""
    if not seqs:
        raise ValueError("category_stats needs at least one sequence")
    counts = {c: 0 for c in CATEGORIES}
    total = 0
    for seq in seqs:
        labels = classify(seq, thr)
        total += seq.num_agents
        for c in CATEGORIES:
            counts[c] += int(labels.members(c).sum())
    return {c: counts[c] / total for c in CATEGORIES}


def cr_by_category(pred_map: dict[str, PredictionSet], seqs: list[Sequence],
                   thr: InteractionThresholds = InteractionThresholds(),
                   radius_b: float = 0.1) -> dict[str, float | None]:
    """Mean collision rate restricted to the agents of each category.

    Pools (agent, sample) indicators across sequences; a category with no
    members anywhere reports None.
    """
    hits = {c: 0 for c in CATEGORIES}
    counts = {c: 0 for c in CATEGORIES}
    for seq in seqs:
        pred = pred_map.get(seq.sequence_id)
        if pred is None:
            continue
        labels = classify(seq, thr)
        members = {c: labels.members(c) for c in CATEGORIES}
        for sample in pred.samples:
            flags = sample_collision_flags(sample, radius_b)
            for c in CATEGORIES:
                m = members[c]
                counts[c] += int(m.sum())
                hits[c] += int(flags[m].sum())
    return {c: (hits[c] / counts[c] if counts[c] else None) for c in CATEGORIES}


def load_thresholds(path) -> InteractionThresholds:
    """Read thresholds from a flat ``key = value`` text file; pairs are "lo,hi"."""
    pair_fields = {"lf_gap_range", "speed_ratio_band"}
    known = {f.name for f in fields(InteractionThresholds)}
    kwargs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown threshold {key!r}")
            if key in pair_fields:
                lo, _, hi = value.partition(",")
                kwargs[key] = (float(lo), float(hi))
            else:
                kwargs[key] = float(value)
    return InteractionThresholds(**kwargs)


def write_labels_csv(labeled: list[tuple[Sequence, InteractionLabels]], path) -> None:
    """Dump per-agent labels as CSV with 0/1 flags."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence_id", "agent_id", "group", "leader_follower",
                         "collision_avoidance", "static"])
        for seq, labels in labeled:
            for idx, agent_id in enumerate(labels.agent_ids):
                writer.writerow([
                    seq.sequence_id, agent_id,
                    int(labels.group[idx]), int(labels.leader_follower[idx]),
                    int(labels.collision_avoidance[idx]), int(labels.static[idx]),
                ])

"""Core data model: sequences, prediction sets, and sliding-window extraction.

A *sequence* is one fixed-length evaluation unit: the observed history and the
ground-truth future of every agent that is present for the whole window.  A
*prediction set* holds K joint future samples for the agents of one sequence.
All containers are immutable after construction and safe to share across
workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import IngestError, ShapeError

UNITS = ("meters", "pixels")


class Position(NamedTuple):
    x: float
    y: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window extraction parameters (defaults: 8 observed + 12 future frames at 2.5 fps)."""

    obs_len: int = 8
    pred_len: int = 12
    stride: int = 1
    target_fps: float = 2.5
    require_full_presence: bool = True

    def __post_init__(self):
        if self.obs_len < 1 or self.pred_len < 1 or self.stride < 1:
            raise ValueError("obs_len, pred_len, and stride must all be >= 1")
        if not self.target_fps > 0:
            raise ValueError("target_fps must be > 0")

    @property
    def seq_len(self) -> int:
        return self.obs_len + self.pred_len


@dataclass(frozen=True)
class Sequence:
    """One evaluation window: N agents with observed and ground-truth future positions.

    ``obs`` has shape (N, obs_len, 2) and ``future_gt`` shape (N, pred_len, 2),
    both in world coordinates.  Agent order is fixed by ``agent_ids``.
    """

    sequence_id: str
    scene_id: str
    frame_rate: float
    agent_ids: tuple[int, ...]
    obs: np.ndarray
    future_gt: np.ndarray
    units: str = "meters"

    def __post_init__(self):
        obs = _frozen(self.obs)
        fut = _frozen(self.future_gt)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "future_gt", fut)
        object.__setattr__(self, "agent_ids", tuple(int(a) for a in self.agent_ids))
        n = len(self.agent_ids)
        if n < 1:
            raise ValueError(f"sequence {self.sequence_id!r} has no agents")
        if len(set(self.agent_ids)) != n:
            raise ValueError(f"sequence {self.sequence_id!r} has duplicate agent ids")
        if obs.ndim != 3 or obs.shape[0] != n or obs.shape[2] != 2:
            raise ShapeError(
                f"obs must have shape (N={n}, T_obs, 2), got {obs.shape}",
                expected=(n, -1, 2), actual=obs.shape)
        if fut.ndim != 3 or fut.shape[0] != n or fut.shape[2] != 2:
            raise ShapeError(
                f"future_gt must have shape (N={n}, T, 2), got {fut.shape}",
                expected=(n, -1, 2), actual=fut.shape)
        if not (np.isfinite(obs).all() and np.isfinite(fut).all()):
            raise ValueError(f"sequence {self.sequence_id!r} contains non-finite coordinates")
        if self.units not in UNITS:
            raise ValueError(f"units must be one of {UNITS}, got {self.units!r}")

    @property
    def num_agents(self) -> int:
        return len(self.agent_ids)

    @property
    def obs_len(self) -> int:
        return self.obs.shape[1]

    @property
    def pred_len(self) -> int:
        return self.future_gt.shape[1]

    def full_track(self) -> np.ndarray:
        """Observed and future positions concatenated along time, shape (N, obs_len+pred_len, 2)."""
        return np.concatenate([self.obs, self.future_gt], axis=1)


@dataclass(frozen=True)
class PredictionSet:
    """K joint future samples for the agents of one sequence, shape (K, N, T, 2).

    ``agent_ids`` must match the referenced Sequence's agent order exactly.
    """

    sequence_id: str
    samples: np.ndarray
    agent_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        s = _frozen(self.samples)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "agent_ids", tuple(int(a) for a in self.agent_ids))
        if s.ndim != 4 or s.shape[3] != 2:
            raise ShapeError(
                f"samples must have shape (K, N, T, 2), got {s.shape}",
                expected=("K", "N", "T", 2), actual=s.shape)
        if s.shape[0] < 1:
            raise ValueError(f"prediction set {self.sequence_id!r} must have K >= 1 samples")
        if self.agent_ids and len(self.agent_ids) != s.shape[1]:
            raise ShapeError(
                f"agent_ids has {len(self.agent_ids)} entries for N={s.shape[1]} agents",
                expected=s.shape[1], actual=len(self.agent_ids))
        if not np.isfinite(s).all():
            raise ValueError(f"prediction set {self.sequence_id!r} contains non-finite coordinates")

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    def matches(self, seq: Sequence) -> bool:
        """True if shapes and agent order line up with ``seq``."""
        k, n, t, _ = self.samples.shape
        return (n == seq.num_agents and t == seq.pred_len
                and (not self.agent_ids or self.agent_ids == seq.agent_ids))


def window_sequences(raw, cfg: WindowConfig, scene_id: str = "scene", *,
                     source: str | None = None, units: str = "meters") -> list[Sequence]:
    """Cut raw per-frame records into fixed-length evaluation sequences.

    ``raw`` is an iterable of records with ``frame``, ``agent_id``, ``x``, ``y``
    attributes (or 4-tuples), already downsampled to the target frame rate.
    Windows advance by ``cfg.stride`` positions over the sorted distinct frames
    of the input; each window spans ``obs_len + pred_len`` consecutive frames.
    Under the full-presence rule an agent belongs to a window iff it has a
    record at every one of its frames.  Windows that end up with no agents are
    dropped.

    ``source`` names the raw file when one scene spans several files; it keeps
    sequence ids ("<source>:<start_frame>") unique while ``scene_id`` groups
    the output for aggregation.
    """
    per_agent: dict[int, dict[int, tuple[float, float]]] = {}
    for rec in raw:
        if isinstance(rec, tuple):
            frame, agent_id, x, y = rec
        else:
            frame, agent_id, x, y = rec.frame, rec.agent_id, rec.x, rec.y
        frame = int(frame)
        agent_id = int(agent_id)
        track = per_agent.setdefault(agent_id, {})
        if frame in track:
            raise IngestError(f"duplicate record for frame {frame}, agent {agent_id}")
        track[frame] = (float(x), float(y))

    all_frames = sorted({f for track in per_agent.values() for f in track})
    seq_len = cfg.seq_len
    label = source or scene_id
    out: list[Sequence] = []
    for start in range(0, len(all_frames) - seq_len + 1, cfg.stride):
        wframes = all_frames[start:start + seq_len]
        agents = []
        tracks = []
        for agent_id in sorted(per_agent):
            track = per_agent[agent_id]
            if cfg.require_full_presence:
                if not all(f in track for f in wframes):
                    continue
                coords = [track[f] for f in wframes]
            else:
                # Relaxed rule: the whole future plus the last observed frame must
                # be present; earlier history gaps are back-filled from the
                # agent's first record inside the window.
                if not all(f in track for f in wframes[cfg.obs_len - 1:]):
                    continue
                known = [track[f] for f in wframes if f in track]
                first = known[0]
                coords = [track.get(f, first) for f in wframes]
            agents.append(agent_id)
            tracks.append(coords)
        if not agents:
            continue
        grid = np.asarray(tracks, dtype=np.float64)
        out.append(Sequence(
            sequence_id=f"{label}:{wframes[0]}",
            scene_id=scene_id,
            frame_rate=cfg.target_fps,
            agent_ids=tuple(agents),
            obs=grid[:, :cfg.obs_len],
            future_gt=grid[:, cfg.obs_len:],
            units=units,
        ))
    return out


def as_pred_array(pred) -> np.ndarray:
    """Coerce a PredictionSet or raw array to a validated (K, N, T, 2) float array."""
    a = pred.samples if isinstance(pred, PredictionSet) else np.asarray(pred, dtype=np.float64)
    if a.ndim != 4 or a.shape[3] != 2:
        raise ShapeError(f"predictions must have shape (K, N, T, 2), got {a.shape}",
                         expected=("K", "N", "T", 2), actual=a.shape)
    return a


def as_gt_array(gt) -> np.ndarray:
    """Coerce a Sequence or raw array to a validated (N, T, 2) ground-truth future array."""
    a = gt.future_gt if isinstance(gt, Sequence) else np.asarray(gt, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 2:
        raise ShapeError(f"ground truth must have shape (N, T, 2), got {a.shape}",
                         expected=("N", "T", 2), actual=a.shape)
    return a


def density_stats(seqs: list[Sequence]) -> tuple[float, int]:
    """Mean number of agents per sequence and the total agent count."""
    if not seqs:
        raise ValueError("density_stats needs at least one sequence")
    counts = [s.num_agents for s in seqs]
    total = int(sum(counts))
    return total / len(counts), total

"""File ingestion: ETH/UCY-style text files, prediction dumps, fps downsampling.

The trajectory text format is one record per line, whitespace separated:

    frame agent_id x y

Lines starting with ``#`` are comments.  Frame and agent ids may be written as
float-formatted integers ("840.0"), which several published datasets do.

The prediction dump is a line-oriented UTF-8 text format:

    #trajeval-pred v1 K=<K> T=<T>
    sequence_id<TAB>sample_k<TAB>agent_id<TAB>t<TAB>x<TAB>y

with ``sample_k`` in 0..K-1 and ``t`` in 1..T.  Coordinates are written as
shortest round-trip decimals, so write -> parse is lossless.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import IngestError
from .trajdata import Position, PredictionSet, Sequence

DATASET_NAMES = ("eth", "hotel", "univ", "zara1", "zara2", "sdd_trajnet")

DUMP_HEADER_PREFIX = "#trajeval-pred v1"


@dataclass(frozen=True)
class RawRecord:
    frame: int
    agent_id: int
    pos: Position

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame must be >= 0, got {self.frame}")

    @property
    def x(self) -> float:
        return self.pos.x

    @property
    def y(self) -> float:
        return self.pos.y


@dataclass(frozen=True)
class DatasetSpec:
    """Description of one benchmark dataset: scene files plus sampling metadata."""

    name: str
    units: str
    native_fps: float
    files: tuple[str, ...] = field(default=())
    leave_out_scene: str | None = None

    def __post_init__(self):
        if self.name not in DATASET_NAMES:
            raise ValueError(f"unknown dataset {self.name!r}, expected one of {DATASET_NAMES}")
        if self.units not in ("meters", "pixels"):
            raise ValueError(f"units must be meters or pixels, got {self.units!r}")
        if self.leave_out_scene is not None:
            scenes = {os.path.splitext(os.path.basename(f))[0] for f in self.files}
            if self.leave_out_scene not in scenes:
                raise ValueError(
                    f"leave_out_scene {self.leave_out_scene!r} not among scene files {sorted(scenes)}")


def _parse_int(token: str) -> int:
    # Tolerate "840.0"-style integers.
    v = float(token)
    i = int(round(v))
    if abs(v - i) > 1e-9:
        raise ValueError(f"expected an integer, got {token!r}")
    return i


def parse_ethucy(path) -> list[RawRecord]:
    """Parse a whitespace-separated ``frame agent_id x y`` trajectory file."""
    records: list[RawRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise IngestError(f"expected 4 fields, got {len(parts)}: {line!r}",
                                  path=str(path), line=lineno)
            try:
                frame = _parse_int(parts[0])
                agent_id = _parse_int(parts[1])
                x, y = float(parts[2]), float(parts[3])
            except ValueError as exc:
                raise IngestError(f"malformed line {line!r} ({exc})",
                                  path=str(path), line=lineno) from None
            if frame < 0:
                raise IngestError(f"negative frame {frame}", path=str(path), line=lineno)
            records.append(RawRecord(frame, agent_id, Position(x, y)))
    return records


def downsample(records: list[RawRecord], native_fps: float, target_fps: float,
               phase: int = 0) -> list[RawRecord]:
    """Keep every k-th frame, k = native_fps / target_fps (must be an integer ratio).

    A record survives iff ``frame % k == phase``.  Identity when the rates match.
    """
    ratio = native_fps / target_fps
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9:
        raise ValueError(
            f"native_fps / target_fps must be a positive integer, got {native_fps}/{target_fps}={ratio}")
    if k == 1:
        return list(records)
    return [r for r in records if r.frame % k == phase % k]


def _format_coord(v: float) -> str:
    return repr(float(v))


def write_predictions(pred_map: dict[str, PredictionSet], path) -> None:
    """Write prediction sets to the dump format (inverse of :func:`parse_predictions`).

    Requires a uniform K and T across sequences; line ordering is deterministic
    (sequence id, sample, agent, timestep).
    """
    if not pred_map:
        raise ValueError("nothing to write: empty prediction map")
    shapes = {(p.samples.shape[0], p.samples.shape[2]) for p in pred_map.values()}
    if len(shapes) != 1:
        raise ValueError(f"prediction sets disagree on (K, T): {sorted(shapes)}")
    (k_count, t_count), = shapes
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{DUMP_HEADER_PREFIX} K={k_count} T={t_count}\n")
        for seq_id in sorted(pred_map):
            pset = pred_map[seq_id]
            agent_ids = pset.agent_ids or tuple(range(pset.samples.shape[1]))
            for k in range(k_count):
                for n, agent_id in enumerate(agent_ids):
                    for t in range(t_count):
                        x, y = pset.samples[k, n, t]
                        fh.write(f"{seq_id}\t{k}\t{agent_id}\t{t + 1}\t"
                                 f"{_format_coord(x)}\t{_format_coord(y)}\n")


def _parse_dump_header(line: str, path) -> tuple[int, int]:
    parts = line.split()
    try:
        if not line.startswith(DUMP_HEADER_PREFIX) or len(parts) != 4:
            raise ValueError
        k_count = int(parts[2].removeprefix("K="))
        t_count = int(parts[3].removeprefix("T="))
    except ValueError:
        raise IngestError(
            f"missing or malformed header, expected '{DUMP_HEADER_PREFIX} K=<K> T=<T>', got {line!r}",
            path=str(path), line=1) from None
    if k_count < 1 or t_count < 1:
        raise IngestError(f"header K and T must be >= 1, got K={k_count} T={t_count}",
                          path=str(path), line=1)
    return k_count, t_count


def parse_predictions(path, *, sequences: dict[str, Sequence] | None = None,
                      allow_ragged_k: bool = False) -> dict[str, PredictionSet]:
    """Parse a prediction dump into per-sequence PredictionSets.

    Every (sample, agent, timestep) cell of every sequence must be present
    exactly once; a hole or duplicate is an error naming the offending cell.
    Per-sequence sample counts must equal the header K unless
    ``allow_ragged_k`` is set.  When a ``sequences`` index is given, agent sets
    are validated against it and agent rows are ordered to match; otherwise
    agents are ordered by ascending id.
    """
    import numpy as np

    cells: dict[str, dict[tuple[int, int, int], tuple[float, float]]] = {}
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if header is None and line.startswith(DUMP_HEADER_PREFIX):
                    header = _parse_dump_header(line, path)
                continue
            if header is None:
                raise IngestError(f"data before '{DUMP_HEADER_PREFIX}' header",
                                  path=str(path), line=lineno)
            parts = line.split("\t")
            if len(parts) != 6:
                raise IngestError(f"expected 6 tab-separated fields, got {len(parts)}",
                                  path=str(path), line=lineno)
            seq_id = parts[0]
            try:
                k = int(parts[1])
                agent_id = _parse_int(parts[2])
                t = int(parts[3])
                x, y = float(parts[4]), float(parts[5])
            except ValueError as exc:
                raise IngestError(f"malformed line {line!r} ({exc})",
                                  path=str(path), line=lineno) from None
            k_count, t_count = header
            if not 0 <= k < k_count:
                raise IngestError(f"sample index {k} outside 0..{k_count - 1}",
                                  path=str(path), line=lineno)
            if not 1 <= t <= t_count:
                raise IngestError(f"timestep {t} outside 1..{t_count}",
                                  path=str(path), line=lineno)
            key = (k, agent_id, t)
            seq_cells = cells.setdefault(seq_id, {})
            if key in seq_cells:
                raise IngestError(
                    f"duplicate cell (sequence={seq_id}, sample={k}, agent={agent_id}, t={t})",
                    path=str(path), line=lineno)
            seq_cells[key] = (x, y)

    if header is None:
        raise IngestError(f"missing '{DUMP_HEADER_PREFIX}' header", path=str(path), line=1)
    k_count, t_count = header

    out: dict[str, PredictionSet] = {}
    for seq_id, seq_cells in cells.items():
        samples_present = sorted({k for k, _, _ in seq_cells})
        agents_present = sorted({a for _, a, _ in seq_cells})
        seq_k = samples_present[-1] + 1
        if samples_present != list(range(seq_k)):
            raise IngestError(f"sequence {seq_id!r}: sample indices {samples_present} are not dense",
                              path=str(path))
        if seq_k != k_count and not allow_ragged_k:
            raise IngestError(
                f"sequence {seq_id!r} has K={seq_k} samples but header declares K={k_count}",
                path=str(path))
        if sequences is not None:
            if seq_id not in sequences:
                raise IngestError(f"unknown sequence id {seq_id!r}", path=str(path))
            expected_agents = sequences[seq_id].agent_ids
            if sorted(expected_agents) != agents_present:
                raise IngestError(
                    f"sequence {seq_id!r}: dump agents {agents_present} != "
                    f"sequence agents {sorted(expected_agents)}", path=str(path))
            agent_order = list(expected_agents)
        else:
            agent_order = agents_present
        grid = np.empty((seq_k, len(agent_order), t_count, 2), dtype=np.float64)
        for k in range(seq_k):
            for n, agent_id in enumerate(agent_order):
                for t in range(1, t_count + 1):
                    cell = seq_cells.get((k, agent_id, t))
                    if cell is None:
                        raise IngestError(
                            f"missing cell (sequence={seq_id}, sample={k}, agent={agent_id}, t={t})",
                            path=str(path))
                    grid[k, n, t - 1] = cell
        out[seq_id] = PredictionSet(sequence_id=seq_id, samples=grid,
                                    agent_ids=tuple(agent_order))
    return out

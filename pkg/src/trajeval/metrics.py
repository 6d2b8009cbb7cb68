"""Displacement and collision metrics, marginal and joint, plus aggregation.

Marginal metrics (ade/fde) pick the best of the K samples independently per
agent, so the winning predictions may be mixed-and-matched across samples.
Joint metrics (jade/jfde) average over all agents of a sample first and then
take the minimum, so a single sample must be good for everyone; they are never
smaller than their marginal counterparts.

Distances default to plain per-timestep Euclidean error in scene units, which
is how benchmark tables report displacement in meters; ``squared=True``
switches every metric to squared distances for comparison against the loss
formulas, which are written with squared norms.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .geometry import sample_collision_flags
from .trajdata import PredictionSet, Sequence, as_gt_array as _gt_array, as_pred_array as _pred_array

METRIC_NAMES = ("ade", "fde", "jade", "jfde", "cr_jade", "cr_mean", "nll")

_JADE_SLACK = 1e-12


def _errors(pred, gt, squared: bool) -> np.ndarray:
    """Per (sample, agent, timestep) displacement errors, shape (K, N, T)."""
    p = _pred_array(pred)
    g = _gt_array(gt)
    if p.shape[1:] != g.shape:
        raise ShapeError(f"prediction shape {p.shape} does not match ground truth {g.shape}",
                         expected=("K",) + g.shape, actual=p.shape)
    diff = p - g[None]
    sq = np.einsum("kntd,kntd->knt", diff, diff)
    return sq if squared else np.sqrt(sq)


def ade(pred, gt, *, squared: bool = False) -> float:
    """Best-of-K average displacement error, minimum taken per agent."""
    err = _errors(pred, gt, squared)
    _, n, t = err.shape
    return float(err.sum(axis=2).min(axis=0).sum() / (t * n))


def fde(pred, gt, *, squared: bool = False) -> float:
    """Best-of-K final-timestep displacement error, minimum taken per agent."""
    err = _errors(pred, gt, squared)
    n = err.shape[1]
    return float(err[:, :, -1].min(axis=0).sum() / n)


def jade(pred, gt, *, squared: bool = False) -> tuple[float, int]:
    """Joint ADE: average over all agents of a sample before the min over samples.

    Returns the value and the index of the minimizing sample (lowest index on ties).
    """
    err = _errors(pred, gt, squared)
    _, n, t = err.shape
    # reduce per agent first so the K=1 / N=1 collapses onto ade are bit-exact
    totals = err.sum(axis=2).sum(axis=1)
    k = int(np.argmin(totals))
    return float(totals[k] / (t * n)), k


def jfde(pred, gt, *, squared: bool = False) -> tuple[float, int]:
    """Joint FDE: final-step error summed over agents, then min over samples."""
    err = _errors(pred, gt, squared)
    n = err.shape[1]
    totals = err[:, :, -1].sum(axis=1)
    k = int(np.argmin(totals))
    return float(totals[k] / n), k


def per_agent_ade(pred, gt, *, squared: bool = False) -> np.ndarray:
    """Each agent's best-of-K mean displacement error, shape (N,)."""
    err = _errors(pred, gt, squared)
    return err.sum(axis=2).min(axis=0) / err.shape[2]


def cr_jade(pred, gt, radius_b: float, *, squared: bool = False) -> float:
    """Collision rate of the minimum-JADE sample: the fraction of agents in that
    sample that collide with at least one other agent.  Zero for single agents."""
    p = _pred_array(pred)
    _, k = jade(p, gt, squared=squared)
    return float(sample_collision_flags(p[k], radius_b).mean())


def cr_mean(pred, radius_b: float) -> float:
    """Mean collision rate over all K samples: the fraction of (agent, sample)
    pairs involved in at least one collision."""
    p = _pred_array(pred)
    return float(np.mean([sample_collision_flags(s, radius_b).mean() for s in p]))


def gt_collision_rate(seqs: list[Sequence], radius_b: float,
                      weighting: str = "per_sequence") -> dict[str, float]:
    """Collision fraction of the ground-truth futures, aggregated per scene.

    Treats each sequence's future as a single joint sample.
    """
    if not seqs:
        raise ValueError("gt_collision_rate needs at least one sequence")
    per_scene: dict[str, list[tuple[float, int]]] = {}
    for seq in seqs:
        frac = float(sample_collision_flags(seq.future_gt, radius_b).mean())
        per_scene.setdefault(seq.scene_id, []).append((frac, seq.num_agents))
    return {scene: _weighted_mean(vals, weighting) for scene, vals in sorted(per_scene.items())}


def _weighted_mean(values_and_weights: list[tuple[float, int]], weighting: str) -> float:
    if weighting == "per_sequence":
        return float(np.mean([v for v, _ in values_and_weights]))
    if weighting == "per_agent":
        total = sum(w for _, w in values_and_weights)
        return float(sum(v * w for v, w in values_and_weights) / total)
    raise ValueError(f"unknown weighting {weighting!r}")


def kde_nll(pred, gt, *, bandwidth_floor: float = 1e-3, squared: bool = False) -> float:
    """Mean negative log likelihood of the ground truth under a Gaussian KDE of
    the K samples, fit independently at every (agent, timestep).

    The formula nominally averages the log density over samples as well, but the
    summand does not depend on the sample index, so the 1/K and the sum over k
    cancel; we compute the per-(agent, timestep) density once.  Bandwidths use
    Scott's rule per axis with ``bandwidth_floor`` as a lower clamp, which also
    covers the degenerate all-identical-samples case.  ``squared`` is accepted
    for interface symmetry and ignored (the density is what it is).
    """
    del squared
    p = _pred_array(pred)
    g = _gt_array(gt)
    if p.shape[1:] != g.shape:
        raise ShapeError(f"prediction shape {p.shape} does not match ground truth {g.shape}",
                         expected=("K",) + g.shape, actual=p.shape)
    k = p.shape[0]
    if k < 2:
        raise ValueError(f"kde_nll needs K >= 2 samples for bandwidth estimation, got K={k}")
    if not bandwidth_floor > 0:
        raise ValueError("bandwidth_floor must be > 0")
    sigma = p.std(axis=0, ddof=1)                      # (N, T, 2)
    h = np.maximum(k ** (-1.0 / 6.0) * sigma, bandwidth_floor)
    z = p - g[None]                                    # (K, N, T, 2)
    expo = -0.5 * ((z / h[None]) ** 2).sum(axis=-1) - np.log(2.0 * np.pi * h[..., 0] * h[..., 1])
    m = expo.max(axis=0)
    logp = m + np.log(np.exp(expo - m).sum(axis=0)) - math.log(k)
    return float(-logp.mean())


@dataclass(frozen=True)
class EvalConfig:
    """What to compute and how to aggregate it."""

    metrics: tuple[str, ...] = METRIC_NAMES
    radius_b: float = 0.1
    squared: bool = False
    weighting: str = "per_sequence"
    kde_bandwidth_floor: float = 1e-3
    strict: bool = False

    def __post_init__(self):
        unknown = [m for m in self.metrics if m not in METRIC_NAMES]
        if unknown:
            raise ValueError(f"unknown metric names {unknown}, expected subset of {METRIC_NAMES}")
        if self.weighting not in ("per_sequence", "per_agent"):
            raise ValueError(f"weighting must be per_sequence or per_agent, got {self.weighting!r}")
        if not self.radius_b > 0:
            raise ValueError("radius_b must be > 0")


@dataclass(frozen=True)
class MetricReport:
    """Metric values for one sequence, with argmin provenance for the joint metrics."""

    per_metric: dict[str, float]
    argmin_sample: dict[str, int] = field(default_factory=dict)
    per_agent_ade: tuple[float, ...] = field(default=())
    num_agents: int = 0

    def __post_init__(self):
        pm = self.per_metric
        if "ade" in pm and "jade" in pm and pm["jade"] < pm["ade"] - _JADE_SLACK:
            raise ValueError(f"jade {pm['jade']} < ade {pm['ade']} beyond slack")
        if "fde" in pm and "jfde" in pm and pm["jfde"] < pm["fde"] - _JADE_SLACK:
            raise ValueError(f"jfde {pm['jfde']} < fde {pm['fde']} beyond slack")


def sequence_report(pred, seq, config: EvalConfig = EvalConfig()) -> MetricReport:
    """Compute the configured metrics for one (prediction set, sequence) pair."""
    if isinstance(pred, PredictionSet) and isinstance(seq, Sequence) and not pred.matches(seq):
        raise ShapeError(
            f"prediction set for {seq.sequence_id!r} does not match the sequence "
            f"(K,N,T,2)={pred.samples.shape} vs N={seq.num_agents}, T={seq.pred_len}",
            expected=(seq.num_agents, seq.pred_len), actual=pred.samples.shape[1:3])
    values: dict[str, float] = {}
    argmins: dict[str, int] = {}
    agent_ade: tuple[float, ...] = ()
    for name in config.metrics:
        if name == "ade":
            values[name] = ade(pred, seq, squared=config.squared)
            agent_ade = tuple(float(v) for v in per_agent_ade(pred, seq, squared=config.squared))
        elif name == "fde":
            values[name] = fde(pred, seq, squared=config.squared)
        elif name == "jade":
            values[name], argmins[name] = jade(pred, seq, squared=config.squared)
        elif name == "jfde":
            values[name], argmins[name] = jfde(pred, seq, squared=config.squared)
        elif name == "cr_jade":
            values[name] = cr_jade(pred, seq, config.radius_b, squared=config.squared)
        elif name == "cr_mean":
            values[name] = cr_mean(pred, config.radius_b)
        elif name == "nll":
            values[name] = kde_nll(pred, seq, bandwidth_floor=config.kde_bandwidth_floor)
    n = seq.num_agents if isinstance(seq, Sequence) else _gt_array(seq).shape[0]
    return MetricReport(per_metric=values, argmin_sample=argmins,
                        per_agent_ade=agent_ade, num_agents=n)


@dataclass(frozen=True)
class AggregateReport:
    """Per-scene and overall metric means plus coverage bookkeeping."""

    per_scene: dict[str, dict[str, float]]
    overall: dict[str, float]
    weighting: str
    scene_counts: dict[str, dict[str, int]]
    per_sequence: dict[str, MetricReport]
    missing: tuple[str, ...] = ()

    def to_json_dict(self, include_sequences: bool = False) -> dict:
        out = {
            "schema": "trajeval-report v1",
            "weighting": self.weighting,
            "scenes": {
                scene: {
                    "num_sequences": self.scene_counts[scene]["num_sequences"],
                    "num_agents": self.scene_counts[scene]["num_agents"],
                    "metrics": dict(sorted(vals.items())),
                }
                for scene, vals in sorted(self.per_scene.items())
            },
            "overall": dict(sorted(self.overall.items())),
            "missing": sorted(self.missing),
        }
        if include_sequences:
            out["sequences"] = {
                sid: {
                    "metrics": dict(sorted(rep.per_metric.items())),
                    "argmin_sample": dict(sorted(rep.argmin_sample.items())),
                    "num_agents": rep.num_agents,
                }
                for sid, rep in sorted(self.per_sequence.items())
            }
        return out

    def to_csv_rows(self) -> list[tuple[str, str, float]]:
        rows = []
        for scene, vals in sorted(self.per_scene.items()):
            for metric, value in sorted(vals.items()):
                rows.append((scene, metric, value))
        for metric, value in sorted(self.overall.items()):
            rows.append(("overall", metric, value))
        return rows


class MissingPredictionsError(ValueError):
    def __init__(self, missing):
        super().__init__(f"no predictions for {len(missing)} sequence(s): "
                         + ", ".join(sorted(missing)[:5])
                         + ("..." if len(missing) > 5 else ""))
        self.missing = tuple(sorted(missing))


def evaluate(pred_map: dict[str, PredictionSet], seqs: list[Sequence],
             config: EvalConfig = EvalConfig(), max_workers: int | None = None) -> AggregateReport:
    """Evaluate every sequence that has predictions and aggregate per scene.

    Sequences without a prediction set are reported in ``missing`` (or raise
    when ``config.strict``).  The sequence order fixes the reduction order, so
    results are deterministic regardless of ``max_workers``.
    """
    covered = [s for s in seqs if s.sequence_id in pred_map]
    missing = tuple(s.sequence_id for s in seqs if s.sequence_id not in pred_map)
    if config.strict and missing:
        raise MissingPredictionsError(missing)
    if not covered:
        raise ValueError("no sequence has predictions; nothing to evaluate")

    def one(seq: Sequence) -> MetricReport:
        return sequence_report(pred_map[seq.sequence_id], seq, config)

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(one, covered))
    else:
        reports = [one(s) for s in covered]

    per_sequence = {s.sequence_id: r for s, r in zip(covered, reports)}
    by_scene: dict[str, list[tuple[MetricReport, int]]] = {}
    for seq, rep in zip(covered, reports):
        by_scene.setdefault(seq.scene_id, []).append((rep, seq.num_agents))

    per_scene: dict[str, dict[str, float]] = {}
    scene_counts: dict[str, dict[str, int]] = {}
    for scene, pairs in sorted(by_scene.items()):
        scene_counts[scene] = {
            "num_sequences": len(pairs),
            "num_agents": int(sum(n for _, n in pairs)),
        }
        per_scene[scene] = {
            m: _weighted_mean([(rep.per_metric[m], n) for rep, n in pairs], config.weighting)
            for m in config.metrics
        }

    if config.weighting == "per_sequence":
        overall = {m: float(np.mean([per_scene[s][m] for s in per_scene])) for m in config.metrics}
    else:
        all_pairs = [(rep, n) for pairs in by_scene.values() for rep, n in pairs]
        overall = {m: _weighted_mean([(rep.per_metric[m], n) for rep, n in all_pairs], "per_agent")
                   for m in config.metrics}

    return AggregateReport(per_scene=per_scene, overall=overall, weighting=config.weighting,
                           scene_counts=scene_counts, per_sequence=per_sequence, missing=missing)

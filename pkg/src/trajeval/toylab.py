"""Synthetic optimization lab: tiny scenarios where marginal-vs-joint loss
behavior is measurable and analytically checkable.

Each scenario has exactly two joint future modes.  A shared offset predictor
(learnable displacements on top of constant-velocity extrapolation) trained
with a marginal-only loss can reach zero ADE while splitting the modes across
agents within its samples (mix-and-match).  The joint loss term makes that
configuration costly, pulling the predictor toward mode-consistent samples
with low JADE, and in the crossing scenario toward collision-free samples.

Everything is seeded and bit-reproducible.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .losses import LossConfig, combined_loss
from .metrics import ade, cr_mean, fde, jade, jfde
from .trajdata import Sequence

SCENARIO_KINDS = ("two_mode_group", "crossing_pair", "crowd")

OBS_LEN = 8
PRED_LEN = 12

TRACE_FIELDS = ("step", "loss", "ade", "fde", "jade", "jfde", "cr_mean")


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at step {step}")
        self.step = step


@dataclass(frozen=True)
class ToyScenario:
    kind: str = "two_mode_group"
    num_train_sequences: int = 32
    num_eval_sequences: int = 32
    mode_gap: float = 2.0
    noise_std: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}, expected one of {SCENARIO_KINDS}")
        if not self.mode_gap > 0:
            raise ValueError("mode_gap must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


@dataclass(frozen=True)
class OffsetPredictor:
    """Learnable per-sample displacement offsets on top of constant velocity.

    ``params`` has shape (K, N, T, 2); predictions for a sequence are the
    constant-velocity extrapolation of its observed history plus the offsets,
    shared across all sequences of a scenario.
    """

    params: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.params, dtype=np.float64)
        if not np.isfinite(p).all():
            raise ValueError("predictor params must be finite")
        object.__setattr__(self, "params", p)

    @property
    def num_samples(self) -> int:
        return self.params.shape[0]

    def predict(self, seq: Sequence) -> np.ndarray:
        """Joint samples for one sequence, shape (K, N, T, 2)."""
        return cv_extrapolate(seq.obs, self.params.shape[2])[None] + self.params


def cv_extrapolate(obs: np.ndarray, horizon: int) -> np.ndarray:
    """Constant-velocity rollout of an (N, T_obs, 2) history over ``horizon`` steps."""
    obs = np.asarray(obs, dtype=np.float64)
    v = (obs[:, -1] - obs[:, 0]) / (obs.shape[1] - 1)
    steps = np.arange(1, horizon + 1, dtype=np.float64)
    return obs[:, -1, None, :] + steps[None, :, None] * v[:, None, :]


def _templates(scenario: ToyScenario) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless scenario geometry: observed tracks (N, OBS_LEN, 2) and the two
    joint future modes (2, N, PRED_LEN, 2)."""
    t_obs = np.arange(OBS_LEN, dtype=np.float64)
    t_fut = np.arange(1, PRED_LEN + 1, dtype=np.float64)
    gap = scenario.mode_gap
    if scenario.kind in ("two_mode_group", "crowd"):
        n = 2 if scenario.kind == "two_mode_group" else 4
        lanes = (np.arange(n) - (n - 1) / 2.0) * 0.5
        speed = 0.5
        obs = np.zeros((n, OBS_LEN, 2))
        obs[:, :, 0] = speed * (t_obs - (OBS_LEN - 1))
        obs[:, :, 1] = lanes[:, None]
        futures = np.zeros((2, n, PRED_LEN, 2))
        ramp = gap / 2.0 * t_fut / PRED_LEN
        for mode, sign in enumerate((1.0, -1.0)):
            futures[mode, :, :, 0] = speed * t_fut
            futures[mode, :, :, 1] = lanes[:, None] + sign * ramp
        return obs, futures
    # crossing_pair: agent 0 walks +x through the origin, agent 1 walks +y;
    # each mode lets one of them pass first.  Speeds scale with mode_gap so the
    # two modes stay mode_gap apart at the final step.
    base = 0.25
    fast = base + gap / (2.0 * PRED_LEN)
    slow = base - gap / (2.0 * PRED_LEN)
    if slow <= 0.05:
        raise ValueError(f"mode_gap {gap} too large for the crossing scenario")
    obs = np.zeros((2, OBS_LEN, 2))
    obs[0, :, 0] = -2.0 + base * (t_obs - (OBS_LEN - 1))
    obs[1, :, 1] = -2.0 + base * (t_obs - (OBS_LEN - 1))
    futures = np.zeros((2, 2, PRED_LEN, 2))
    for mode, (s0, s1) in enumerate(((fast, slow), (slow, fast))):
        futures[mode, 0, :, 0] = -2.0 + s0 * t_fut
        futures[mode, 1, :, 1] = -2.0 + s1 * t_fut
    return obs, futures


def _generate(scenario: ToyScenario, count: int, rng: np.random.Generator,
              split: str) -> list[Sequence]:
    obs0, futures = _templates(scenario)
    n = obs0.shape[0]
    out = []
    for i in range(count):
        mode = int(rng.random() < 0.5)
        obs = obs0 + rng.normal(0.0, scenario.noise_std, size=obs0.shape)
        out.append(Sequence(
            sequence_id=f"{scenario.kind}-{split}:{i}",
            scene_id=f"{scenario.kind}-{split}",
            frame_rate=2.5,
            agent_ids=tuple(range(n)),
            obs=obs,
            future_gt=futures[mode],
        ))
    return out


def generate(scenario: ToyScenario) -> tuple[list[Sequence], list[Sequence]]:
    """Seeded train/eval sequence lists for a scenario."""
    rng = np.random.default_rng([scenario.seed, 0])
    train = _generate(scenario, scenario.num_train_sequences, rng, "train")
    eval_ = _generate(scenario, scenario.num_eval_sequences, rng, "eval")
    return train, eval_


def gen_two_mode(scenario: ToyScenario) -> tuple[list[Sequence], list[Sequence]]:
    """Parallel walkers whose joint future turns left or right together."""
    if scenario.kind != "two_mode_group":
        scenario = ToyScenario(**{**scenario.__dict__, "kind": "two_mode_group"})
    return generate(scenario)


def gen_crossing_pair(scenario: ToyScenario) -> tuple[list[Sequence], list[Sequence]]:
    """Two agents crossing at right angles; one of them passes first per mode."""
    if scenario.kind != "crossing_pair":
        scenario = ToyScenario(**{**scenario.__dict__, "kind": "crossing_pair"})
    return generate(scenario)


def analytic_params(scenario: ToyScenario, *, mixed: bool) -> np.ndarray:
    """Offset parameters of an exact optimum of the noiseless objective (K=2).

    ``mixed=False`` gives the mode-consistent optimum (sample k reproduces joint
    mode k for every agent): zero marginal *and* joint loss.  ``mixed=True``
    alternates modes across agents within each sample: still zero marginal
    loss, but every sample is wrong for half the agents, the mix-and-match
    configuration with large JADE.
    """
    obs0, futures = _templates(scenario)
    n = futures.shape[1]
    cv = cv_extrapolate(obs0, PRED_LEN)
    params = np.zeros((2, n, PRED_LEN, 2))
    for k in range(2):
        for agent in range(n):
            mode = (k + agent) % 2 if mixed else k
            params[k, agent] = futures[mode, agent] - cv[agent]
    return params


def _eval_metrics(predictor: OffsetPredictor, seqs: list[Sequence],
                  radius_b: float) -> dict[str, float]:
    vals = {m: [] for m in ("ade", "fde", "jade", "jfde", "cr_mean")}
    for seq in seqs:
        pred = predictor.predict(seq)
        gt = seq.future_gt
        vals["ade"].append(ade(pred, gt))
        vals["fde"].append(fde(pred, gt))
        vals["jade"].append(jade(pred, gt)[0])
        vals["jfde"].append(jfde(pred, gt)[0])
        vals["cr_mean"].append(cr_mean(pred, radius_b))
    return {m: float(np.mean(v)) for m, v in vals.items()}


def train_predictor(scenario: ToyScenario, loss_cfg: LossConfig, steps: int = 2000,
                    lr: float = 0.05, *, num_samples: int = 2, radius_b: float = 0.1,
                    trace_every: int = 50, init_scale: float = 0.1,
                    ) -> tuple[OffsetPredictor, list[dict[str, float]]]:
    """Plain fixed-step gradient descent on the combined loss over the train set.

    Returns the trained predictor and a metric trace on the eval set (one row
    per ``trace_every`` steps plus the final step).  Raises TrainingDiverged if
    the loss stops being finite.
    """
    train, eval_ = generate(scenario)
    n = train[0].num_agents
    rng = np.random.default_rng([scenario.seed, 1])
    params = init_scale * rng.standard_normal((num_samples, n, PRED_LEN, 2))
    cv_train = np.stack([cv_extrapolate(s.obs, PRED_LEN) for s in train])
    gts = [s.future_gt for s in train]

    trace: list[dict[str, float]] = []
    inv = 1.0 / len(train)
    for step in range(steps + 1):
        total = 0.0
        grad = np.zeros_like(params)
        for cv, gt in zip(cv_train, gts):
            out = combined_loss(cv[None] + params, gt, loss_cfg)
            total += out.value
            grad += out.grad
        total *= inv
        grad *= inv
        if not np.isfinite(total):
            raise TrainingDiverged(step, total)
        if step % trace_every == 0 or step == steps:
            row = {"step": float(step), "loss": total}
            row.update(_eval_metrics(OffsetPredictor(params), eval_, radius_b))
            trace.append(row)
        if step < steps:
            params = params - lr * grad
    return OffsetPredictor(params), trace


def write_trace_csv(trace: list[dict[str, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for row in trace:
            writer.writerow([int(row["step"])] + [repr(row[f]) for f in TRACE_FIELDS[1:]])


@dataclass(frozen=True)
class AblationRow:
    name: str
    final_loss: float
    metrics: dict[str, float] = field(default_factory=dict)


def run_ablation(scenario: ToyScenario, grid: dict[str, LossConfig], steps: int = 2000,
                 lr: float = 0.05, *, num_samples: int = 2, radius_b: float = 0.1,
                 ) -> list[AblationRow]:
    """Train one predictor per loss config and report its eval metrics."""
    rows = []
    for name, cfg in grid.items():
        _, trace = train_predictor(scenario, cfg, steps, lr,
                                   num_samples=num_samples, radius_b=radius_b,
                                   trace_every=max(steps, 1))
        final = trace[-1]
        rows.append(AblationRow(
            name=name, final_loss=final["loss"],
            metrics={m: final[m] for m in ("ade", "fde", "jade", "jfde", "cr_mean")}))
    return rows


def write_ablation_csv(rows: list[AblationRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config", "loss", "ade", "fde", "jade", "jfde", "cr_mean"])
        for row in rows:
            writer.writerow([row.name, repr(row.final_loss)]
                            + [repr(row.metrics[m]) for m in ("ade", "fde", "jade", "jfde", "cr_mean")])

"""Reconstruction and diversity loss terms with analytic subgradients.

These are the differentiable pieces a training loop combines with its own
network-specific terms.  Reconstruction losses use squared Euclidean norms
(the loss formulas are written with squared norms, unlike the reported
metrics, which use plain distance):

* marginal: each agent's best sample counts, so gradients flow to a
  possibly different sample per agent (the mix-and-match incentive);
* joint: one whole sample must win, so the gradient concentrates on the
  single sample with the lowest scene-total error;
* general: anchors sample 0 to the ground truth;
* diversity: pairwise exponential repulsion between samples.

Argmin ties break toward the lowest sample index, and the returned
subgradient is the gradient of that active branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .trajdata import as_gt_array, as_pred_array


@dataclass(frozen=True)
class LossConfig:
    """Which terms to combine and how to normalize them.

    ``joint_weight`` is the balance knob on the joint term.  When
    ``timestep_subset`` (1-based timesteps) is set, the reconstruction terms
    restrict to those timesteps and are normalized by |subset|*N, the
    coarse-waypoint form; otherwise ``reduction`` picks between raw sums and
    the 1/(T*N) mean form.  ``diversity_sigma`` enables the diversity term.
    """

    use_marginal: bool = True
    use_joint: bool = False
    joint_weight: float = 1.0
    use_general_recon: bool = False
    diversity_sigma: float | None = None
    timestep_subset: tuple[int, ...] | None = None
    reduction: str = "sum"

    def __post_init__(self):
        if not (self.use_marginal or self.use_joint or self.use_general_recon
                or self.diversity_sigma is not None):
            raise ValueError("at least one loss term must be enabled")
        if self.joint_weight < 0:
            raise ValueError("joint_weight must be >= 0")
        if self.diversity_sigma is not None and not self.diversity_sigma > 0:
            raise ValueError("diversity_sigma must be > 0")
        if self.reduction not in ("sum", "mean"):
            raise ValueError(f"reduction must be 'sum' or 'mean', got {self.reduction!r}")
        if self.timestep_subset is not None:
            object.__setattr__(self, "timestep_subset", tuple(int(t) for t in self.timestep_subset))
            if len(self.timestep_subset) == 0:
                raise ValueError("timestep_subset must not be empty")
            if len(set(self.timestep_subset)) != len(self.timestep_subset):
                raise ValueError("timestep_subset has duplicate timesteps")


@dataclass(frozen=True)
class LossOutput:
    """Scalar loss plus its subgradient w.r.t. the (K, N, T, 2) prediction tensor.

    Cells of non-argmin samples of min-terms carry exactly zero gradient;
    ``active_samples`` records which sample(s) each term selected.
    """

    value: float
    grad: np.ndarray
    active_samples: dict


def _check(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = as_pred_array(pred)
    g = as_gt_array(gt)
    if p.shape[1:] != g.shape:
        raise ShapeError(f"prediction shape {p.shape} does not match ground truth {g.shape}",
                         expected=("K",) + g.shape, actual=p.shape)
    return p, g


def _sq_per_agent(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Squared track error per (sample, agent), summed over timesteps: shape (K, N)."""
    diff = p - g[None]
    return np.einsum("kntd,kntd->kn", diff, diff)


def marginal_recon(pred, gt) -> LossOutput:
    """Sum over agents of the best sample's squared track error (min inside the sum)."""
    p, g = _check(pred, gt)
    sq = _sq_per_agent(p, g)
    winners = np.argmin(sq, axis=0)                  # (N,), first index on ties
    value = float(sq[winners, np.arange(p.shape[1])].sum())
    grad = np.zeros_like(p)
    for n, k in enumerate(winners):
        grad[k, n] = 2.0 * (p[k, n] - g[n])
    return LossOutput(value, grad, {"marginal": tuple(int(k) for k in winners)})


def joint_recon(pred, gt) -> LossOutput:
    """Squared track error of the best whole sample (min outside the agent sum)."""
    p, g = _check(pred, gt)
    totals = _sq_per_agent(p, g).sum(axis=1)
    k = int(np.argmin(totals))
    grad = np.zeros_like(p)
    grad[k] = 2.0 * (p[k] - g)
    return LossOutput(float(totals[k]), grad, {"joint": k})


def general_recon(pred, gt) -> LossOutput:
    """Squared track error of sample 0 against the ground truth."""
    p, g = _check(pred, gt)
    diff = p[0] - g
    grad = np.zeros_like(p)
    grad[0] = 2.0 * diff
    # reduce per agent first, matching the min-term reductions bit for bit
    value = float(np.einsum("ntd,ntd->n", diff, diff).sum())
    return LossOutput(value, grad, {"general": 0})


def diversity(pred, sigma_d: float) -> LossOutput:
    """Mean pairwise sample repulsion exp(-||y_k1 - y_k2|| / sigma_d) over ordered pairs.

    1.0 when all samples coincide, tending to 0 as they spread apart.  The
    gradient contribution of an exactly-coincident pair is taken as zero.
    """
    p = as_pred_array(pred)
    k_count = p.shape[0]
    if k_count < 2:
        raise ValueError(f"diversity needs K >= 2 samples, got K={k_count}")
    if not sigma_d > 0:
        raise ValueError("sigma_d must be > 0")
    flat = p.reshape(k_count, -1)
    diff = flat[:, None, :] - flat[None, :, :]       # (K, K, D)
    dist = np.sqrt(np.einsum("abd,abd->ab", diff, diff))
    off = ~np.eye(k_count, dtype=bool)
    w = np.where(off, np.exp(-dist / sigma_d), 0.0)
    norm = 1.0 / (k_count * (k_count - 1))
    value = float(w.sum() * norm)
    # d/dy_a of each ordered-pair term; coincident pairs contribute nothing.
    safe = np.where(dist > 0, dist, 1.0)
    coef = np.where(off & (dist > 0), -w / (sigma_d * safe), 0.0)
    grad_flat = 2.0 * norm * np.einsum("ab,abd->ad", coef, diff)
    return LossOutput(value, grad_flat.reshape(p.shape), {})


def combined_loss(pred, gt, cfg: LossConfig) -> LossOutput:
    """Weighted sum of the enabled terms, with the configured normalization.

    Reconstruction terms share one normalizer; the diversity term carries its
    own 1/(K(K-1)) and is never rescaled.
    """
    p, g = _check(pred, gt)
    k_count, n, t = p.shape[:3]

    subset = cfg.timestep_subset
    if subset is not None:
        bad = [s for s in subset if not 1 <= s <= t]
        if bad:
            raise ValueError(f"timestep_subset entries {bad} outside 1..{t}")
        idx = np.asarray([s - 1 for s in subset], dtype=int)
        p_r, g_r = p[:, :, idx], g[:, idx]
        norm = 1.0 / (len(subset) * n)
    else:
        idx = None
        p_r, g_r = p, g
        norm = 1.0 / (t * n) if cfg.reduction == "mean" else 1.0

    def expand(grad_r: np.ndarray) -> np.ndarray:
        if idx is None:
            return grad_r
        full = np.zeros_like(p)
        full[:, :, idx] = grad_r
        return full

    value = 0.0
    grad = np.zeros_like(p)
    active: dict = {}
    if cfg.use_general_recon:
        out = general_recon(p_r, g_r)
        value += norm * out.value
        grad += norm * expand(out.grad)
        active.update(out.active_samples)
    if cfg.use_marginal:
        out = marginal_recon(p_r, g_r)
        value += norm * out.value
        grad += norm * expand(out.grad)
        active.update(out.active_samples)
    if cfg.use_joint:
        out = joint_recon(p_r, g_r)
        value += cfg.joint_weight * norm * out.value
        grad += cfg.joint_weight * norm * expand(out.grad)
        active.update(out.active_samples)
    if cfg.diversity_sigma is not None:
        out = diversity(p, cfg.diversity_sigma)
        value += out.value
        grad += out.grad
        active["diversity"] = True
    return LossOutput(float(value), grad, active)

#!/usr/bin/env python3
"""Generate binding parity fixtures: random inputs plus native results.

Runs the native package directly (not through the rpc endpoint), so the test
suite compares the binding's round trip against an independent invocation path.
"""
import argparse
import json

import numpy as np

from trajeval.losses import LossConfig, combined_loss
from trajeval.metrics import EvalConfig, sequence_report

LOSS_OPTIONS = dict(use_marginal=True, use_joint=True, joint_weight=0.7,
                    use_general_recon=True, diversity_sigma=1.5, reduction="mean")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--count", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    loss_cfg = LossConfig(**LOSS_OPTIONS)
    metric_cfg = EvalConfig(radius_b=0.1)
    fixtures = []
    for _ in range(args.count):
        k = int(rng.integers(2, 5))
        n = int(rng.integers(1, 4))
        t = int(rng.integers(1, 5))
        pred = 2.0 * rng.standard_normal((k, n, t, 2))
        gt = 2.0 * rng.standard_normal((n, t, 2))
        report = sequence_report(pred, gt, metric_cfg)
        loss = combined_loss(pred, gt, loss_cfg)
        fixtures.append({
            "pred": pred.tolist(),
            "gt": gt.tolist(),
            "metrics": report.per_metric,
            "argmin_sample": report.argmin_sample,
            "loss_value": loss.value,
            "loss_grad": loss.grad.tolist(),
        })
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"seed": args.seed, "loss_options": LOSS_OPTIONS,
                   "fixtures": fixtures}, fh)
    print(f"wrote {args.count} fixtures to {args.out}")


if __name__ == "__main__":
    main()

import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import random_instance
from trajeval.losses import LossConfig, combined_loss
from trajeval.metrics import EvalConfig, sequence_report
from trajeval.rpc import PROTOCOL, handle_line


def request(op, pred=None, gt=None, options=None, req_id=1):
    body = {"id": req_id, "op": op}
    if pred is not None:
        body["pred"] = np.asarray(pred).tolist()
    if gt is not None:
        body["gt"] = np.asarray(gt).tolist()
    if options is not None:
        body["options"] = options
    return json.dumps(body)


class TestHandleLine:
    def test_ping(self):
        resp = handle_line(request("ping"))
        assert resp["ok"] and resp["result"]["protocol"] == PROTOCOL

    def test_metrics_parity_with_native(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            pred, gt = random_instance(rng, kmax=5, nmax=3, tmax=4)
            if pred.shape[0] < 2:
                pred = np.concatenate([pred, pred + 1.0])
            resp = handle_line(request("metrics", pred, gt, {"radius_b": 0.1}))
            assert resp["ok"], resp
            native = sequence_report(pred, gt, EvalConfig())
            for m, v in native.per_metric.items():
                assert resp["result"]["metrics"][m] == pytest.approx(v, abs=1e-12)
            assert resp["result"]["argmin_sample"] == native.argmin_sample

    def test_losses_parity_with_native(self):
        rng = np.random.default_rng(1)
        opts = {"use_marginal": True, "use_joint": True, "joint_weight": 0.5,
                "diversity_sigma": 1.5, "reduction": "mean"}
        cfg = LossConfig(use_marginal=True, use_joint=True, joint_weight=0.5,
                         diversity_sigma=1.5, reduction="mean")
        for _ in range(25):
            pred, gt = random_instance(rng, kmax=5, nmax=3, tmax=4)
            if pred.shape[0] < 2:
                pred = np.concatenate([pred, pred + 1.0])
            resp = handle_line(request("losses", pred, gt, opts))
            assert resp["ok"], resp
            native = combined_loss(pred, gt, cfg)
            assert resp["result"]["value"] == pytest.approx(native.value, abs=1e-12)
            np.testing.assert_allclose(np.asarray(resp["result"]["grad"]),
                                       native.grad, atol=1e-12)

    def test_shape_error_is_structured(self):
        resp = handle_line(request("metrics", np.zeros((2, 2, 3, 2)), np.zeros((4, 3, 2))))
        assert not resp["ok"]
        assert resp["error"]["type"] == "ShapeError"
        assert "expected" in resp["error"]

    def test_ragged_pred_rejected(self):
        body = {"id": 5, "op": "metrics", "pred": [[[[0, 0]]], [[[0, 0], [1, 1]]]],
                "gt": [[[0, 0]]]}
        resp = handle_line(json.dumps(body))
        assert not resp["ok"] and resp["error"]["type"] == "ShapeError"

    def test_bad_json(self):
        resp = handle_line("{nope")
        assert not resp["ok"] and resp["error"]["type"] == "ProtocolError"

    def test_unknown_op(self):
        resp = handle_line(json.dumps({"id": 2, "op": "fly"}))
        assert not resp["ok"]
        assert "unknown op" in resp["error"]["message"]

    def test_value_error_mapped(self):
        resp = handle_line(request("losses", np.zeros((1, 1, 1, 2)), np.zeros((1, 1, 2)),
                                   {"use_marginal": False, "use_joint": False}))
        assert not resp["ok"] and resp["error"]["type"] == "ValueError"


class TestSubprocessEndpoint:
    def test_round_trip_over_stdio(self):
        proc = subprocess.Popen([sys.executable, "-m", "trajeval.rpc"],
                                stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                text=True)
        try:
            hello = json.loads(proc.stdout.readline())
            assert hello["protocol"] == PROTOCOL
            gt = np.zeros((1, 2, 2))
            pred = np.zeros((2, 1, 2, 2))
            pred[1, 0, :, 0] = [3.0, 3.0]
            proc.stdin.write(request("metrics", pred, gt,
                                     {"metrics": ["ade", "jade"]}) + "\n")
            proc.stdin.flush()
            resp = json.loads(proc.stdout.readline())
            assert resp["ok"]
            assert resp["result"]["metrics"]["ade"] == 0.0
            assert resp["result"]["metrics"]["jade"] == 0.0
            # floats survive the wire bit-exactly
            value = 0.1234567890123456789
            proc.stdin.write(request("metrics", np.full((2, 1, 1, 2), value),
                                     np.zeros((1, 1, 2)), {"metrics": ["ade"]}) + "\n")
            proc.stdin.flush()
            resp = json.loads(proc.stdout.readline())
            expect = float(np.hypot(value, value))
            assert resp["result"]["metrics"]["ade"] == expect
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

"""JSON-lines stdio endpoint exposing metrics and losses to other runtimes.

Foreign-language bindings talk to the package through this process: one JSON
request per stdin line, one JSON response per stdout line, floats serialized
as shortest round-trip decimals so values survive the wire bit-exactly.

Request:  {"id": <any>, "op": "metrics" | "losses" | "ping",
           "pred": [[[[x, y], ...], ...], ...],   # (K, N, T, 2)
           "gt":   [[[x, y], ...], ...],          # (N, T, 2)
           "options": {...}}
Response: {"id": <any>, "ok": true,  "result": {...}}
        | {"id": <any>, "ok": false, "error": {"type": ..., "message": ...,
                                               "expected": ..., "actual": ...}}

On startup the endpoint announces {"ok": true, "protocol": "trajeval-rpc v1"}.
Run with ``python -m trajeval.rpc``.
"""
from __future__ import annotations

import json
import sys

import numpy as np

from .errors import ShapeError
from .losses import LossConfig, combined_loss
from .metrics import EvalConfig, sequence_report

PROTOCOL = "trajeval-rpc v1"


def _array(payload, what: str, ndim: int) -> np.ndarray:
    try:
        a = np.asarray(payload, dtype=np.float64)
    except (TypeError, ValueError):
        raise ShapeError(f"{what} is not a rectangular numeric array") from None
    if a.ndim != ndim or a.shape[-1] != 2:
        raise ShapeError(
            f"{what} must be a rank-{ndim} array with trailing dimension 2, got shape {a.shape}",
            expected=f"rank {ndim}, trailing 2", actual=list(a.shape))
    return a


def handle_metrics(req: dict) -> dict:
    pred = _array(req.get("pred"), "pred", 4)
    gt = _array(req.get("gt"), "gt", 3)
    opts = req.get("options") or {}
    config = EvalConfig(
        metrics=tuple(opts.get("metrics", EvalConfig.metrics)),
        radius_b=float(opts.get("radius_b", 0.1)),
        squared=bool(opts.get("squared", False)),
        kde_bandwidth_floor=float(opts.get("kde_bandwidth_floor", 1e-3)),
    )
    report = sequence_report(pred, gt, config)
    return {"metrics": report.per_metric,
            "argmin_sample": report.argmin_sample,
            "per_agent_ade": list(report.per_agent_ade)}


def handle_losses(req: dict) -> dict:
    pred = _array(req.get("pred"), "pred", 4)
    gt = _array(req.get("gt"), "gt", 3)
    opts = req.get("options") or {}
    subset = opts.get("timestep_subset")
    config = LossConfig(
        use_marginal=bool(opts.get("use_marginal", True)),
        use_joint=bool(opts.get("use_joint", False)),
        joint_weight=float(opts.get("joint_weight", 1.0)),
        use_general_recon=bool(opts.get("use_general_recon", False)),
        diversity_sigma=(None if opts.get("diversity_sigma") is None
                         else float(opts["diversity_sigma"])),
        timestep_subset=None if subset is None else tuple(int(t) for t in subset),
        reduction=str(opts.get("reduction", "sum")),
    )
    out = combined_loss(pred, gt, config)
    active = {k: (list(v) if isinstance(v, tuple) else v)
              for k, v in out.active_samples.items()}
    return {"value": out.value, "grad": out.grad.tolist(), "active_samples": active}


_HANDLERS = {"metrics": handle_metrics, "losses": handle_losses,
             "ping": lambda req: {"protocol": PROTOCOL}}


def handle_line(line: str) -> dict:
    try:
        req = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": None, "ok": False,
                "error": {"type": "ProtocolError", "message": f"bad JSON: {exc}"}}
    req_id = req.get("id") if isinstance(req, dict) else None
    if not isinstance(req, dict) or "op" not in req:
        return {"id": req_id, "ok": False,
                "error": {"type": "ProtocolError", "message": "request must be {'op': ..., ...}"}}
    handler = _HANDLERS.get(req["op"])
    if handler is None:
        return {"id": req_id, "ok": False,
                "error": {"type": "ProtocolError",
                          "message": f"unknown op {req['op']!r}, expected one of {sorted(_HANDLERS)}"}}
    try:
        return {"id": req_id, "ok": True, "result": handler(req)}
    except ShapeError as exc:
        return {"id": req_id, "ok": False,
                "error": {"type": "ShapeError", "message": str(exc),
                          "expected": _jsonable(exc.expected), "actual": _jsonable(exc.actual)}}
    except (ValueError, TypeError) as exc:
        return {"id": req_id, "ok": False,
                "error": {"type": type(exc).__name__, "message": str(exc)}}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def main() -> int:
    out = sys.stdout
    out.write(json.dumps({"ok": True, "protocol": PROTOCOL}) + "\n")
    out.flush()
    for line in sys.stdin:
        if not line.strip():
            continue
        out.write(json.dumps(handle_line(line)) + "\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())

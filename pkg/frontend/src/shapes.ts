import { ShapeMismatchError } from "./errors.js";

/** Joint prediction samples: [K][N][T][2]. */
export type PredArray = number[][][][];
/** Ground-truth futures: [N][T][2]. */
export type GtArray = number[][][];

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function shapeOf(value: unknown): string {
  const dims: number[] = [];
  let cursor: unknown = value;
  while (Array.isArray(cursor)) {
    dims.push(cursor.length);
    cursor = cursor[0];
  }
  return `[${dims.join(", ")}]`;
}

/**
 * Validate a rectangular [K][N][T][2] array of finite numbers and return its
 * dimensions.  Ragged rows and non-numeric cells are shape errors, matching
 * what the native side would reject.
 */
export function validatePred(pred: PredArray): { k: number; n: number; t: number } {
  if (!Array.isArray(pred) || pred.length === 0) {
    throw new ShapeMismatchError("pred must be a non-empty (K, N, T, 2) array",
      "(K, N, T, 2)", shapeOf(pred));
  }
  const first = pred[0];
  if (!Array.isArray(first) || first.length === 0 || !Array.isArray(first[0])) {
    throw new ShapeMismatchError("pred must be a (K, N, T, 2) array",
      "(K, N, T, 2)", shapeOf(pred));
  }
  const n = first.length;
  const t = first[0]!.length;
  for (const sample of pred) {
    if (!Array.isArray(sample) || sample.length !== n) {
      throw new ShapeMismatchError("pred samples disagree on agent count",
        `(K, ${n}, ${t}, 2)`, shapeOf(pred));
    }
    for (const agent of sample) {
      if (!Array.isArray(agent) || agent.length !== t) {
        throw new ShapeMismatchError("pred agents disagree on timestep count",
          `(K, ${n}, ${t}, 2)`, shapeOf(pred));
      }
      for (const point of agent) {
        if (!Array.isArray(point) || point.length !== 2
          || !isFiniteNumber(point[0]) || !isFiniteNumber(point[1])) {
          throw new ShapeMismatchError("pred cells must be finite [x, y] pairs",
            `(K, ${n}, ${t}, 2)`, shapeOf(pred));
        }
      }
    }
  }
  return { k: pred.length, n, t };
}

/** Validate a rectangular [N][T][2] ground-truth array and return its dimensions. */
export function validateGt(gt: GtArray): { n: number; t: number } {
  if (!Array.isArray(gt) || gt.length === 0 || !Array.isArray(gt[0])) {
    throw new ShapeMismatchError("gt must be a non-empty (N, T, 2) array",
      "(N, T, 2)", shapeOf(gt));
  }
  const t = gt[0]!.length;
  for (const agent of gt) {
    if (!Array.isArray(agent) || agent.length !== t) {
      throw new ShapeMismatchError("gt agents disagree on timestep count",
        `(N, ${t}, 2)`, shapeOf(gt));
    }
    for (const point of agent) {
      if (!Array.isArray(point) || point.length !== 2
        || !isFiniteNumber(point[0]) || !isFiniteNumber(point[1])) {
        throw new ShapeMismatchError("gt cells must be finite [x, y] pairs",
          `(N, ${t}, 2)`, shapeOf(gt));
      }
    }
  }
  return { n: gt.length, t };
}

/** Check that prediction and ground-truth dimensions line up. */
export function validatePair(pred: PredArray, gt: GtArray): void {
  const p = validatePred(pred);
  const g = validateGt(gt);
  if (p.n !== g.n || p.t !== g.t) {
    throw new ShapeMismatchError("pred and gt disagree on (N, T)",
      `(K, ${g.n}, ${g.t}, 2)`, `(${p.k}, ${p.n}, ${p.t}, 2)`);
  }
}

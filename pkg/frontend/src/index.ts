/**
 * trajeval-bindings: plain-array access to the trajeval metrics and losses.
 *
 * The binding validates shapes, dispatches to the native package over its
 * JSON-lines stdio endpoint, and maps failures to typed errors.  No metric or
 * loss math lives on this side, so results are the native results.
 */
import { TrajevalSession, type SessionOptions } from "./session.js";
import { validatePair } from "./shapes.js";
import type { GtArray, PredArray } from "./shapes.js";

export { TrajevalSession } from "./session.js";
export type { SessionOptions } from "./session.js";
export { NativeError, ProtocolError, ShapeMismatchError, TrajevalError } from "./errors.js";
export type { GtArray, PredArray } from "./shapes.js";

export type MetricName = "ade" | "fde" | "jade" | "jfde" | "cr_jade" | "cr_mean" | "nll";

export interface MetricsOptions {
  /** Metrics to compute; defaults to all of them. */
  metrics?: MetricName[];
  /** Agent radius b in scene units (collision threshold is 2b). Default 0.1. */
  radiusB?: number;
  /** Use squared distances (the literal formula forms). Default false. */
  squared?: boolean;
  /** Lower clamp for the KDE bandwidth. Default 1e-3. */
  kdeBandwidthFloor?: number;
}

export interface MetricsResult {
  metrics: Record<string, number>;
  /** Winning sample index for the min-based joint metrics. */
  argminSample: Record<string, number>;
  perAgentAde: number[];
}

export interface LossOptions {
  useMarginal?: boolean;
  useJoint?: boolean;
  /** Weight on the joint term. Default 1. */
  jointWeight?: number;
  useGeneralRecon?: boolean;
  /** Enables the diversity term when set. */
  diversitySigma?: number | null;
  /** 1-based timesteps for the coarse waypoint form. */
  timestepSubset?: number[] | null;
  reduction?: "sum" | "mean";
}

export interface LossResult {
  value: number;
  /** Subgradient w.r.t. the predictions, same (K, N, T, 2) layout as the input. */
  grad: PredArray;
  activeSamples: Record<string, number | number[] | boolean>;
}

interface WireMetricsResult {
  metrics: Record<string, number>;
  argmin_sample: Record<string, number>;
  per_agent_ade: number[];
}

interface WireLossResult {
  value: number;
  grad: PredArray;
  active_samples: Record<string, number | number[] | boolean>;
}

function metricsOptionsToWire(options: MetricsOptions): Record<string, unknown> {
  const wire: Record<string, unknown> = {};
  if (options.metrics !== undefined) wire.metrics = options.metrics;
  if (options.radiusB !== undefined) wire.radius_b = options.radiusB;
  if (options.squared !== undefined) wire.squared = options.squared;
  if (options.kdeBandwidthFloor !== undefined) wire.kde_bandwidth_floor = options.kdeBandwidthFloor;
  return wire;
}

function lossOptionsToWire(options: LossOptions): Record<string, unknown> {
  const wire: Record<string, unknown> = {};
  if (options.useMarginal !== undefined) wire.use_marginal = options.useMarginal;
  if (options.useJoint !== undefined) wire.use_joint = options.useJoint;
  if (options.jointWeight !== undefined) wire.joint_weight = options.jointWeight;
  if (options.useGeneralRecon !== undefined) wire.use_general_recon = options.useGeneralRecon;
  if (options.diversitySigma !== undefined) wire.diversity_sigma = options.diversitySigma;
  if (options.timestepSubset !== undefined) wire.timestep_subset = options.timestepSubset;
  if (options.reduction !== undefined) wire.reduction = options.reduction;
  return wire;
}

/** Compute metrics for one (pred, gt) pair on an existing session. */
export async function metricsOn(
  session: TrajevalSession,
  pred: PredArray,
  gt: GtArray,
  options: MetricsOptions = {},
): Promise<MetricsResult> {
  validatePair(pred, gt);
  const result = (await session.request("metrics", {
    pred,
    gt,
    options: metricsOptionsToWire(options),
  })) as WireMetricsResult;
  return {
    metrics: result.metrics,
    argminSample: result.argmin_sample,
    perAgentAde: result.per_agent_ade,
  };
}

/** Compute the combined loss and its subgradient on an existing session. */
export async function lossesOn(
  session: TrajevalSession,
  pred: PredArray,
  gt: GtArray,
  options: LossOptions = {},
): Promise<LossResult> {
  validatePair(pred, gt);
  const result = (await session.request("losses", {
    pred,
    gt,
    options: lossOptionsToWire(options),
  })) as WireLossResult;
  return {
    value: result.value,
    grad: result.grad,
    activeSamples: result.active_samples,
  };
}

/** One-shot convenience wrapper: spawns a session, computes, tears down. */
export async function metrics(
  pred: PredArray,
  gt: GtArray,
  options: MetricsOptions = {},
  sessionOptions: SessionOptions = {},
): Promise<MetricsResult> {
  const session = new TrajevalSession(sessionOptions);
  try {
    return await metricsOn(session, pred, gt, options);
  } finally {
    session.close();
  }
}

/** One-shot convenience wrapper for the loss surface. */
export async function losses(
  pred: PredArray,
  gt: GtArray,
  options: LossOptions = {},
  sessionOptions: SessionOptions = {},
): Promise<LossResult> {
  const session = new TrajevalSession(sessionOptions);
  try {
    return await lossesOn(session, pred, gt, options);
  } finally {
    session.close();
  }
}

import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  lossesOn,
  metrics,
  metricsOn,
  NativeError,
  ShapeMismatchError,
  TrajevalSession,
  type GtArray,
  type PredArray,
} from "../src/index.js";

const here = dirname(fileURLToPath(import.meta.url));

interface Fixture {
  pred: PredArray;
  gt: GtArray;
  metrics: Record<string, number>;
  argmin_sample: Record<string, number>;
  loss_value: number;
  loss_grad: PredArray;
}

interface FixtureFile {
  loss_options: Record<string, unknown>;
  fixtures: Fixture[];
}

const PARITY_TOL = 1e-9;

function maxAbsDiff(a: PredArray, b: PredArray): number {
  let worst = 0;
  for (let k = 0; k < a.length; k++) {
    const sa = a[k]!;
    const sb = b[k]!;
    for (let n = 0; n < sa.length; n++) {
      for (let t = 0; t < sa[n]!.length; t++) {
        for (let d = 0; d < 2; d++) {
          const diff = Math.abs(sa[n]![t]![d]! - sb[n]![t]![d]!);
          if (diff > worst) worst = diff;
        }
      }
    }
  }
  return worst;
}

describe("binding parity with native results", () => {
  let session: TrajevalSession;
  let data: FixtureFile;

  beforeAll(() => {
    session = new TrajevalSession();
    data = JSON.parse(readFileSync(join(here, "fixtures.json"), "utf-8")) as FixtureFile;
  });

  afterAll(() => {
    session.close();
  });

  it("matches native metrics and losses on 1000 random fixtures", async () => {
    expect(data.fixtures.length).toBeGreaterThanOrEqual(1000);
    const lossOptions = {
      useMarginal: data.loss_options.use_marginal as boolean,
      useJoint: data.loss_options.use_joint as boolean,
      jointWeight: data.loss_options.joint_weight as number,
      useGeneralRecon: data.loss_options.use_general_recon as boolean,
      diversitySigma: data.loss_options.diversity_sigma as number,
      reduction: data.loss_options.reduction as "mean",
    };
    for (const fixture of data.fixtures) {
      const m = await metricsOn(session, fixture.pred, fixture.gt, { radiusB: 0.1 });
      for (const [name, expected] of Object.entries(fixture.metrics)) {
        expect(Math.abs(m.metrics[name]! - expected)).toBeLessThanOrEqual(PARITY_TOL);
      }
      expect(m.argminSample).toEqual(fixture.argmin_sample);

      const l = await lossesOn(session, fixture.pred, fixture.gt, lossOptions);
      expect(Math.abs(l.value - fixture.loss_value)).toBeLessThanOrEqual(PARITY_TOL);
      expect(maxAbsDiff(l.grad, fixture.loss_grad)).toBeLessThanOrEqual(PARITY_TOL);
    }
  }, 120_000);

  it("computes zero displacement metrics for an identity prediction", async () => {
    const gt: GtArray = [
      [[0, 0], [1, 0], [2, 0]],
      [[0, 1], [1, 1], [2, 1]],
    ];
    const pred: PredArray = [gt, gt.map((agent) => agent.map(([x, y]) => [x!, y! + 5]))];
    const result = await metricsOn(session, pred, gt,
      { metrics: ["ade", "fde", "jade", "jfde"] });
    expect(result.metrics.ade).toBe(0);
    expect(result.metrics.fde).toBe(0);
    expect(result.metrics.jade).toBe(0);
    expect(result.metrics.jfde).toBe(0);
    expect(result.argminSample.jade).toBe(0);
  });

  it("collapses jade onto ade for a single sample", async () => {
    const gt: GtArray = [[[0, 0], [1, 1]], [[3, 2], [4, 2]]];
    const pred: PredArray = [[[[0.5, 0], [1, 1.5]], [[3, 2.5], [4.5, 2]]]];
    const result = await metricsOn(session, pred, gt, { metrics: ["ade", "jade"] });
    expect(result.metrics.jade).toBe(result.metrics.ade);
  });

  it("keeps gradients zero off the winning joint sample", async () => {
    const gt: GtArray = [[[0, 0], [1, 0]]];
    const pred: PredArray = [
      [[[0.1, 0], [1.1, 0]]],
      [[[5, 5], [6, 5]]],
    ];
    const result = await lossesOn(session, pred, gt,
      { useMarginal: false, useJoint: true });
    expect(result.activeSamples.joint).toBe(0);
    for (const point of result.grad[1]![0]!) {
      expect(point).toEqual([0, 0]);
    }
  });
});

describe("binding validation and error mapping", () => {
  it("rejects mismatched pred/gt shapes before dispatch", async () => {
    const pred: PredArray = [[[[0, 0]], [[1, 1]]]];
    const gt: GtArray = [[[0, 0]]];
    await expect(metricsOn(undefined as never, pred, gt)).rejects.toThrow(ShapeMismatchError);
  });

  it("reports expected and actual shapes", async () => {
    const pred: PredArray = [[[[0, 0]]]];
    const gt: GtArray = [[[0, 0], [1, 1]]];
    try {
      await metricsOn(undefined as never, pred, gt);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ShapeMismatchError);
      const shapeErr = err as ShapeMismatchError;
      expect(shapeErr.expected).toContain("2");
      expect(shapeErr.actual).toContain("1");
    }
  });

  it("rejects ragged arrays", async () => {
    const ragged = [[[[0, 0], [1, 1]], [[0, 0]]]] as unknown as PredArray;
    const gt: GtArray = [[[0, 0], [1, 1]], [[0, 0], [1, 1]]];
    await expect(metricsOn(undefined as never, ragged, gt)).rejects.toThrow(ShapeMismatchError);
  });

  it("maps native option errors to NativeError", async () => {
    const session = new TrajevalSession();
    try {
      const gt: GtArray = [[[0, 0]]];
      const pred: PredArray = [[[[0, 0]]]];
      await expect(
        lossesOn(session, pred, gt, { useMarginal: false, useJoint: false }),
      ).rejects.toThrow(NativeError);
    } finally {
      session.close();
    }
  });

  it("one-shot helper works without explicit session management", async () => {
    const gt: GtArray = [[[1, 2]]];
    const pred: PredArray = [[[[1, 2]]], [[[4, 6]]]];
    const result = await metrics(pred, gt, { metrics: ["ade", "fde"] });
    expect(result.metrics.ade).toBe(0);
  });
});

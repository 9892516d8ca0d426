/**
 * Golden-vector generation for cross-implementation forward-pass checks.
 *
 * Each case carries a full random weight set (float32-rounded so both
 * implementations consume bit-identical parameters), one history window, an
 * anchor, and the reference outputs of the forward pass.
 */

import type { Model, ModelShape } from "./model.js";
import { forward, zeroModel } from "./model.js";
import { modelTensors } from "./weights.js";
import { Rng } from "./rng.js";

export interface GoldenCase {
  tensors: Record<string, [number[], number[]]>;
  history: number[][];
  anchor: [number, number];
  expected: { pi: number[]; means: number[][]; sigmas: number[][] };
}

export interface GoldenSet {
  h: number;
  k: number;
  hidden: number;
  cases: GoldenCase[];
}

/** Reference forward pass: absolute mixture parameters for one window. */
export function referenceForward(m: Model, history: number[][], anchor: [number, number]) {
  const flat = new Float64Array(m.shape.historyLen * 2);
  history.forEach(([vx, vy], t) => {
    flat[2 * t] = vx;
    flat[2 * t + 1] = vy;
  });
  const mix = forward(m, flat);
  const pi = [...mix.pi];
  const means: number[][] = [];
  const sigmas: number[][] = [];
  for (let i = 0; i < m.shape.k; i++) {
    means.push([mix.means[2 * i] + anchor[0], mix.means[2 * i + 1] + anchor[1]]);
    sigmas.push([mix.sigmas[2 * i], mix.sigmas[2 * i + 1]]);
  }
  return { weights: pi, means, sigmas };
}

export function generateGolden(seed: number, nCases = 10): GoldenSet {
  const shape: ModelShape = { historyLen: 6, k: 3, hidden: 8, layers: 2 };
  const rng = new Rng(seed);
  const cases: GoldenCase[] = [];
  for (let c = 0; c < nCases; c++) {
    const m = zeroModel(shape);
    for (const t of modelTensors(m)) {
      for (let i = 0; i < t.data.length; i++) t.data[i] = Math.fround(rng.normal() * 0.6);
    }
    const history: number[][] = [];
    for (let t = 0; t < shape.historyLen; t++) {
      history.push([rng.normal() * 4.0, rng.normal() * 4.0]);
    }
    const anchor: [number, number] = [rng.uniform(-500, 500), rng.uniform(-500, 500)];
    const out = referenceForward(m, history, anchor);
    const tensors: Record<string, [number[], number[]]> = {};
    for (const t of modelTensors(m)) tensors[t.name] = [t.dims, [...t.data]];
    cases.push({
      tensors,
      history,
      anchor,
      expected: { pi: out.weights, means: out.means, sigmas: out.sigmas },
    });
  }
  return { h: shape.historyLen, k: shape.k, hidden: shape.hidden, cases };
}

/**
 * Negative-log-likelihood training with standardized inputs and targets.
 *
 * Standardization constants are folded back into the serialized tensors
 * afterwards (both maps are affine, so the fold is exact): the weight file
 * always maps raw velocities to physical displacements.
 */

import { Adam } from "./adam.js";
import type { Window } from "./dataset.js";
import type { Model, ModelShape } from "./model.js";
import { backward, flattenGradients, flattenParams, initModel, nll, zeroGradients } from "./model.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  historyLen: number;
  k: number;
  hidden: number;
  epochs: number;
  lr: number;
  batch: number;
  seed: number;
  valFrac: number;
}

export const DEFAULT_TRAIN: TrainConfig = {
  historyLen: 8,
  k: 5,
  hidden: 128,
  epochs: 20,
  lr: 2e-3,
  batch: 64,
  seed: 1,
  valFrac: 0.1,
};

export interface Standardizer {
  meanIn: Float64Array; // (2)
  stdIn: Float64Array;
  meanOut: Float64Array; // (2)
  stdOut: Float64Array;
}

export function fitStandardizer(windows: Window[]): Standardizer {
  const mIn = new Float64Array(2);
  const mOut = new Float64Array(2);
  const sIn = new Float64Array(2);
  const sOut = new Float64Array(2);
  let nIn = 0;
  for (const w of windows) {
    for (let s = 0; s < w.history.length; s += 2) {
      mIn[0] += w.history[s];
      mIn[1] += w.history[s + 1];
      nIn += 1;
    }
    mOut[0] += w.target[0];
    mOut[1] += w.target[1];
  }
  for (let d = 0; d < 2; d++) {
    mIn[d] /= nIn;
    mOut[d] /= windows.length;
  }
  for (const w of windows) {
    for (let s = 0; s < w.history.length; s += 2) {
      sIn[0] += (w.history[s] - mIn[0]) ** 2;
      sIn[1] += (w.history[s + 1] - mIn[1]) ** 2;
    }
    sOut[0] += (w.target[0] - mOut[0]) ** 2;
    sOut[1] += (w.target[1] - mOut[1]) ** 2;
  }
  for (let d = 0; d < 2; d++) {
    sIn[d] = Math.max(Math.sqrt(sIn[d] / nIn), 1e-6);
    sOut[d] = Math.max(Math.sqrt(sOut[d] / windows.length), 1e-6);
  }
  return { meanIn: mIn, stdIn: sIn, meanOut: mOut, stdOut: sOut };
}

function standardize(windows: Window[], st: Standardizer): Window[] {
  return windows.map((w) => {
    const history = new Float64Array(w.history.length);
    for (let s = 0; s < w.history.length; s += 2) {
      history[s] = (w.history[s] - st.meanIn[0]) / st.stdIn[0];
      history[s + 1] = (w.history[s + 1] - st.meanIn[1]) / st.stdIn[1];
    }
    return {
      history,
      target: new Float64Array([
        (w.target[0] - st.meanOut[0]) / st.stdOut[0],
        (w.target[1] - st.meanOut[1]) / st.stdOut[1],
      ]),
    };
  });
}

/** Exact affine fold of the standardizer into the model tensors. */
export function foldStandardizer(m: Model, st: Standardizer): void {
  const layer0 = m.lstm[0];
  const h4 = layer0.b.length;
  for (let r = 0; r < h4; r++) {
    for (let d = 0; d < 2; d++) {
      const idx = r * 2 + d;
      layer0.b[r] -= (layer0.wx[idx] * st.meanIn[d]) / st.stdIn[d];
      layer0.wx[idx] /= st.stdIn[d];
    }
  }
  const head = m.head;
  const hidden = m.shape.hidden;
  for (let i = 0; i < head.bmu.length; i++) {
    const d = i & 1;
    head.bmu[i] = head.bmu[i] * st.stdOut[d] + st.meanOut[d];
    head.bs[i] += Math.log(st.stdOut[d]);
    for (let j = 0; j < hidden; j++) head.wmu[i * hidden + j] *= st.stdOut[d];
  }
}

export interface TrainResult {
  model: Model; // folded: raw velocities in, physical displacements out
  trainNll: number[];
  valNll: number[];
  standardizer: Standardizer;
}

export function train(windows: Window[], cfg: TrainConfig): TrainResult {
  if (windows.length === 0) {
    throw new Error("empty dataset: no training windows");
  }
  const shape: ModelShape = { historyLen: cfg.historyLen, k: cfg.k, hidden: cfg.hidden, layers: 2 };
  for (const w of windows) {
    if (w.history.length !== 2 * cfg.historyLen) {
      throw new Error(`window history length ${w.history.length / 2} does not match H=${cfg.historyLen}`);
    }
  }
  const st = fitStandardizer(windows);
  const data = standardize(windows, st);

  const rng = new Rng(cfg.seed);
  const model = initModel(shape, rng);
  const params = flattenParams(model);
  const adam = new Adam(params, cfg.lr);

  const idx = new Int32Array(data.length);
  for (let i = 0; i < idx.length; i++) idx[i] = i;
  rng.shuffle(idx);
  const nVal = Math.max(1, Math.floor(cfg.valFrac * data.length));
  const valIdx = idx.slice(0, nVal);
  const trainIdx = idx.slice(nVal);

  const trainNll: number[] = [];
  const valNll: number[] = [];
  const grads = zeroGradients(model);
  const gradArrays = flattenGradients(grads);
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    rng.shuffle(trainIdx);
    let lossSum = 0;
    for (let start = 0; start < trainIdx.length; start += cfg.batch) {
      const end = Math.min(start + cfg.batch, trainIdx.length);
      for (const g of gradArrays) g.fill(0);
      for (let i = start; i < end; i++) {
        const w = data[trainIdx[i]];
        lossSum += backward(model, w.history, w.target, grads);
      }
      const scale = 1.0 / (end - start);
      for (const g of gradArrays) {
        for (let j = 0; j < g.length; j++) g[j] *= scale;
      }
      adam.step(params, gradArrays);
    }
    trainNll.push(lossSum / trainIdx.length);
    let valSum = 0;
    for (const i of valIdx) valSum += nll(model, data[i].history, data[i].target);
    valNll.push(valSum / valIdx.length);
  }

  foldStandardizer(model, st);
  return { model, trainNll, valNll, standardizer: st };
}

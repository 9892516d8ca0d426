/**
 * Recurrent mixture-density model over 2-D velocity windows.
 *
 * Two LSTM layers followed by a mixture-density head that emits K component
 * weights (softmax), K 2-D displacement means (linear) and K 2-D standard
 * deviations (exp). Gate blocks are ordered input, forget, cell, output;
 * gate activations are sigmoid, cell activations tanh. Training minimizes
 * the negative log-likelihood of the observed displacement; gradients are
 * computed by hand with full backpropagation through time and verified by
 * finite differences in the test suite.
 */

import { Rng } from "./rng.js";

export interface ModelShape {
  historyLen: number;
  k: number;
  hidden: number;
  layers: number; // fixed at 2 for the portable format
}

export interface LayerParams {
  wx: Float64Array; // (4h, in) row-major
  wh: Float64Array; // (4h, h)
  b: Float64Array; // (4h)
  inDim: number;
}

export interface HeadParams {
  wpi: Float64Array; // (K, h)
  bpi: Float64Array;
  wmu: Float64Array; // (2K, h)
  bmu: Float64Array;
  ws: Float64Array; // (2K, h)
  bs: Float64Array;
}

export interface Model {
  shape: ModelShape;
  lstm: LayerParams[];
  head: HeadParams;
}

export interface Mixture {
  pi: Float64Array; // (K)
  means: Float64Array; // (K, 2) displacement from the anchor
  sigmas: Float64Array; // (K, 2)
}

const LOG_2PI = Math.log(2.0 * Math.PI);

function sigmoid(x: number): number {
  return x >= 0 ? 1.0 / (1.0 + Math.exp(-x)) : Math.exp(x) / (1.0 + Math.exp(x));
}

export function zeroModel(shape: ModelShape): Model {
  const h = shape.hidden;
  const lstm: LayerParams[] = [];
  for (let l = 0; l < shape.layers; l++) {
    const inDim = l === 0 ? 2 : h;
    lstm.push({
      wx: new Float64Array(4 * h * inDim),
      wh: new Float64Array(4 * h * h),
      b: new Float64Array(4 * h),
      inDim,
    });
  }
  return {
    shape,
    lstm,
    head: {
      wpi: new Float64Array(shape.k * h),
      bpi: new Float64Array(shape.k),
      wmu: new Float64Array(2 * shape.k * h),
      bmu: new Float64Array(2 * shape.k),
      ws: new Float64Array(2 * shape.k * h),
      bs: new Float64Array(2 * shape.k),
    },
  };
}

/** Glorot-style init; biases zero except a +1 forget-gate bias. */
export function initModel(shape: ModelShape, rng: Rng): Model {
  const m = zeroModel(shape);
  const h = shape.hidden;
  for (const layer of m.lstm) {
    const sx = Math.sqrt(1.0 / layer.inDim);
    const sh = Math.sqrt(1.0 / h);
    for (let i = 0; i < layer.wx.length; i++) layer.wx[i] = rng.normal() * sx;
    for (let i = 0; i < layer.wh.length; i++) layer.wh[i] = rng.normal() * sh;
    for (let g = 0; g < h; g++) layer.b[h + g] = 1.0; // forget gate
  }
  const sh = Math.sqrt(1.0 / h);
  const head = m.head;
  for (let i = 0; i < head.wpi.length; i++) head.wpi[i] = rng.normal() * sh;
  for (let i = 0; i < head.wmu.length; i++) head.wmu[i] = rng.normal() * sh;
  for (let i = 0; i < head.ws.length; i++) head.ws[i] = rng.normal() * sh * 0.1;
  return m;
}

export function flattenParams(m: Model): Float64Array[] {
  const out: Float64Array[] = [];
  for (const l of m.lstm) out.push(l.wx, l.wh, l.b);
  out.push(m.head.wpi, m.head.bpi, m.head.wmu, m.head.bmu, m.head.ws, m.head.bs);
  return out;
}

interface LayerCache {
  xs: Float64Array[]; // inputs per t
  gates: Float64Array[]; // activated (i, f, g, o) per t
  cs: Float64Array[]; // cell states per t
  hs: Float64Array[]; // hidden states per t
}

interface ForwardCache {
  layers: LayerCache[];
  hFinal: Float64Array;
  logits: Float64Array;
  pi: Float64Array;
  mu: Float64Array;
  logSig: Float64Array;
}

function runLayer(layer: LayerParams, h: number, xs: Float64Array[]): LayerCache {
  const T = xs.length;
  const cache: LayerCache = { xs, gates: [], cs: [], hs: [] };
  let hPrev = new Float64Array(h);
  let cPrev = new Float64Array(h);
  for (let t = 0; t < T; t++) {
    const x = xs[t];
    const act = new Float64Array(4 * h);
    for (let r = 0; r < 4 * h; r++) {
      let a = layer.b[r];
      const xOff = r * layer.inDim;
      for (let j = 0; j < layer.inDim; j++) a += layer.wx[xOff + j] * x[j];
      const hOff = r * h;
      for (let j = 0; j < h; j++) a += layer.wh[hOff + j] * hPrev[j];
      act[r] = a;
    }
    const c = new Float64Array(h);
    const hOut = new Float64Array(h);
    for (let j = 0; j < h; j++) {
      const ig = sigmoid(act[j]);
      const fg = sigmoid(act[h + j]);
      const gg = Math.tanh(act[2 * h + j]);
      const og = sigmoid(act[3 * h + j]);
      act[j] = ig;
      act[h + j] = fg;
      act[2 * h + j] = gg;
      act[3 * h + j] = og;
      c[j] = fg * cPrev[j] + ig * gg;
      hOut[j] = og * Math.tanh(c[j]);
    }
    cache.gates.push(act);
    cache.cs.push(c);
    cache.hs.push(hOut);
    hPrev = hOut;
    cPrev = c;
  }
  return cache;
}

function headForward(m: Model, hFinal: Float64Array): { logits: Float64Array; pi: Float64Array; mu: Float64Array; logSig: Float64Array } {
  const { k, hidden: h } = m.shape;
  const { wpi, bpi, wmu, bmu, ws, bs } = m.head;
  const logits = new Float64Array(k);
  for (let i = 0; i < k; i++) {
    let a = bpi[i];
    for (let j = 0; j < h; j++) a += wpi[i * h + j] * hFinal[j];
    logits[i] = a;
  }
  let maxL = -Infinity;
  for (const v of logits) maxL = Math.max(maxL, v);
  const pi = new Float64Array(k);
  let z = 0;
  for (let i = 0; i < k; i++) {
    pi[i] = Math.exp(logits[i] - maxL);
    z += pi[i];
  }
  for (let i = 0; i < k; i++) pi[i] /= z;
  const mu = new Float64Array(2 * k);
  const logSig = new Float64Array(2 * k);
  for (let i = 0; i < 2 * k; i++) {
    let am = bmu[i];
    let as = bs[i];
    for (let j = 0; j < h; j++) {
      am += wmu[i * h + j] * hFinal[j];
      as += ws[i * h + j] * hFinal[j];
    }
    mu[i] = am;
    logSig[i] = as;
  }
  return { logits, pi, mu, logSig };
}

function forwardCached(m: Model, history: Float64Array): ForwardCache {
  const { historyLen, hidden: h } = m.shape;
  let xs: Float64Array[] = [];
  for (let t = 0; t < historyLen; t++) xs.push(history.subarray(2 * t, 2 * t + 2));
  const layers: LayerCache[] = [];
  for (const layer of m.lstm) {
    const cache = runLayer(layer, h, xs);
    layers.push(cache);
    xs = cache.hs;
  }
  const hFinal = layers[layers.length - 1].hs[historyLen - 1];
  return { layers, hFinal, ...headForward(m, hFinal) };
}

/** Inference: mixture parameters for one (historyLen, 2) window. */
export function forward(m: Model, history: Float64Array): Mixture {
  const fc = forwardCached(m, history);
  const sigmas = new Float64Array(fc.logSig.length);
  for (let i = 0; i < sigmas.length; i++) sigmas[i] = Math.exp(fc.logSig[i]);
  return { pi: fc.pi, means: fc.mu, sigmas };
}

/** Mean NLL of a displacement target under the predicted mixture. */
export function nll(m: Model, history: Float64Array, target: Float64Array): number {
  const fc = forwardCached(m, history);
  return nllFromHead(m.shape.k, fc, target).loss;
}

function nllFromHead(k: number, fc: ForwardCache, target: Float64Array) {
  // log-sum-exp of log pi_k + log N_k with responsibilities for the backward pass
  const comp = new Float64Array(k);
  for (let i = 0; i < k; i++) {
    const sx = fc.logSig[2 * i];
    const sy = fc.logSig[2 * i + 1];
    const zx = (target[0] - fc.mu[2 * i]) * Math.exp(-sx);
    const zy = (target[1] - fc.mu[2 * i + 1]) * Math.exp(-sy);
    comp[i] = Math.log(fc.pi[i]) - LOG_2PI - sx - sy - 0.5 * (zx * zx + zy * zy);
  }
  let maxC = -Infinity;
  for (const v of comp) maxC = Math.max(maxC, v);
  let s = 0;
  for (let i = 0; i < k; i++) s += Math.exp(comp[i] - maxC);
  const logLik = maxC + Math.log(s);
  const gamma = new Float64Array(k);
  for (let i = 0; i < k; i++) gamma[i] = Math.exp(comp[i] - logLik);
  return { loss: -logLik, gamma };
}

export interface Gradients {
  lstm: { wx: Float64Array; wh: Float64Array; b: Float64Array }[];
  head: { wpi: Float64Array; bpi: Float64Array; wmu: Float64Array; bmu: Float64Array; ws: Float64Array; bs: Float64Array };
}

export function zeroGradients(m: Model): Gradients {
  return {
    lstm: m.lstm.map((l) => ({
      wx: new Float64Array(l.wx.length),
      wh: new Float64Array(l.wh.length),
      b: new Float64Array(l.b.length),
    })),
    head: {
      wpi: new Float64Array(m.head.wpi.length),
      bpi: new Float64Array(m.head.bpi.length),
      wmu: new Float64Array(m.head.wmu.length),
      bmu: new Float64Array(m.head.bmu.length),
      ws: new Float64Array(m.head.ws.length),
      bs: new Float64Array(m.head.bs.length),
    },
  };
}

export function flattenGradients(g: Gradients): Float64Array[] {
  const out: Float64Array[] = [];
  for (const l of g.lstm) out.push(l.wx, l.wh, l.b);
  out.push(g.head.wpi, g.head.bpi, g.head.wmu, g.head.bmu, g.head.ws, g.head.bs);
  return out;
}

/** Accumulate dNLL/dparams for one window into `grads`; returns the loss. */
export function backward(m: Model, history: Float64Array, target: Float64Array, grads: Gradients): number {
  const { k, hidden: h, historyLen: T, layers: L } = m.shape;
  const fc = forwardCached(m, history);
  const { loss, gamma } = nllFromHead(k, fc, target);

  // head gradients and dL/dh_final
  const dH = new Float64Array(h);
  const gh = grads.head;
  for (let i = 0; i < k; i++) {
    const dLogit = fc.pi[i] - gamma[i];
    gh.bpi[i] += dLogit;
    for (let j = 0; j < h; j++) {
      gh.wpi[i * h + j] += dLogit * fc.hFinal[j];
      dH[j] += dLogit * m.head.wpi[i * h + j];
    }
  }
  for (let i = 0; i < 2 * k; i++) {
    const gi = gamma[i >> 1];
    const sig = Math.exp(fc.logSig[i]);
    const zi = (target[i & 1] - fc.mu[i]) / sig;
    const dMu = -gi * (zi / sig); // d(-logLik)/dmu
    const dLs = gi * (1.0 - zi * zi); // d(-logLik)/dlogsigma
    gh.bmu[i] += dMu;
    gh.bs[i] += dLs;
    for (let j = 0; j < h; j++) {
      gh.wmu[i * h + j] += dMu * fc.hFinal[j];
      gh.ws[i * h + j] += dLs * fc.hFinal[j];
      dH[j] += dMu * m.head.wmu[i * h + j] + dLs * m.head.ws[i * h + j];
    }
  }

  // BPTT, top layer down; only the final step of the top layer feeds the head
  let dHsOut: Float64Array[] = [];
  for (let t = 0; t < T; t++) dHsOut.push(new Float64Array(h));
  dHsOut[T - 1] = dH;
  for (let l = L - 1; l >= 0; l--) {
    const layer = m.lstm[l];
    const cache = fc.layers[l];
    const gl = grads.lstm[l];
    const dXs: Float64Array[] = [];
    for (let t = 0; t < T; t++) dXs.push(new Float64Array(layer.inDim));
    let dHCarry = new Float64Array(h);
    let dCCarry = new Float64Array(h);
    for (let t = T - 1; t >= 0; t--) {
      const gates = cache.gates[t];
      const c = cache.cs[t];
      const cPrev = t > 0 ? cache.cs[t - 1] : new Float64Array(h);
      const hPrev = t > 0 ? cache.hs[t - 1] : new Float64Array(h);
      const x = cache.xs[t];
      const da = new Float64Array(4 * h);
      const dHNextCarry = new Float64Array(h);
      const dCNextCarry = new Float64Array(h);
      for (let j = 0; j < h; j++) {
        const dh = dHsOut[t][j] + dHCarry[j];
        const ig = gates[j];
        const fg = gates[h + j];
        const gg = gates[2 * h + j];
        const og = gates[3 * h + j];
        const tc = Math.tanh(c[j]);
        const dc = dCCarry[j] + dh * og * (1.0 - tc * tc);
        da[3 * h + j] = dh * tc * og * (1.0 - og);
        da[j] = dc * gg * ig * (1.0 - ig);
        da[h + j] = dc * cPrev[j] * fg * (1.0 - fg);
        da[2 * h + j] = dc * ig * (1.0 - gg * gg);
        dCNextCarry[j] = dc * fg;
      }
      for (let r = 0; r < 4 * h; r++) {
        const dv = da[r];
        if (dv === 0.0) continue;
        gl.b[r] += dv;
        const xOff = r * layer.inDim;
        for (let j = 0; j < layer.inDim; j++) {
          gl.wx[xOff + j] += dv * x[j];
          dXs[t][j] += dv * layer.wx[xOff + j];
        }
        const hOff = r * h;
        for (let j = 0; j < h; j++) {
          gl.wh[hOff + j] += dv * hPrev[j];
          dHNextCarry[j] += dv * layer.wh[hOff + j];
        }
      }
      dHCarry = dHNextCarry;
      dCCarry = dCNextCarry;
    }
    dHsOut = dXs; // feeds dL/dh of the layer below
  }
  return loss;
}

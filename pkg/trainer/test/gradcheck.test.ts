import { describe, expect, it } from "vitest";
import { backward, flattenGradients, flattenParams, initModel, nll, zeroGradients } from "../src/model.js";
import { Rng } from "../src/rng.js";

describe("analytic gradients vs central finite differences", () => {
  it("matches on a tiny model to 1e-6 relative", () => {
    const shape = { historyLen: 3, k: 2, hidden: 3, layers: 2 };
    const rng = new Rng(7);
    const model = initModel(shape, rng);
    const history = new Float64Array([0.4, -0.2, 0.1, 0.8, -0.6, 0.3]);
    const target = new Float64Array([0.9, -1.3]);

    const grads = zeroGradients(model);
    backward(model, history, target, grads);
    const params = flattenParams(model);
    const analytic = flattenGradients(grads);

    // mixed tolerance: relative for healthy gradients, absolute floor for
    // near-zero ones where central differences bottom out in float noise
    const eps = 1e-5;
    let worst = 0;
    for (let a = 0; a < params.length; a++) {
      const p = params[a];
      for (let j = 0; j < p.length; j++) {
        const orig = p[j];
        p[j] = orig + eps;
        const up = nll(model, history, target);
        p[j] = orig - eps;
        const dn = nll(model, history, target);
        p[j] = orig;
        const numeric = (up - dn) / (2 * eps);
        const scale = Math.max(Math.abs(numeric), Math.abs(analytic[a][j]));
        const err = Math.abs(numeric - analytic[a][j]) / (scale * 1e-6 + 1e-9);
        worst = Math.max(worst, err);
      }
    }
    expect(worst).toBeLessThan(1.0);
  });

  it("accumulates over a batch additively", () => {
    const shape = { historyLen: 2, k: 2, hidden: 2, layers: 2 };
    const model = initModel(shape, new Rng(3));
    const w1 = { history: new Float64Array([0.1, 0.2, -0.3, 0.4]), target: new Float64Array([0.5, -0.5]) };
    const w2 = { history: new Float64Array([-0.6, 0.1, 0.2, -0.2]), target: new Float64Array([-0.1, 0.8]) };

    const gBoth = zeroGradients(model);
    backward(model, w1.history, w1.target, gBoth);
    backward(model, w2.history, w2.target, gBoth);

    const gA = zeroGradients(model);
    backward(model, w1.history, w1.target, gA);
    const gB = zeroGradients(model);
    backward(model, w2.history, w2.target, gB);

    const both = flattenGradients(gBoth);
    const a = flattenGradients(gA);
    const b = flattenGradients(gB);
    for (let i = 0; i < both.length; i++) {
      for (let j = 0; j < both[i].length; j++) {
        expect(both[i][j]).toBeCloseTo(a[i][j] + b[i][j], 10);
      }
    }
  });
});

/** Adam optimizer over a list of parameter/gradient array pairs. */

export class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;

  constructor(
    params: Float64Array[],
    private lr = 1e-3,
    private beta1 = 0.9,
    private beta2 = 0.999,
    private eps = 1e-8,
  ) {
    this.m = params.map((p) => new Float64Array(p.length));
    this.v = params.map((p) => new Float64Array(p.length));
  }

  step(params: Float64Array[], grads: Float64Array[]): void {
    this.t += 1;
    const c1 = 1.0 - Math.pow(this.beta1, this.t);
    const c2 = 1.0 - Math.pow(this.beta2, this.t);
    for (let i = 0; i < params.length; i++) {
      const p = params[i];
      const g = grads[i];
      const m = this.m[i];
      const v = this.v[i];
      for (let j = 0; j < p.length; j++) {
        m[j] = this.beta1 * m[j] + (1.0 - this.beta1) * g[j];
        v[j] = this.beta2 * v[j] + (1.0 - this.beta2) * g[j] * g[j];
        p[j] -= (this.lr * (m[j] / c1)) / (Math.sqrt(v[j] / c2) + this.eps);
      }
    }
  }
}

/**
 * PISMDN1 weight container: the file format consumed by the simulator.
 *
 *   magic "PISMDN1" | u32 H | u32 K | u32 hidden | u32 n_layers | u32 n_tensors
 *   per tensor: u32 name_len | name utf-8 | u32 rank | u32 dims[rank] | f32 data
 *
 * Little-endian throughout, row-major float32 data, tensors sorted by name.
 * Expected names: lstm{i}.w_x (4h,in), lstm{i}.w_h (4h,h), lstm{i}.b (4h,),
 * mdn.w_pi (K,h), mdn.b_pi (K,), mdn.w_mu (2K,h), mdn.b_mu (2K,),
 * mdn.w_s (2K,h), mdn.b_s (2K,).
 */

import { readFileSync, writeFileSync } from "node:fs";
import type { Model, ModelShape } from "./model.js";
import { zeroModel } from "./model.js";

const MAGIC = Buffer.from("PISMDN1", "ascii");

export interface NamedTensor {
  name: string;
  dims: number[];
  data: Float64Array;
}

export function modelTensors(m: Model): NamedTensor[] {
  const { k, hidden: h } = m.shape;
  const out: NamedTensor[] = [];
  m.lstm.forEach((layer, i) => {
    out.push({ name: `lstm${i}.w_x`, dims: [4 * h, layer.inDim], data: layer.wx });
    out.push({ name: `lstm${i}.w_h`, dims: [4 * h, h], data: layer.wh });
    out.push({ name: `lstm${i}.b`, dims: [4 * h], data: layer.b });
  });
  out.push({ name: "mdn.w_pi", dims: [k, h], data: m.head.wpi });
  out.push({ name: "mdn.b_pi", dims: [k], data: m.head.bpi });
  out.push({ name: "mdn.w_mu", dims: [2 * k, h], data: m.head.wmu });
  out.push({ name: "mdn.b_mu", dims: [2 * k], data: m.head.bmu });
  out.push({ name: "mdn.w_s", dims: [2 * k, h], data: m.head.ws });
  out.push({ name: "mdn.b_s", dims: [2 * k], data: m.head.bs });
  out.sort((a, b) => (a.name < b.name ? -1 : 1));
  return out;
}

export function saveModel(m: Model, path: string): void {
  const tensors = modelTensors(m);
  let size = MAGIC.length + 5 * 4;
  for (const t of tensors) {
    size += 4 + Buffer.byteLength(t.name) + 4 + 4 * t.dims.length + 4 * t.data.length;
  }
  const buf = Buffer.alloc(size);
  let off = 0;
  off += MAGIC.copy(buf, off);
  for (const v of [m.shape.historyLen, m.shape.k, m.shape.hidden, m.shape.layers, tensors.length]) {
    off = buf.writeUInt32LE(v, off);
  }
  for (const t of tensors) {
    const nameBytes = Buffer.from(t.name, "utf-8");
    off = buf.writeUInt32LE(nameBytes.length, off);
    off += nameBytes.copy(buf, off);
    off = buf.writeUInt32LE(t.dims.length, off);
    for (const d of t.dims) off = buf.writeUInt32LE(d, off);
    for (let i = 0; i < t.data.length; i++) off = buf.writeFloatLE(Math.fround(t.data[i]), off);
  }
  writeFileSync(path, buf);
}

export function loadModel(path: string): Model {
  const buf = readFileSync(path);
  if (!buf.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error(`${path}: not a PISMDN1 file`);
  }
  let off = MAGIC.length;
  const historyLen = buf.readUInt32LE(off);
  const k = buf.readUInt32LE(off + 4);
  const hidden = buf.readUInt32LE(off + 8);
  const layers = buf.readUInt32LE(off + 12);
  const nTensors = buf.readUInt32LE(off + 16);
  off += 20;
  const shape: ModelShape = { historyLen, k, hidden, layers };
  const m = zeroModel(shape);
  const targets = new Map<string, Float64Array>();
  for (const t of modelTensors(m)) targets.set(t.name, t.data);
  for (let i = 0; i < nTensors; i++) {
    const nameLen = buf.readUInt32LE(off);
    off += 4;
    const name = buf.subarray(off, off + nameLen).toString("utf-8");
    off += nameLen;
    const rank = buf.readUInt32LE(off);
    off += 4;
    let count = 1;
    for (let r = 0; r < rank; r++) {
      count *= buf.readUInt32LE(off);
      off += 4;
    }
    const dst = targets.get(name);
    if (dst === undefined) throw new Error(`${path}: unexpected tensor ${name}`);
    if (dst.length !== count) throw new Error(`${path}: tensor ${name} has ${count} values, expected ${dst.length}`);
    for (let j = 0; j < count; j++) {
      dst[j] = buf.readFloatLE(off);
      off += 4;
    }
    targets.delete(name);
  }
  if (targets.size > 0) throw new Error(`${path}: missing tensors ${[...targets.keys()].join(", ")}`);
  if (off !== buf.length) throw new Error(`${path}: ${buf.length - off} trailing bytes`);
  return m;
}

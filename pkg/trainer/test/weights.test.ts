import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { initModel, forward } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { loadModel, saveModel } from "../src/weights.js";

describe("weight file round trip", () => {
  it("loads back what it wrote, at float32 precision", () => {
    const dir = mkdtempSync(join(tmpdir(), "mdnw-"));
    const shape = { historyLen: 5, k: 3, hidden: 6, layers: 2 };
    const m = initModel(shape, new Rng(9));
    const path = join(dir, "model.pismdn");
    saveModel(m, path);
    const m2 = loadModel(path);
    expect(m2.shape).toEqual(shape);
    for (let l = 0; l < 2; l++) {
      for (let i = 0; i < m.lstm[l].wx.length; i++) {
        expect(m2.lstm[l].wx[i]).toBe(Math.fround(m.lstm[l].wx[i]));
      }
    }
    for (let i = 0; i < m.head.bs.length; i++) {
      expect(m2.head.bs[i]).toBe(Math.fround(m.head.bs[i]));
    }
  });

  it("header carries magic and shape fields", () => {
    const dir = mkdtempSync(join(tmpdir(), "mdnw-"));
    const m = initModel({ historyLen: 8, k: 4, hidden: 12, layers: 2 }, new Rng(1));
    const path = join(dir, "model.pismdn");
    saveModel(m, path);
    const buf = readFileSync(path);
    expect(buf.subarray(0, 7).toString("ascii")).toBe("PISMDN1");
    expect(buf.readUInt32LE(7)).toBe(8);
    expect(buf.readUInt32LE(11)).toBe(4);
    expect(buf.readUInt32LE(15)).toBe(12);
    expect(buf.readUInt32LE(19)).toBe(2);
  });

  it("round-tripped model produces identical inference", () => {
    const dir = mkdtempSync(join(tmpdir(), "mdnw-"));
    const m = initModel({ historyLen: 4, k: 2, hidden: 5, layers: 2 }, new Rng(4));
    const path = join(dir, "model.pismdn");
    saveModel(m, path);
    const m2 = loadModel(path);
    saveModel(m2, join(dir, "again.pismdn"));
    expect(readFileSync(path).equals(readFileSync(join(dir, "again.pismdn")))).toBe(true);
    const hist = new Float64Array([1, 0, 0.5, -0.5, 0.2, 0.8, -1, 0.1]);
    const a = forward(m2, hist);
    const b = forward(loadModel(join(dir, "again.pismdn")), hist);
    expect([...a.pi]).toEqual([...b.pi]);
    expect([...a.means]).toEqual([...b.means]);
  });

  it("rejects files with a wrong magic", () => {
    const dir = mkdtempSync(join(tmpdir(), "mdnw-"));
    const path = join(dir, "junk.pismdn");
    writeFileSync(path, Buffer.from("NOPE123aaaa"));
    expect(() => loadModel(path)).toThrow(/PISMDN1/);
  });
});

/**
 * Training windows from exported trajectory files.
 *
 * The simulator's export writes one JSONL row per (user, step):
 * {user_id, t, vx, vy, x, y}, where (vx, vy) is the velocity applied over
 * the step ending at t and (x, y) the position after it. A window pairs H
 * consecutive velocities with the displacement of the following step.
 */

import { readFileSync } from "node:fs";
import { Rng } from "./rng.js";

export interface Window {
  history: Float64Array; // (H*2) velocities, oldest first
  target: Float64Array; // (2) next-step displacement in meters
}

interface Row {
  user_id: number;
  t: number;
  vx: number;
  vy: number;
  x: number;
  y: number;
}

export function windowsFromRows(rows: Row[], historyLen: number): Window[] {
  const byUser = new Map<number, Row[]>();
  for (const row of rows) {
    let list = byUser.get(row.user_id);
    if (!list) byUser.set(row.user_id, (list = []));
    list.push(row);
  }
  const windows: Window[] = [];
  for (const list of byUser.values()) {
    list.sort((a, b) => a.t - b.t);
    for (let j = 0; j + historyLen < list.length; j++) {
      const history = new Float64Array(historyLen * 2);
      for (let s = 0; s < historyLen; s++) {
        history[2 * s] = list[j + s].vx;
        history[2 * s + 1] = list[j + s].vy;
      }
      const last = list[j + historyLen - 1];
      const next = list[j + historyLen];
      windows.push({ history, target: new Float64Array([next.x - last.x, next.y - last.y]) });
    }
  }
  return windows;
}

export function loadWindows(path: string, historyLen: number): Window[] {
  const rows = readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as Row);
  return windowsFromRows(rows, historyLen);
}

/** Straight movers with optional per-step heading jitter (radians). */
export function syntheticStraightMovers(
  nUsers: number,
  nSteps: number,
  historyLen: number,
  dt: number,
  seed: number,
  headingJitter = 0.0,
  speedRange: [number, number] = [2.0, 8.0],
): Window[] {
  const rng = new Rng(seed);
  const rows: Row[] = [];
  for (let u = 0; u < nUsers; u++) {
    const speed = rng.uniform(speedRange[0], speedRange[1]);
    let heading = rng.uniform(0, 2 * Math.PI);
    let x = rng.uniform(0, 1000);
    let y = rng.uniform(0, 1000);
    for (let t = 1; t <= nSteps; t++) {
      const vx = speed * Math.cos(heading);
      const vy = speed * Math.sin(heading);
      x += vx * dt;
      y += vy * dt;
      rows.push({ user_id: u, t, vx, vy, x, y });
      if (headingJitter > 0) heading += rng.normal() * headingJitter;
    }
  }
  return windowsFromRows(rows, historyLen);
}

/** Constant-velocity histories whose targets carry isotropic Gaussian noise. */
export function syntheticIsotropicNoise(
  nWindows: number,
  historyLen: number,
  dt: number,
  sigma: number,
  seed: number,
): Window[] {
  const rng = new Rng(seed);
  const windows: Window[] = [];
  for (let i = 0; i < nWindows; i++) {
    const speed = rng.uniform(2.0, 8.0);
    const heading = rng.uniform(0, 2 * Math.PI);
    const vx = speed * Math.cos(heading);
    const vy = speed * Math.sin(heading);
    const history = new Float64Array(historyLen * 2);
    for (let s = 0; s < historyLen; s++) {
      history[2 * s] = vx;
      history[2 * s + 1] = vy;
    }
    windows.push({
      history,
      target: new Float64Array([vx * dt + sigma * rng.normal(), vy * dt + sigma * rng.normal()]),
    });
  }
  return windows;
}

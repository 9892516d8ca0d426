/** Trainer command line: train, golden, reference-forward. */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { loadWindows, syntheticStraightMovers } from "./dataset.js";
import { generateGolden, referenceForward } from "./golden.js";
import { DEFAULT_TRAIN, train } from "./train.js";
import { loadModel, saveModel } from "./weights.js";

function fail(msg: string): never {
  console.error(`error: ${msg}`);
  process.exit(1);
}

function cmdTrain(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      data: { type: "string" },
      out: { type: "string" },
      "history-len": { type: "string", default: String(DEFAULT_TRAIN.historyLen) },
      k: { type: "string", default: String(DEFAULT_TRAIN.k) },
      hidden: { type: "string", default: String(DEFAULT_TRAIN.hidden) },
      epochs: { type: "string", default: String(DEFAULT_TRAIN.epochs) },
      lr: { type: "string", default: String(DEFAULT_TRAIN.lr) },
      batch: { type: "string", default: String(DEFAULT_TRAIN.batch) },
      seed: { type: "string", default: String(DEFAULT_TRAIN.seed) },
      "val-frac": { type: "string", default: String(DEFAULT_TRAIN.valFrac) },
      synthetic: { type: "string" }, // "straight:<users>:<steps>" demo data
    },
  });
  if (!values.out) fail("--out is required");
  const cfg = {
    historyLen: Number(values["history-len"]),
    k: Number(values.k),
    hidden: Number(values.hidden),
    epochs: Number(values.epochs),
    lr: Number(values.lr),
    batch: Number(values.batch),
    seed: Number(values.seed),
    valFrac: Number(values["val-frac"]),
  };
  let windows;
  if (values.synthetic) {
    const [kind, users, steps] = values.synthetic.split(":");
    if (kind !== "straight") fail(`unknown synthetic dataset ${kind}`);
    windows = syntheticStraightMovers(Number(users ?? 40), Number(steps ?? 120),
      cfg.historyLen, 10.0, cfg.seed, 0.05);
  } else {
    if (!values.data) fail("--data or --synthetic is required");
    windows = loadWindows(values.data, cfg.historyLen);
  }
  if (windows.length === 0) fail("dataset yields no training windows");
  const t0 = Date.now();
  const result = train(windows, cfg);
  saveModel(result.model, values.out);
  console.log(JSON.stringify({
    windows: windows.length,
    epochs: cfg.epochs,
    train_nll: result.trainNll.map((v) => Number(v.toFixed(5))),
    val_nll: result.valNll.map((v) => Number(v.toFixed(5))),
    final_train_nll: result.trainNll[result.trainNll.length - 1],
    final_val_nll: result.valNll[result.valNll.length - 1],
    seconds: (Date.now() - t0) / 1000,
    out: values.out,
  }));
}

function cmdGolden(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      out: { type: "string" },
      seed: { type: "string", default: "2" },
      cases: { type: "string", default: "10" },
    },
  });
  if (!values.out) fail("--out is required");
  const golden = generateGolden(Number(values.seed), Number(values.cases));
  writeFileSync(values.out, JSON.stringify(golden));
  console.log(`wrote ${golden.cases.length} golden cases to ${values.out}`);
}

function cmdReferenceForward(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      weights: { type: "string" },
      history: { type: "string" },
    },
  });
  if (!values.weights || !values.history) fail("--weights and --history are required");
  const model = loadModel(values.weights);
  const spec = JSON.parse(readFileSync(values.history, "utf-8"));
  const anchor: [number, number] = spec.anchor ?? [0, 0];
  const out = referenceForward(model, spec.history, anchor);
  // schema matches the simulator's eval-proposal output for direct diffing
  console.log(JSON.stringify(out, Object.keys(out).sort()));
}

const [, , command, ...rest] = process.argv;
switch (command) {
  case "train":
    cmdTrain(rest);
    break;
  case "golden":
    cmdGolden(rest);
    break;
  case "reference-forward":
    cmdReferenceForward(rest);
    break;
  default:
    fail(`usage: cli.js <train|golden|reference-forward> [options]; got ${command ?? "nothing"}`);
}

#!/usr/bin/env node
/**
 * Single-image keypoint detection for the rotpose external adapter.
 *
 * Usage: rotpose-bridge <input-image> <output-json> [--model path] [--backend cpu|wasm]
 *
 * Reads one PNG or JPEG frame, runs MoveNet, and writes body-25 wire JSON.
 * The output file is written atomically (temp file + rename) so a crashed
 * invocation never leaves partial JSON behind. Exit code 0 on success, 1 on
 * any failure.
 */
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { parseArgs } from "node:util";

import { createDetector, defaultModelPath, estimateKeypoints, BackendHint } from "./detector";
import { decodeImage } from "./image";
import { toBody25, wireDocument } from "./wire";

const USAGE = "usage: rotpose-bridge <input-image> <output-json> [--model path] [--backend cpu|wasm]";

interface CliOptions {
  input: string;
  output: string;
  model: string;
  backend: BackendHint;
}

export function parseCli(argv: string[]): CliOptions {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      backend: { type: "string", default: "cpu" },
    },
    allowPositionals: true,
  });
  if (positionals.length !== 2) {
    throw new Error(USAGE);
  }
  if (values.backend !== "cpu" && values.backend !== "wasm") {
    throw new Error(`unknown backend "${values.backend}" (expected cpu or wasm)`);
  }
  return {
    input: positionals[0],
    output: positionals[1],
    model: values.model ?? defaultModelPath(),
    backend: values.backend,
  };
}

function writeAtomic(outputPath: string, text: string): void {
  const dir = path.dirname(path.resolve(outputPath));
  const tmp = path.join(dir, `.${path.basename(outputPath)}.${process.pid}.${Date.now()}.tmp`);
  fs.writeFileSync(tmp, text);
  try {
    fs.renameSync(tmp, outputPath);
  } catch (err) {
    fs.rmSync(tmp, { force: true });
    throw err;
  }
}

export async function run(argv: string[]): Promise<void> {
  const opts = parseCli(argv);
  const image = decodeImage(fs.readFileSync(opts.input));
  const detector = await createDetector(opts.model, opts.backend);
  try {
    const people = await estimateKeypoints(detector, image);
    const doc = wireDocument(people.map(toBody25));
    writeAtomic(opts.output, JSON.stringify(doc));
  } finally {
    detector.dispose();
  }
}

export function main(argv: string[]): void {
  run(argv)
    .then(() => process.exit(0))
    .catch((err: unknown) => {
      const msg = err instanceof Error ? err.message : String(err);
      process.stderr.write(`rotpose-bridge: ${msg}${os.EOL}`);
      process.exit(1);
    });
}

if (require.main === module) {
  main(process.argv.slice(2));
}

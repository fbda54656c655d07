import * as fsSync from "node:fs";
import { promises as fs } from "node:fs";
import * as path from "node:path";
import * as posedetection from "@tensorflow-models/pose-detection";
import * as tf from "@tensorflow/tfjs";

import { DecodedImage } from "./image";
import { Keypoint } from "./wire";

export type BackendHint = "cpu" | "wasm";

/** Serve a graph model from local files so no network fetch is needed. */
export function localModelHandler(jsonPath: string): tf.io.IOHandler {
  return {
    load: async () => {
      const modelDir = path.dirname(jsonPath);
      const modelJSON = JSON.parse(await fs.readFile(jsonPath, "utf8"));
      return tf.io.getModelArtifactsForJSON(modelJSON, async (manifest) => {
        const specs: tf.io.WeightsManifestEntry[] = [];
        const shards: ArrayBuffer[] = [];
        for (const group of manifest) {
          specs.push(...group.weights);
          for (const shard of group.paths) {
            const buf = await fs.readFile(path.join(modelDir, shard));
            shards.push(buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength));
          }
        }
        return [specs, tf.io.concatenateArrayBuffers(shards)];
      });
    },
  };
}

/** MoveNet singlepose lightning weights shipped inside @vladmandic/human. */
export function defaultModelPath(): string {
  // walk up to node_modules by hand, the package exports map hides subpaths
  const rel = path.join("node_modules", "@vladmandic", "human", "models", "movenet-lightning.json");
  let dir = __dirname;
  for (;;) {
    const candidate = path.join(dir, rel);
    if (fsSync.existsSync(candidate)) return candidate;
    const parent = path.dirname(dir);
    if (parent === dir) break;
    dir = parent;
  }
  throw new Error("@vladmandic/human model files not found, is the package installed?");
}

async function activateBackend(backend: BackendHint): Promise<void> {
  tf.env().set("PROD", true); // silences the tfjs-node advertisement banner
  if (backend === "wasm") {
    const wasm = await import("@tensorflow/tfjs-backend-wasm");
    const wasmDir = path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm/package.json"));
    wasm.setWasmPaths(path.join(wasmDir, "wasm-out") + path.sep);
  }
  await tf.setBackend(backend);
  await tf.ready();
}

export async function createDetector(
  modelPath: string,
  backend: BackendHint,
): Promise<posedetection.PoseDetector> {
  await fs.access(modelPath);
  await activateBackend(backend);
  return posedetection.createDetector(posedetection.SupportedModels.MoveNet, {
    modelType: posedetection.movenet.modelType.SINGLEPOSE_LIGHTNING,
    modelUrl: localModelHandler(modelPath),
  });
}

/** Run the detector on a decoded image and return COCO-17 keypoint sets. */
export async function estimateKeypoints(
  detector: posedetection.PoseDetector,
  image: DecodedImage,
): Promise<Keypoint[][]> {
  const input = tf.tensor3d(image.pixels, [image.height, image.width, 3], "int32");
  try {
    const poses = await detector.estimatePoses(input, { flipHorizontal: false });
    return poses.map((pose) => pose.keypoints as Keypoint[]);
  } finally {
    input.dispose();
  }
}

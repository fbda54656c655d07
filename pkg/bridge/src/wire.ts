/**
 * COCO-17 keypoints to body-25 wire triplets.
 *
 * The pipeline consumes {"people": [{"pose_keypoints_2d": [x, y, c, ...]}]}
 * with 25 joints in OpenPose body-25 order. MoveNet predicts the 17 COCO
 * joints, so the neck and mid-hip are synthesized as shoulder/hip midpoints
 * and the six foot joints are left undetected (zero triplets).
 */

export interface Keypoint {
  x: number;
  y: number;
  score?: number;
  name?: string;
}

export const BODY25_JOINT_COUNT = 25;

// body-25 index -> COCO-17 index; composites and feet handled separately
const DIRECT_MAP: ReadonlyArray<[number, number]> = [
  [0, 0], // Nose
  [2, 6], // RShoulder
  [3, 8], // RElbow
  [4, 10], // RWrist
  [5, 5], // LShoulder
  [6, 7], // LElbow
  [7, 9], // LWrist
  [9, 12], // RHip
  [10, 14], // RKnee
  [11, 16], // RAnkle
  [12, 11], // LHip
  [13, 13], // LKnee
  [14, 15], // LAnkle
  [15, 2], // REye
  [16, 1], // LEye
  [17, 4], // REar
  [18, 3], // LEar
];

const NECK = 1;
const MID_HIP = 8;
const L_SHOULDER = 5;
const R_SHOULDER = 6;
const L_HIP = 11;
const R_HIP = 12;

function midpoint(out: number[], joint: number, a: Keypoint, b: Keypoint): void {
  const ca = a.score ?? 0;
  const cb = b.score ?? 0;
  // composite joints need both parents; confidence is the weaker one
  if (ca <= 0 || cb <= 0) return;
  out[joint * 3] = (a.x + b.x) / 2;
  out[joint * 3 + 1] = (a.y + b.y) / 2;
  out[joint * 3 + 2] = Math.min(ca, cb);
}

/** Flatten one COCO-17 prediction into 75 body-25 wire values. */
export function toBody25(keypoints: Keypoint[]): number[] {
  if (keypoints.length !== 17) {
    throw new Error(`expected 17 COCO keypoints, got ${keypoints.length}`);
  }
  const flat = new Array<number>(BODY25_JOINT_COUNT * 3).fill(0);
  for (const [dst, src] of DIRECT_MAP) {
    const kp = keypoints[src];
    flat[dst * 3] = kp.x;
    flat[dst * 3 + 1] = kp.y;
    flat[dst * 3 + 2] = kp.score ?? 0;
  }
  midpoint(flat, NECK, keypoints[L_SHOULDER], keypoints[R_SHOULDER]);
  midpoint(flat, MID_HIP, keypoints[L_HIP], keypoints[R_HIP]);
  return flat;
}

export interface WireDocument {
  people: Array<{ pose_keypoints_2d: number[] }>;
}

export function wireDocument(people: number[][]): WireDocument {
  return { people: people.map((flat) => ({ pose_keypoints_2d: flat })) };
}

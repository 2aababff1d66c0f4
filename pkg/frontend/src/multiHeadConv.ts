/**
 * The multi-head logit block: one same-padded 2D convolution per head, each
 * emitting logits only for its own classes, concatenated along the class
 * axis in global class order. Float64 throughout; forward plus analytic
 * parameter gradients.
 */

import { HeadAssignment } from './headAssignment.js';

export interface FeatureMap {
  /** dense row-major [batch, channels, height, width] */
  data: Float64Array;
  batch: number;
  channels: number;
  height: number;
  width: number;
}

export function zerosMap(batch: number, channels: number, height: number, width: number): FeatureMap {
  return { data: new Float64Array(batch * channels * height * width), batch, channels, height, width };
}

export function mapIndex(m: FeatureMap, b: number, c: number, y: number, x: number): number {
  return ((b * m.channels + c) * m.height + y) * m.width + x;
}

export interface HeadParams {
  /** [outClasses, inChannels, k, k] row-major */
  weight: Float64Array;
  /** [outClasses] */
  bias: Float64Array;
}

export interface BlockParams {
  heads: HeadParams[];
  inChannels: number;
}

export function initParams(
  assignment: HeadAssignment,
  inChannels: number,
  rng: () => number = Math.random,
): BlockParams {
  const heads = assignment.heads.map((head) => {
    const k = head.kernelSize;
    const n = head.classIds.length * inChannels * k * k;
    const weight = new Float64Array(n);
    const scale = 1 / Math.sqrt(inChannels * k * k);
    for (let i = 0; i < n; i++) weight[i] = (2 * rng() - 1) * scale;
    const bias = new Float64Array(head.classIds.length);
    for (let i = 0; i < bias.length; i++) bias[i] = (2 * rng() - 1) * 0.1;
    return { weight, bias };
  });
  return { heads, inChannels };
}

function checkShapes(features: FeatureMap, assignment: HeadAssignment, params: BlockParams): void {
  if (features.channels !== params.inChannels) {
    throw new Error(`feature channels ${features.channels} != params ${params.inChannels}`);
  }
  if (params.heads.length !== assignment.heads.length) {
    throw new Error(`${params.heads.length} param heads vs ${assignment.heads.length} assigned`);
  }
  assignment.heads.forEach((head, h) => {
    const k = head.kernelSize;
    const expect = head.classIds.length * params.inChannels * k * k;
    if (params.heads[h].weight.length !== expect) {
      throw new Error(
        `head ${h} (kernel ${k}): weight size ${params.heads[h].weight.length}, expected ${expect}`);
    }
    if (params.heads[h].bias.length !== head.classIds.length) {
      throw new Error(`head ${h}: bias size ${params.heads[h].bias.length}`);
    }
    if (features.height < k || features.width < k) {
      throw new Error(`head ${h}: spatial ${features.height}x${features.width} below kernel ${k}`);
    }
  });
}

/**
 * Same-padded convolution per head; logits ordered by the global class list.
 *
 * logits[b, classPos(cls), y, x] =
 *   bias + sum_{c, dy, dx} w[cls, c, dy, dx] * input[b, c, y+dy-k//2, x+dx-k//2]
 */
export function multiHeadForward(
  features: FeatureMap,
  assignment: HeadAssignment,
  params: BlockParams,
): FeatureMap {
  checkShapes(features, assignment, params);
  const { batch, channels, height, width } = features;
  const nClasses = assignment.classIds.length;
  const logits = zerosMap(batch, nClasses, height, width);
  const classPos = new Map(assignment.classIds.map((id, i) => [id, i]));

  assignment.heads.forEach((head, h) => {
    const k = head.kernelSize;
    const half = (k - 1) / 2;
    const { weight, bias } = params.heads[h];
    head.classIds.forEach((classId, o) => {
      const out = classPos.get(classId)!;
      for (let b = 0; b < batch; b++) {
        for (let y = 0; y < height; y++) {
          for (let x = 0; x < width; x++) {
            let acc = bias[o];
            for (let c = 0; c < channels; c++) {
              for (let dy = 0; dy < k; dy++) {
                const sy = y + dy - half;
                if (sy < 0 || sy >= height) continue;
                for (let dx = 0; dx < k; dx++) {
                  const sx = x + dx - half;
                  if (sx < 0 || sx >= width) continue;
                  acc += weight[((o * channels + c) * k + dy) * k + dx]
                    * features.data[mapIndex(features, b, c, sy, sx)];
                }
              }
            }
            logits.data[mapIndex(logits, b, out, y, x)] = acc;
          }
        }
      }
    });
  });
  return logits;
}

/**
 * Analytic gradients of a scalar loss w.r.t. every weight and bias, given
 * dLoss/dLogits. Mirrors the forward's indexing exactly.
 */
export function multiHeadBackward(
  features: FeatureMap,
  assignment: HeadAssignment,
  params: BlockParams,
  gradLogits: FeatureMap,
): { heads: HeadParams[] } {
  checkShapes(features, assignment, params);
  const { batch, channels, height, width } = features;
  const classPos = new Map(assignment.classIds.map((id, i) => [id, i]));

  const grads = assignment.heads.map((head, h) => ({
    weight: new Float64Array(params.heads[h].weight.length),
    bias: new Float64Array(params.heads[h].bias.length),
  }));

  assignment.heads.forEach((head, h) => {
    const k = head.kernelSize;
    const half = (k - 1) / 2;
    const gw = grads[h].weight;
    const gb = grads[h].bias;
    head.classIds.forEach((classId, o) => {
      const out = classPos.get(classId)!;
      for (let b = 0; b < batch; b++) {
        for (let y = 0; y < height; y++) {
          for (let x = 0; x < width; x++) {
            const g = gradLogits.data[mapIndex(gradLogits, b, out, y, x)];
            if (g === 0) continue;
            gb[o] += g;
            for (let c = 0; c < channels; c++) {
              for (let dy = 0; dy < k; dy++) {
                const sy = y + dy - half;
                if (sy < 0 || sy >= height) continue;
                for (let dx = 0; dx < k; dx++) {
                  const sx = x + dx - half;
                  if (sx < 0 || sx >= width) continue;
                  gw[((o * channels + c) * k + dy) * k + dx]
                    += g * features.data[mapIndex(features, b, c, sy, sx)];
                }
              }
            }
          }
        }
      }
    });
  });
  return { heads: grads };
}

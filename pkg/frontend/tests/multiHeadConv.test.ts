import { describe, expect, it } from 'vitest';

import { assignHeads, ClassTable } from '../src/headAssignment.js';
import {
  BlockParams,
  FeatureMap,
  initParams,
  mapIndex,
  multiHeadBackward,
  multiHeadForward,
  zerosMap,
} from '../src/multiHeadConv.js';

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const TABLE: ClassTable = {
  truck: { id: 18, sizeClass: 'large', frequency: 10 },
  bus: { id: 13, sizeClass: 'large', frequency: 5 },
  car: { id: 10, sizeClass: 'medium', frequency: 100 },
  person: { id: 30, sizeClass: 'small', frequency: 30 },
  bicycle: { id: 11, sizeClass: 'small', frequency: 8 },
};

function randomMap(rand: () => number, batch: number, channels: number,
                   height: number, width: number): FeatureMap {
  const m = zerosMap(batch, channels, height, width);
  for (let i = 0; i < m.data.length; i++) m.data[i] = 2 * rand() - 1;
  return m;
}

describe('multiHeadForward', () => {
  it('produces all-zero logits from all-zero parameters', () => {
    const assignment = assignHeads(TABLE);
    const params = initParams(assignment, 3, () => 0.5);
    for (const head of params.heads) {
      head.weight.fill(0);
      head.bias.fill(0);
    }
    const features = randomMap(mulberry32(1), 2, 3, 8, 8);
    const logits = multiHeadForward(features, assignment, params);
    expect(logits.batch).toBe(2);
    expect(logits.channels).toBe(assignment.classIds.length);
    expect(logits.height).toBe(8);
    expect(logits.width).toBe(8);
    expect(logits.data.every((v) => v === 0)).toBe(true);
  });

  it('acts as the identity for a single 1x1 head with unit kernel', () => {
    const assignment = assignHeads({
      person: { id: 30, sizeClass: 'small', frequency: 1 },
    });
    const params: BlockParams = {
      inChannels: 1,
      heads: [{ weight: Float64Array.of(1), bias: Float64Array.of(0) }],
    };
    const features = randomMap(mulberry32(2), 1, 1, 6, 7);
    const logits = multiHeadForward(features, assignment, params);
    expect([...logits.data]).toEqual([...features.data]);
  });

  it('orders logits by the global class list', () => {
    const assignment = assignHeads(TABLE);
    expect(assignment.classIds).toEqual([10, 11, 13, 18, 30]);
    const params = initParams(assignment, 2, () => 0.5);
    // bias-only response identifies which output row belongs to which class
    for (const head of params.heads) head.weight.fill(0);
    params.heads.forEach((head, h) => {
      head.bias.forEach((_, o) => {
        head.bias[o] = assignment.heads[h].classIds[o];
      });
    });
    const features = zerosMap(1, 2, 5, 5);
    const logits = multiHeadForward(features, assignment, params);
    assignment.classIds.forEach((classId, pos) => {
      expect(logits.data[mapIndex(logits, 0, pos, 2, 2)]).toBe(classId);
    });
  });

  it('matches central finite differences for every parameter', () => {
    // loss = 0.5 * sum(logits^2) on a 2-channel 8x8 map, 64-bit throughout
    const assignment = assignHeads(TABLE);
    const rand = mulberry32(3);
    const params = initParams(assignment, 2, rand);
    const features = randomMap(rand, 1, 2, 8, 8);

    const loss = (p: BlockParams): number => {
      const logits = multiHeadForward(features, assignment, p);
      let acc = 0;
      for (const v of logits.data) acc += 0.5 * v * v;
      return acc;
    };

    const logits = multiHeadForward(features, assignment, params);
    const grads = multiHeadBackward(features, assignment, params, logits);

    const eps = 1e-5;
    let checked = 0;
    params.heads.forEach((head, h) => {
      const arrays: Array<[Float64Array, Float64Array]> = [
        [head.weight, grads.heads[h].weight],
        [head.bias, grads.heads[h].bias],
      ];
      for (const [values, grad] of arrays) {
        for (let i = 0; i < values.length; i++) {
          const keep = values[i];
          values[i] = keep + eps;
          const up = loss(params);
          values[i] = keep - eps;
          const down = loss(params);
          values[i] = keep;
          const numeric = (up - down) / (2 * eps);
          const denom = Math.max(Math.abs(numeric), Math.abs(grad[i]), 1e-12);
          expect(Math.abs(grad[i] - numeric) / denom).toBeLessThanOrEqual(1e-4);
          checked += 1;
        }
      }
    });
    // every weight and bias of every head was exercised
    const expected = params.heads.reduce(
      (acc, head) => acc + head.weight.length + head.bias.length, 0);
    expect(checked).toBe(expected);
  });

  it('isolates heads: other heads\' parameters cannot affect a class slice', () => {
    const assignment = assignHeads(TABLE);
    const rand = mulberry32(4);
    const params = initParams(assignment, 3, rand);
    const features = randomMap(rand, 2, 3, 9, 9);
    const reference = multiHeadForward(features, assignment, params);

    const classPos = new Map(assignment.classIds.map((id, i) => [id, i]));
    assignment.heads.forEach((head, h) => {
      const zeroed: BlockParams = {
        inChannels: params.inChannels,
        heads: params.heads.map((p, j) => j === h
          ? { weight: p.weight.slice(), bias: p.bias.slice() }
          : { weight: new Float64Array(p.weight.length), bias: new Float64Array(p.bias.length) }),
      };
      const logits = multiHeadForward(features, assignment, zeroed);
      for (const classId of head.classIds) {
        const pos = classPos.get(classId)!;
        for (let b = 0; b < logits.batch; b++) {
          for (let y = 0; y < logits.height; y++) {
            for (let x = 0; x < logits.width; x++) {
              const idx = mapIndex(logits, b, pos, y, x);
              expect(logits.data[idx]).toBe(reference.data[idx]);
            }
          }
        }
      }
    });
  });

  it('is translation-equivariant on the interior', () => {
    const assignment = assignHeads(TABLE);
    const rand = mulberry32(5);
    const params = initParams(assignment, 2, rand);
    const h = 12;
    const w = 12;
    const features = randomMap(rand, 1, 2, h, w);
    const sy = 2;
    const sx = 3;
    const shifted = zerosMap(1, 2, h, w);
    for (let c = 0; c < 2; c++) {
      for (let y = 0; y + sy < h; y++) {
        for (let x = 0; x + sx < w; x++) {
          shifted.data[mapIndex(shifted, 0, c, y + sy, x + sx)] =
            features.data[mapIndex(features, 0, c, y, x)];
        }
      }
    }
    const base = multiHeadForward(features, assignment, params);
    const moved = multiHeadForward(shifted, assignment, params);
    const margin = 2 + 2; // largest kernel half-width plus a safety row
    for (let cls = 0; cls < assignment.classIds.length; cls++) {
      for (let y = margin; y < h - margin - sy; y++) {
        for (let x = margin; x < w - margin - sx; x++) {
          expect(moved.data[mapIndex(moved, 0, cls, y + sy, x + sx)])
            .toBe(base.data[mapIndex(base, 0, cls, y, x)]);
        }
      }
    }
  });

  it('reports shape mismatches naming the offending head', () => {
    const assignment = assignHeads(TABLE);
    const params = initParams(assignment, 2, () => 0.4);
    params.heads[0].weight = new Float64Array(3);
    const features = zerosMap(1, 2, 8, 8);
    expect(() => multiHeadForward(features, assignment, params))
      .toThrow(/head 0 \(kernel 5\)/);

    const good = initParams(assignment, 2, () => 0.4);
    const tiny = zerosMap(1, 2, 3, 3); // below the 5x5 kernel
    expect(() => multiHeadForward(tiny, assignment, good)).toThrow(/below kernel 5/);
  });
});

/**
 * Point-label file access: little-endian uint32 words, semantic id in the
 * low 16 bits, instance id in the high 16.
 */

import { readFileSync } from 'node:fs';

export function readLabelWords(path: string): Uint32Array {
  const buf = readFileSync(path);
  if (buf.byteLength % 4 !== 0) {
    throw new Error(`${path}: size ${buf.byteLength} is not a multiple of 4`);
  }
  const out = new Uint32Array(buf.byteLength / 4);
  for (let i = 0; i < out.length; i++) {
    out[i] = buf.readUInt32LE(i * 4);
  }
  return out;
}

export function semanticIds(words: Uint32Array): Uint32Array {
  const out = new Uint32Array(words.length);
  for (let i = 0; i < words.length; i++) {
    out[i] = words[i] & 0xffff;
  }
  return out;
}

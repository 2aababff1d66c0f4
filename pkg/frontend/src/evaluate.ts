/**
 * Per-class IoU / mean IoU over paired .label directories.
 *
 * Semantics match the reference evaluator exactly: classes are the sorted
 * union of semantic ids observed in predictions and ground truth, the
 * confusion matrix is prediction x ground truth with exact integer counts,
 * IoU_i = cm[i][i] / (row_i + col_i - cm[i][i]), classes with an empty
 * union are undefined and excluded from the mean.
 */

import { readdirSync } from 'node:fs';
import { join } from 'node:path';

import { readLabelWords, semanticIds } from './labelIo.js';

export interface EvalResult {
  classIds: number[];
  /** prediction x ground truth, exact integer counts */
  confusion: number[][];
  /** per-class IoU; NaN marks an undefined class */
  iou: number[];
  meanIou: number;
}

export function confusionMatrix(
  pred: Uint32Array,
  gt: Uint32Array,
  classIds?: number[],
): { cm: number[][]; classIds: number[] } {
  if (pred.length !== gt.length) {
    throw new Error(`${pred.length} predictions vs ${gt.length} labels`);
  }
  let ids: number[];
  if (classIds === undefined) {
    const seen = new Set<number>();
    for (const v of pred) seen.add(v);
    for (const v of gt) seen.add(v);
    ids = [...seen].sort((a, b) => a - b);
  } else {
    ids = [...classIds].sort((a, b) => a - b);
  }
  const pos = new Map(ids.map((id, i) => [id, i]));
  const n = ids.length;
  const cm: number[][] = Array.from({ length: n }, () => new Array<number>(n).fill(0));
  for (let i = 0; i < pred.length; i++) {
    const g = pos.get(gt[i]);
    if (g === undefined) continue; // unlisted ground truth is ignored
    const p = pos.get(pred[i]);
    if (p === undefined) {
      throw new Error(`prediction id ${pred[i]} not in the class list`);
    }
    cm[p][g] += 1;
  }
  return { cm, classIds: ids };
}

export function miou(cm: number[][]): { iou: number[]; mean: number } {
  const n = cm.length;
  if (n < 1 || cm.some((row) => row.length !== n)) {
    throw new Error('confusion matrix must be square and non-empty');
  }
  const iou: number[] = [];
  let sum = 0;
  let defined = 0;
  for (let i = 0; i < n; i++) {
    let row = 0;
    let col = 0;
    for (let j = 0; j < n; j++) {
      row += cm[i][j];
      col += cm[j][i];
    }
    const union = row + col - cm[i][i];
    if (union > 0) {
      const value = cm[i][i] / union;
      iou.push(value);
      sum += value;
      defined += 1;
    } else {
      iou.push(NaN);
    }
  }
  if (defined === 0) {
    throw new Error('all classes undefined (no predictions, no ground truth)');
  }
  return { iou, mean: sum / defined };
}

export function evaluatePredictions(predDir: string, gtDir: string): EvalResult {
  const gtFiles = readdirSync(gtDir).filter((f) => f.endsWith('.label')).sort();
  if (gtFiles.length === 0) {
    throw new Error(`no .label files in ${gtDir}`);
  }
  const predFiles = new Set(readdirSync(predDir).filter((f) => f.endsWith('.label')));
  const missing = gtFiles.filter((f) => !predFiles.has(f));
  if (missing.length > 0) {
    throw new Error(`predictions missing for ${missing.slice(0, 5).join(', ')}`);
  }

  const pairs = gtFiles.map((file) => {
    const gt = semanticIds(readLabelWords(join(gtDir, file)));
    const pred = semanticIds(readLabelWords(join(predDir, file)));
    if (gt.length !== pred.length) {
      throw new Error(`${file}: ${gt.length} labels vs ${pred.length} predictions`);
    }
    return { pred, gt };
  });

  const seen = new Set<number>();
  for (const { pred, gt } of pairs) {
    for (const v of pred) seen.add(v);
    for (const v of gt) seen.add(v);
  }
  const classIds = [...seen].sort((a, b) => a - b);

  const n = classIds.length;
  const total: number[][] = Array.from({ length: n }, () => new Array<number>(n).fill(0));
  for (const { pred, gt } of pairs) {
    const { cm } = confusionMatrix(pred, gt, classIds);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) total[i][j] += cm[i][j];
    }
  }
  const { iou, mean } = miou(total);
  return { classIds, confusion: total, iou, meanIou: mean };
}

/**
 * Category -> head grouping for the multi-head output block.
 *
 * Large objects need wide receptive fields (5x5), medium ones 3x3, and small
 * frequent-shape classes 1x1. The grouping is a deterministic partition of
 * the class set: every class lands in exactly one head.
 */

export type SizeClass = 'small' | 'medium' | 'large';

export interface ClassStats {
  id: number;
  sizeClass: SizeClass;
  /** occurrence count in the training data; carried for reporting */
  frequency: number;
}

export type ClassTable = Record<string, ClassStats>;

export interface Head {
  kernelSize: 1 | 3 | 5;
  classIds: number[];
}

export interface HeadAssignment {
  heads: Head[];
  /** all class ids in global order (ascending); logits follow this order */
  classIds: number[];
}

const KERNEL_BY_SIZE: Record<SizeClass, 1 | 3 | 5> = {
  large: 5,
  medium: 3,
  small: 1,
};

/** SemanticKITTI-style defaults; edit via JSON config rather than code. */
export const DEFAULT_CLASS_TABLE: ClassTable = {
  car: { id: 10, sizeClass: 'medium', frequency: 1_000_000 },
  bicycle: { id: 11, sizeClass: 'small', frequency: 10_000 },
  bus: { id: 13, sizeClass: 'large', frequency: 5_000 },
  motorcycle: { id: 15, sizeClass: 'small', frequency: 8_000 },
  truck: { id: 18, sizeClass: 'large', frequency: 20_000 },
  'other-vehicle': { id: 20, sizeClass: 'large', frequency: 15_000 },
  person: { id: 30, sizeClass: 'small', frequency: 30_000 },
  bicyclist: { id: 31, sizeClass: 'small', frequency: 9_000 },
  motorcyclist: { id: 32, sizeClass: 'small', frequency: 3_000 },
};

/**
 * Partition the classes into kernel-size heads by size class.
 *
 * Deterministic and order-independent: heads are emitted largest kernel
 * first, class ids ascending within each head. Unknown size classes throw.
 * Empty heads are dropped.
 */
export function assignHeads(table: ClassTable): HeadAssignment {
  const buckets = new Map<1 | 3 | 5, number[]>([[5, []], [3, []], [1, []]]);
  const seen = new Set<number>();
  for (const [name, stats] of Object.entries(table)) {
    const kernel = KERNEL_BY_SIZE[stats.sizeClass];
    if (kernel === undefined) {
      throw new Error(`class ${name}: unknown size class '${stats.sizeClass}'`);
    }
    if (!Number.isInteger(stats.id) || stats.id < 0) {
      throw new Error(`class ${name}: bad id ${stats.id}`);
    }
    if (seen.has(stats.id)) {
      throw new Error(`class ${name}: duplicate id ${stats.id}`);
    }
    seen.add(stats.id);
    buckets.get(kernel)!.push(stats.id);
  }
  const heads: Head[] = [];
  for (const kernelSize of [5, 3, 1] as const) {
    const classIds = buckets.get(kernelSize)!.sort((a, b) => a - b);
    if (classIds.length > 0) {
      heads.push({ kernelSize, classIds });
    }
  }
  const classIds = [...seen].sort((a, b) => a - b);
  return { heads, classIds };
}

/** Parse the JSON config format {class_name: {id, size_class, frequency}}. */
export function parseClassTable(json: string): ClassTable {
  const raw = JSON.parse(json) as Record<
    string,
    { id: number; size_class: string; frequency?: number }
  >;
  const table: ClassTable = {};
  for (const [name, entry] of Object.entries(raw)) {
    table[name] = {
      id: entry.id,
      sizeClass: entry.size_class as SizeClass,
      frequency: entry.frequency ?? 0,
    };
  }
  return table;
}

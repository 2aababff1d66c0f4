export {
  assignHeads,
  parseClassTable,
  DEFAULT_CLASS_TABLE,
} from './headAssignment.js';
export type { ClassStats, ClassTable, Head, HeadAssignment, SizeClass } from './headAssignment.js';
export {
  initParams,
  mapIndex,
  multiHeadBackward,
  multiHeadForward,
  zerosMap,
} from './multiHeadConv.js';
export type { BlockParams, FeatureMap, HeadParams } from './multiHeadConv.js';
export { confusionMatrix, evaluatePredictions, miou } from './evaluate.js';
export type { EvalResult } from './evaluate.js';
export { readLabelWords, semanticIds } from './labelIo.js';

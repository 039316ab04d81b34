export { CliError, FormatError, ValidationError } from "./errors.js";
export type { HashPair } from "./hash.js";
export { bucketTable, evalBucket, evalSign, signTable } from "./hash.js";
export type { Matrix } from "./matrix.js";
export {
  makeMatrix,
  matrixFromBytes,
  matrixToBytes,
  readMatrix,
  writeMatrix,
} from "./matrix.js";
export type { Transform } from "./sketch.js";
export {
  SketchHandle,
  estimate,
  estimateAll,
  readSketch,
  sketchFromBytes,
} from "./sketch.js";
export type { CompressOptions } from "./compress.js";
export { compress } from "./compress.js";

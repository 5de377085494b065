export {
  DataError,
  DtypeError,
  EngineError,
  FormatError,
  NoiseWarpError,
  ShapeError,
  ValidationFailure,
} from "./errors.js";
export {
  FlowData,
  GridData,
  NpyArray,
  expectFloat32,
  readFlo,
  readGrid,
  readNpy,
  writeFlo,
  writeGrid,
  writeNpy,
} from "./formats.js";
export {
  EngineOptions,
  NoiseWarpEngine,
  PriorOptions,
  ValidationReport,
  WarpOptions,
  WarpedFrame,
} from "./engine.js";

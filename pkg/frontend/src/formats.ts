/**
 * Binary codecs for the engine's file formats, over typed arrays.
 *
 * All layouts are little-endian.  Readers return Float32Array views over
 * the input buffer when its byte offset is 4-byte aligned (zero-copy);
 * otherwise one explicit copy is made.
 */

import { createHash } from "node:crypto";

import { DataError, DtypeError, FormatError, ShapeError } from "./errors.js";

export interface GridData {
  /** Base (level-0) dimensions; payload is (height*2^level) x (width*2^level) x channels. */
  width: number;
  height: number;
  channels: number;
  level: number;
  /** Row-major float32 payload. */
  data: Float32Array;
}

export interface FlowData {
  width: number;
  height: number;
  /** Row-major interleaved (dx, dy) backward displacements. */
  data: Float32Array;
}

const GRID_MAGIC = "NWGR";
const GRID_VERSION = 1;
const FLO_MAGIC = 202021.25;

export function expectFloat32(arr: unknown, what: string): Float32Array {
  if (arr instanceof Float32Array) return arr;
  const received =
    arr instanceof Float64Array
      ? "float64"
      : arr instanceof Int32Array
        ? "int32"
        : arr instanceof Uint8Array
          ? "uint8"
          : typeof arr;
  throw new DtypeError("float32", `${received} (${what})`);
}

function float32View(buf: Buffer, byteOffset: number, length: number): Float32Array {
  const abs = buf.byteOffset + byteOffset;
  if (abs % 4 === 0) {
    return new Float32Array(buf.buffer, abs, length);
  }
  // Unaligned source: one documented copy.
  const copy = Buffer.alloc(length * 4);
  buf.copy(copy, 0, byteOffset, byteOffset + length * 4);
  return new Float32Array(copy.buffer, 0, length);
}

function gridChecksum(headerAndPayload: Buffer): Buffer {
  return createHash("sha256").update(headerAndPayload).digest().subarray(0, 8);
}

export function readGrid(buf: Buffer): GridData {
  if (buf.length < 32) throw new FormatError(`truncated grid file (${buf.length} bytes)`);
  if (buf.toString("latin1", 0, 4) !== GRID_MAGIC) {
    throw new FormatError(`bad grid magic ${buf.subarray(0, 4).toString("hex")}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== GRID_VERSION) throw new FormatError(`unsupported grid version ${version}`);
  const height = buf.readUInt32LE(8);
  const width = buf.readUInt32LE(12);
  const channels = buf.readUInt32LE(16);
  const level = buf.readUInt32LE(20);
  const n = 1 << level;
  const count = height * n * width * n * channels;
  const expected = 24 + count * 4 + 8;
  if (buf.length !== expected) {
    throw new DataError(`expected ${expected} bytes, found ${buf.length}`);
  }
  const stored = buf.subarray(buf.length - 8);
  const computed = gridChecksum(buf.subarray(0, buf.length - 8));
  if (!stored.equals(computed)) throw new DataError("grid checksum mismatch");
  const data = float32View(buf, 24, count);
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) throw new DataError("grid contains NaN or Inf");
  }
  return { width, height, channels, level, data };
}

export function writeGrid(grid: GridData): Buffer {
  const data = expectFloat32(grid.data, "grid payload");
  const n = 1 << grid.level;
  const count = grid.height * n * grid.width * n * grid.channels;
  if (data.length !== count) {
    throw new ShapeError(
      `payload length ${data.length} does not match ` +
        `${grid.height}x${grid.width}x${grid.channels} at level ${grid.level} (${count})`,
    );
  }
  const head = Buffer.alloc(24);
  head.write(GRID_MAGIC, 0, "latin1");
  head.writeUInt32LE(GRID_VERSION, 4);
  head.writeUInt32LE(grid.height, 8);
  head.writeUInt32LE(grid.width, 12);
  head.writeUInt32LE(grid.channels, 16);
  head.writeUInt32LE(grid.level, 20);
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  const body = Buffer.concat([head, payload]);
  return Buffer.concat([body, gridChecksum(body)]);
}

export function readFlo(buf: Buffer): FlowData {
  if (buf.length < 12) throw new FormatError(`truncated flo file (${buf.length} bytes)`);
  const magic = buf.readFloatLE(0);
  if (magic !== FLO_MAGIC) throw new FormatError(`bad flo magic ${magic}`);
  const width = buf.readInt32LE(4);
  const height = buf.readInt32LE(8);
  if (width < 1 || height < 1) throw new FormatError(`invalid dimensions ${width}x${height}`);
  const count = width * height * 2;
  if (buf.length !== 12 + count * 4) {
    throw new DataError(`expected ${12 + count * 4} bytes, found ${buf.length}`);
  }
  const data = float32View(buf, 12, count);
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) throw new DataError("flow contains NaN or Inf");
  }
  return { width, height, data };
}

export function writeFlo(flow: FlowData): Buffer {
  const data = expectFloat32(flow.data, "flow payload");
  if (data.length !== flow.width * flow.height * 2) {
    throw new ShapeError(
      `payload length ${data.length} does not match ${flow.width}x${flow.height}x2`,
    );
  }
  const head = Buffer.alloc(12);
  head.writeFloatLE(FLO_MAGIC, 0);
  head.writeInt32LE(flow.width, 4);
  head.writeInt32LE(flow.height, 8);
  return Buffer.concat([head, Buffer.from(data.buffer, data.byteOffset, data.byteLength)]);
}

export interface NpyArray {
  shape: number[];
  dtype: "float32" | "uint8";
  data: Float32Array | Uint8Array;
}

/** Parse an NPY v1.0/v2.0 C-order array in the dtypes the engine emits. */
export function readNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || buf.toString("latin1", 1, 6) !== "NUMPY" || buf[0] !== 0x93) {
    throw new FormatError("not an NPY file");
  }
  const major = buf[6];
  const headerLen = major >= 2 ? buf.readUInt32LE(8) : buf.readUInt16LE(8);
  const headerStart = major >= 2 ? 12 : 10;
  const header = buf.toString("latin1", headerStart, headerStart + headerLen);
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1] ?? "";
  if (fortran !== "False") throw new FormatError("fortran-order arrays are not supported");
  const shape = shapeText
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map(Number);
  const count = shape.reduce((a, b) => a * b, 1);
  const start = headerStart + headerLen;
  if (descr === "<f4") {
    return { shape, dtype: "float32", data: float32View(buf, start, count) };
  }
  if (descr === "|u1") {
    return { shape, dtype: "uint8", data: Uint8Array.from(buf.subarray(start, start + count)) };
  }
  throw new DtypeError("float32 (<f4) or uint8 (|u1)", descr ?? "unknown");
}

/** Serialize a float32 C-order array as NPY v1.0 (engine-compatible). */
export function writeNpy(shape: number[], data: Float32Array): Buffer {
  expectFloat32(data, "npy payload");
  const count = shape.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new ShapeError(`shape ${JSON.stringify(shape)} does not match length ${data.length}`);
  }
  const shapeText = shape.length === 1 ? `(${shape[0]},)` : `(${shape.join(", ")})`;
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const unpadded = 10 + header.length + 1;
  header = header + " ".repeat((64 - (unpadded % 64)) % 64) + "\n";
  const head = Buffer.alloc(10);
  head[0] = 0x93;
  head.write("NUMPY", 1, "latin1");
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  return Buffer.concat([
    head,
    Buffer.from(header, "latin1"),
    Buffer.from(data.buffer, data.byteOffset, data.byteLength),
  ]);
}

/**
 * Minimal reader/writer for the "\x93NUMPY" v1.0 tensor container,
 * restricted to little-endian float32 ('<f4') and int64 ('<i8'), C
 * order, with the header padded so the data section starts on a
 * 64-byte boundary. Matches the engine's on-disk format byte for byte.
 */

export type NpyDtype = "<f4" | "<i8";

export interface NpyTensor {
  dtype: NpyDtype;
  shape: number[];
  /** Flat C-order data; Float32Array for '<f4', BigInt64Array for '<i8'. */
  data: Float32Array | BigInt64Array;
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

function shapeRepr(shape: number[]): string {
  if (shape.length === 0) return "()";
  if (shape.length === 1) return `(${shape[0]},)`;
  return `(${shape.join(", ")})`;
}

function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function serializeNpy(t: NpyTensor): Buffer {
  const n = numel(t.shape);
  if (t.data.length !== n) {
    throw new Error(`data length ${t.data.length} != shape product ${n}`);
  }
  if (t.dtype === "<f4") {
    for (const v of t.data as Float32Array) {
      if (!Number.isFinite(v)) throw new Error("refusing to write non-finite float32");
    }
  }
  const header = `{'descr': '${t.dtype}', 'fortran_order': False, 'shape': ${shapeRepr(t.shape)}, }`;
  const pad = (64 - ((MAGIC.length + 4 + header.length + 1) % 64)) % 64;
  const headerFull = header + " ".repeat(pad) + "\n";
  const pre = Buffer.alloc(MAGIC.length + 4);
  MAGIC.copy(pre, 0);
  pre[6] = 1; // major version
  pre[7] = 0; // minor version
  pre.writeUInt16LE(headerFull.length, 8);
  const body = Buffer.from(
    t.data.buffer.slice(t.data.byteOffset, t.data.byteOffset + t.data.byteLength)
  );
  return Buffer.concat([pre, Buffer.from(headerFull, "latin1"), body]);
}

export function parseNpy(buf: Buffer): NpyTensor {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error("bad magic: not a tensor file");
  }
  if (buf[6] !== 1 || buf[7] !== 0) {
    throw new Error(`unsupported container version ${buf[6]}.${buf[7]}`);
  }
  const hlen = buf.readUInt16LE(8);
  if (buf.length < 10 + hlen) throw new Error("truncated header");
  const header = buf.subarray(10, 10 + hlen).toString("latin1");
  const descrM = header.match(/'descr':\s*'([^']+)'/);
  const fortM = header.match(/'fortran_order':\s*(True|False)/);
  const shapeM = header.match(/'shape':\s*\(([^)]*)\)/);
  if (!descrM || !fortM || !shapeM) throw new Error("malformed header");
  if (fortM[1] !== "False") throw new Error("fortran order not supported");
  const dtype = descrM[1];
  if (dtype !== "<f4" && dtype !== "<i8") throw new Error(`unsupported dtype ${dtype}`);
  const shape = shapeM[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => parseInt(s, 10));
  const n = numel(shape);
  const itemsize = dtype === "<f4" ? 4 : 8;
  const body = buf.subarray(10 + hlen);
  if (body.length !== n * itemsize) {
    throw new Error(`data section has ${body.length} bytes, expected ${n * itemsize}`);
  }
  const copy = Buffer.from(body); // aligned copy for the typed-array view
  const data =
    dtype === "<f4"
      ? new Float32Array(copy.buffer, copy.byteOffset, n)
      : new BigInt64Array(copy.buffer, copy.byteOffset, n);
  if (dtype === "<f4") {
    for (const v of data as Float32Array) {
      if (!Number.isFinite(v)) throw new Error("non-finite value in float32 tensor");
    }
  }
  return { dtype, shape, data };
}

export function writeNpy(path: string, t: NpyTensor): void {
  require("fs").writeFileSync(path, serializeNpy(t));
}

export function readNpy(path: string): NpyTensor {
  return parseNpy(require("fs").readFileSync(path));
}

export function floatTensor(shape: number[], data: ArrayLike<number>): NpyTensor {
  return { dtype: "<f4", shape, data: Float32Array.from(data as ArrayLike<number>) };
}

export function intTensor(shape: number[], data: ArrayLike<number>): NpyTensor {
  return {
    dtype: "<i8",
    shape,
    data: BigInt64Array.from(Array.from(data as ArrayLike<number>, (v) => BigInt(v))),
  };
}

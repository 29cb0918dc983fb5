import { describe, expect, it } from "vitest";

import { floatTensor, intTensor, parseNpy, serializeNpy } from "../src/npy";

describe("tensor container", () => {
  it("round-trips float32", () => {
    const t = floatTensor([2, 3], [1, -2.5, 3, 0.125, 5, -6]);
    const back = parseNpy(serializeNpy(t));
    expect(back.dtype).toBe("<f4");
    expect(back.shape).toEqual([2, 3]);
    expect(Array.from(back.data as Float32Array)).toEqual([1, -2.5, 3, 0.125, 5, -6]);
  });

  it("round-trips int64", () => {
    const t = intTensor([4], [0, 1, -7, 2 ** 40]);
    const back = parseNpy(serializeNpy(t));
    expect(back.dtype).toBe("<i8");
    expect(Array.from(back.data as BigInt64Array)).toEqual([0n, 1n, -7n, BigInt(2 ** 40)]);
  });

  it("writes the exact v1.0 byte layout with 64-byte-aligned data", () => {
    const buf = serializeNpy(floatTensor([3], [1, 2, 3]));
    expect(buf.subarray(0, 6).toString("latin1")).toBe("\x93NUMPY");
    expect(buf[6]).toBe(1);
    expect(buf[7]).toBe(0);
    const hlen = buf.readUInt16LE(8);
    expect((10 + hlen) % 64).toBe(0);
    const header = buf.subarray(10, 10 + hlen).toString("latin1");
    expect(header).toMatch(/^\{'descr': '<f4', 'fortran_order': False, 'shape': \(3,\), \} *\n$/);
    expect(buf.length).toBe(10 + hlen + 3 * 4);
  });

  it("uses the (a, b) shape form for 2-D", () => {
    const buf = serializeNpy(floatTensor([2, 2], [0, 0, 0, 0]));
    const header = buf.subarray(10, 10 + buf.readUInt16LE(8)).toString("latin1");
    expect(header).toContain("'shape': (2, 2), ");
  });

  it("rejects non-finite floats on write and read", () => {
    expect(() => serializeNpy(floatTensor([1], [NaN]))).toThrow(/non-finite/);
    const good = serializeNpy(floatTensor([1], [1]));
    good.writeFloatLE(Infinity, good.length - 4);
    expect(() => parseNpy(good)).toThrow(/non-finite/);
  });

  it("rejects bad magic, truncation, and shape/data mismatch", () => {
    expect(() => parseNpy(Buffer.from("not a tensor file at all"))).toThrow(/magic/);
    const buf = serializeNpy(floatTensor([4], [1, 2, 3, 4]));
    expect(() => parseNpy(buf.subarray(0, buf.length - 4))).toThrow(/data section/);
    expect(() => serializeNpy({ dtype: "<f4", shape: [5], data: new Float32Array(4) })).toThrow(
      /length/
    );
  });
});

/**
 * TBND writer/reader: magic "TBND", version u32 = 1, tensor count u32, then
 * per tensor a u16-length UTF-8 name, dtype u8 (0 = float32), ndim u8,
 * u64 dims, and raw little-endian float32 data. See docs/FORMATS.md in the
 * parent package.
 */

import { ConversionError } from "./model";

export interface NamedTensor {
  name: string;
  dims: number[];
  /** row-major values; converted to float32 on write */
  data: number[];
}

const MAGIC = Buffer.from("TBND", "ascii");
const VERSION = 1;
const DTYPE_F32 = 0;

export function encodeTensorBundle(tensors: NamedTensor[]): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(12);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(tensors.length, 8);
  parts.push(header);

  for (const tensor of tensors) {
    const expected = tensor.dims.reduce((a, b) => a * b, 1);
    if (tensor.data.length !== expected) {
      throw new ConversionError(
        `tensor ${tensor.name}: ${tensor.data.length} values for dims [${tensor.dims}]`,
      );
    }
    for (const value of tensor.data) {
      if (typeof value !== "number" || !Number.isFinite(value)) {
        throw new ConversionError(`tensor ${tensor.name}: non-float parameter ${value}`);
      }
    }
    const name = Buffer.from(tensor.name, "utf-8");
    const meta = Buffer.alloc(2 + name.length + 2 + 8 * tensor.dims.length);
    let off = 0;
    meta.writeUInt16LE(name.length, off);
    off += 2;
    name.copy(meta, off);
    off += name.length;
    meta.writeUInt8(DTYPE_F32, off++);
    meta.writeUInt8(tensor.dims.length, off++);
    for (const dim of tensor.dims) {
      meta.writeBigUInt64LE(BigInt(dim), off);
      off += 8;
    }
    parts.push(meta);

    const data = Buffer.alloc(4 * tensor.data.length);
    for (let i = 0; i < tensor.data.length; i++) {
      data.writeFloatLE(Math.fround(tensor.data[i]), 4 * i);
    }
    parts.push(data);
  }
  return Buffer.concat(parts);
}

export function decodeTensorBundle(blob: Buffer): NamedTensor[] {
  let off = 0;
  const need = (n: number, what: string) => {
    if (off + n > blob.length) {
      throw new ConversionError(`truncated TBND while reading ${what}`);
    }
  };
  need(12, "header");
  if (!blob.subarray(0, 4).equals(MAGIC)) {
    throw new ConversionError("bad TBND magic");
  }
  if (blob.readUInt32LE(4) !== VERSION) {
    throw new ConversionError(`unsupported TBND version ${blob.readUInt32LE(4)}`);
  }
  const count = blob.readUInt32LE(8);
  off = 12;

  const tensors: NamedTensor[] = [];
  for (let t = 0; t < count; t++) {
    need(2, "name length");
    const nameLen = blob.readUInt16LE(off);
    off += 2;
    need(nameLen, "name");
    const name = blob.subarray(off, off + nameLen).toString("utf-8");
    off += nameLen;
    need(2, "dtype/ndim");
    const dtype = blob.readUInt8(off++);
    if (dtype !== DTYPE_F32) {
      throw new ConversionError(`tensor ${name}: unknown dtype code ${dtype}`);
    }
    const ndim = blob.readUInt8(off++);
    const dims: number[] = [];
    for (let d = 0; d < ndim; d++) {
      need(8, "dims");
      dims.push(Number(blob.readBigUInt64LE(off)));
      off += 8;
    }
    const elements = dims.reduce((a, b) => a * b, 1);
    need(4 * elements, `tensor ${name} data`);
    const data: number[] = [];
    for (let i = 0; i < elements; i++) {
      data.push(blob.readFloatLE(off + 4 * i));
    }
    off += 4 * elements;
    tensors.push({ name, dims, data });
  }
  if (off !== blob.length) {
    throw new ConversionError("trailing bytes after last tensor");
  }
  return tensors;
}

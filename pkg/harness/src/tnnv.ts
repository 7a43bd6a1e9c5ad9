/*
 * TNNV vector files: "TNNV" magic, u32 count, u32 length, then
 * count x length little-endian float32 values, optionally followed by
 * a u64 trailer carrying a benchmark median in nanoseconds.
 */
import { readFileSync, writeFileSync } from "node:fs";

const MAGIC = "TNNV";
const HEADER_BYTES = 12;

export interface VectorFile {
  /** One Float32Array per vector, all of the same length. */
  vectors: Float32Array[];
  length: number;
  /** Present only when the writer appended a timing trailer. */
  medianNs?: bigint;
}

export function readVectors(path: string): VectorFile {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES) {
    throw new Error(`${path}: too short for a TNNV header`);
  }
  if (buf.toString("latin1", 0, 4) !== MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  const count = buf.readUInt32LE(4);
  const length = buf.readUInt32LE(8);
  const body = count * length * 4;
  const tail = buf.length - HEADER_BYTES - body;
  if (tail !== 0 && tail !== 8) {
    throw new Error(`${path}: expected ${body} payload bytes, found ${buf.length - HEADER_BYTES}`);
  }

  const vectors: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const vec = new Float32Array(length);
    const base = HEADER_BYTES + i * length * 4;
    for (let j = 0; j < length; j++) {
      vec[j] = buf.readFloatLE(base + j * 4);
    }
    vectors.push(vec);
  }
  const out: VectorFile = { vectors, length };
  if (tail === 8) {
    out.medianNs = buf.readBigUInt64LE(HEADER_BYTES + body);
  }
  return out;
}

export function writeVectors(path: string, vectors: Float32Array[], length: number): void {
  for (const vec of vectors) {
    if (vec.length !== length) {
      throw new Error(`vector of length ${vec.length}, expected ${length}`);
    }
  }
  const buf = Buffer.alloc(HEADER_BYTES + vectors.length * length * 4);
  buf.write(MAGIC, 0, "latin1");
  buf.writeUInt32LE(vectors.length, 4);
  buf.writeUInt32LE(length, 8);
  let offset = HEADER_BYTES;
  for (const vec of vectors) {
    for (const value of vec) {
      buf.writeFloatLE(value, offset);
      offset += 4;
    }
  }
  writeFileSync(path, buf);
}

/** Count of elements differing beyond atol + rtol * |reference|. */
export function countMismatches(
  got: Float32Array,
  want: Float32Array,
  atol = 1e-5,
  rtol = 1e-4,
): number {
  if (got.length !== want.length) {
    throw new Error(`length ${got.length} vs ${want.length}`);
  }
  let bad = 0;
  for (let i = 0; i < got.length; i++) {
    const g = got[i]!;
    const w = want[i]!;
    const ok = Number.isFinite(g) && Math.abs(g - w) <= atol + rtol * Math.abs(w);
    if (!ok) {
      bad += 1;
    }
  }
  return bad;
}

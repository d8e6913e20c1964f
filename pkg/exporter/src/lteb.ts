/**
 * Embedding-set interchange format ("LTEB1"), shared with the Python
 * pipeline. Little-endian layout:
 *
 *   magic "LTEB1" (5 bytes) | u32 n | u32 dim | u32 n_classes
 *   n records of { u32 label; dim x float32 }
 *
 * No padding, no alignment. The Python side validates totally; anything we
 * emit must round-trip bit-exactly.
 */

export const LTEB_MAGIC = Buffer.from('LTEB1', 'ascii')

export interface EmbeddingRecord {
  label: number
  vector: Float32Array
}

export interface EmbeddingSet {
  dim: number
  nClasses: number
  records: EmbeddingRecord[]
}

export function encodeEmbeddingSet(set: EmbeddingSet): Buffer {
  const { dim, nClasses, records } = set
  if (records.length < 1 || dim < 1) {
    throw new Error('embedding set needs at least one record and dim >= 1')
  }
  if (nClasses < 1) {
    throw new Error('n_classes must be >= 1')
  }
  const recordSize = 4 + 4 * dim
  const buf = Buffer.alloc(LTEB_MAGIC.length + 12 + records.length * recordSize)
  LTEB_MAGIC.copy(buf, 0)
  buf.writeUInt32LE(records.length, 5)
  buf.writeUInt32LE(dim, 9)
  buf.writeUInt32LE(nClasses, 13)
  let off = 17
  for (const rec of records) {
    if (rec.vector.length !== dim) {
      throw new Error(`vector length ${rec.vector.length} != dim ${dim}`)
    }
    if (!Number.isInteger(rec.label) || rec.label < 0 || rec.label >= nClasses) {
      throw new Error(`label ${rec.label} outside [0, ${nClasses})`)
    }
    for (const v of rec.vector) {
      if (!Number.isFinite(v)) throw new Error('non-finite vector component')
    }
    buf.writeUInt32LE(rec.label, off)
    off += 4
    for (let i = 0; i < dim; i++) {
      buf.writeFloatLE(rec.vector[i], off)
      off += 4
    }
  }
  return buf
}

/** Parser used by the tests to verify our own output. */
export function decodeEmbeddingSet(buf: Buffer): EmbeddingSet {
  if (buf.length < 17 || !buf.subarray(0, 5).equals(LTEB_MAGIC)) {
    throw new Error('bad LTEB1 header')
  }
  const n = buf.readUInt32LE(5)
  const dim = buf.readUInt32LE(9)
  const nClasses = buf.readUInt32LE(13)
  const expected = 17 + n * (4 + 4 * dim)
  if (buf.length !== expected) {
    throw new Error(`size mismatch: expected ${expected}, got ${buf.length}`)
  }
  const records: EmbeddingRecord[] = []
  let off = 17
  for (let r = 0; r < n; r++) {
    const label = buf.readUInt32LE(off)
    off += 4
    const vector = new Float32Array(dim)
    for (let i = 0; i < dim; i++) {
      vector[i] = buf.readFloatLE(off)
      off += 4
    }
    records.push({ label, vector })
  }
  return { dim, nClasses, records }
}

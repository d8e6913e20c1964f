/**
 * Composite raster reader ("LTCR1"): the three-channel training inputs the
 * pipeline's compose stage writes. Little-endian layout:
 *
 *   magic "LTCR1" | u32 width | u32 height | u32 channels (= 3)
 *   channels x (width * height) float32, row-major per plane
 */

export const LTCR_MAGIC = Buffer.from('LTCR1', 'ascii')

export interface CompositeRaster {
  width: number
  height: number
  /** channel-major planes: [original SAR, denoised SAR, translated EO] */
  planes: Float32Array[]
}

export function decodeComposite(buf: Buffer): CompositeRaster {
  if (buf.length < 17 || !buf.subarray(0, 5).equals(LTCR_MAGIC)) {
    throw new Error('bad LTCR1 header')
  }
  const width = buf.readUInt32LE(5)
  const height = buf.readUInt32LE(9)
  const channels = buf.readUInt32LE(13)
  if (channels !== 3) {
    throw new Error(`composite must have 3 channels, found ${channels}`)
  }
  if (width < 1 || height < 1) {
    throw new Error('composite dimensions must be positive')
  }
  const planeSize = width * height
  const expected = 17 + 3 * planeSize * 4
  if (buf.length !== expected) {
    throw new Error(`size mismatch: expected ${expected}, got ${buf.length}`)
  }
  const planes: Float32Array[] = []
  for (let c = 0; c < 3; c++) {
    const plane = new Float32Array(planeSize)
    let off = 17 + c * planeSize * 4
    for (let i = 0; i < planeSize; i++) {
      const v = buf.readFloatLE(off)
      if (!Number.isFinite(v)) throw new Error('non-finite composite sample')
      plane[i] = v
      off += 4
    }
    planes.push(plane)
  }
  return { width, height, planes }
}

export function encodeComposite(comp: CompositeRaster): Buffer {
  const planeSize = comp.width * comp.height
  const buf = Buffer.alloc(17 + 3 * planeSize * 4)
  LTCR_MAGIC.copy(buf, 0)
  buf.writeUInt32LE(comp.width, 5)
  buf.writeUInt32LE(comp.height, 9)
  buf.writeUInt32LE(3, 13)
  comp.planes.forEach((plane, c) => {
    let off = 17 + c * planeSize * 4
    for (let i = 0; i < planeSize; i++) {
      buf.writeFloatLE(plane[i], off)
      off += 4
    }
  })
  return buf
}

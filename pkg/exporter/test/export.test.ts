import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

import { describe, expect, it } from 'vitest'

import { LabelResolutionError, exportEmbeddings } from '../src/export.js'
import { encodeComposite } from '../src/ltcr.js'
import { decodeEmbeddingSet } from '../src/lteb.js'

function writeComposite(dir: string, stem: string, seed: number, side = 16) {
  const planes = [0, 1, 2].map((c) => {
    const plane = new Float32Array(side * side)
    for (let i = 0; i < plane.length; i++) {
      plane[i] = Math.fround(((Math.sin(seed * 131 + c * 17 + i) + 1) / 2))
    }
    return plane
  })
  writeFileSync(join(dir, `${stem}.ltcr`), encodeComposite({ width: side, height: side, planes }))
}

const MAP = {
  nClasses: 2,
  rules: [
    { pattern: '^a_', class: 0 },
    { pattern: '^b_', class: 1 },
  ],
}

describe('exportEmbeddings', () => {
  it('writes one validated record per labeled image', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exp-'))
    writeComposite(dir, 'a_0', 1)
    writeComposite(dir, 'b_0', 2)
    const out = join(dir, 'out.lteb')
    const summary = await exportEmbeddings({
      imageDir: dir,
      labelMap: MAP,
      modelId: 'seeded-cnn-16',
      batch: 8,
      output: out,
    })
    expect(summary.count).toBe(2)
    expect(summary.dim).toBe(16)
    const set = decodeEmbeddingSet(readFileSync(out))
    expect(set.records.map((r) => r.label)).toEqual([0, 1])
    for (const rec of set.records) {
      expect(rec.vector.length).toBe(16)
      expect(Array.from(rec.vector).every(Number.isFinite)).toBe(true)
    }
  })

  it('aborts on unlabeled stems without writing output', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exp-'))
    writeComposite(dir, 'a_0', 1)
    writeComposite(dir, 'mystery', 2)
    const out = join(dir, 'out.lteb')
    await expect(
      exportEmbeddings({
        imageDir: dir,
        labelMap: MAP,
        modelId: 'seeded-cnn-16',
        batch: 8,
        output: out,
      }),
    ).rejects.toThrow(LabelResolutionError)
    expect(existsSync(out)).toBe(false)
  })

  it('is deterministic: same inputs give byte-identical files', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exp-'))
    for (let i = 0; i < 4; i++) writeComposite(dir, `a_${i}`, i)
    for (let i = 0; i < 4; i++) writeComposite(dir, `b_${i}`, 100 + i)
    const out1 = join(dir, 'one.lteb')
    const out2 = join(dir, 'two.lteb')
    const job = { imageDir: dir, labelMap: MAP, modelId: 'seeded-cnn-32', batch: 3 }
    await exportEmbeddings({ ...job, output: out1 })
    await exportEmbeddings({ ...job, output: out2 })
    expect(readFileSync(out1).equals(readFileSync(out2))).toBe(true)
  })

  it('rejects unknown model ids', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exp-'))
    writeComposite(dir, 'a_0', 1)
    await expect(
      exportEmbeddings({
        imageDir: dir,
        labelMap: MAP,
        modelId: 'resnet-wishful',
        batch: 1,
        output: join(dir, 'x.lteb'),
      }),
    ).rejects.toThrow(/model id/)
  })
})

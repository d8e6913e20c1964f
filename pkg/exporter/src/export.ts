/**
 * Embedding export: run a vision backbone over a folder of composite
 * rasters and write the pipeline's embedding file.
 *
 * Label resolution happens before any inference; a single unmatched or
 * ambiguous stem aborts the job with the full failure list and no partial
 * output. Files are processed in sorted stem order so identical inputs
 * produce byte-identical exports.
 */

import { readFileSync, readdirSync, writeFileSync } from 'node:fs'
import { basename, extname, join } from 'node:path'

import { loadBackbone } from './backbone.js'
import { type LabelMap, resolveLabels } from './labels.js'
import { decodeComposite } from './ltcr.js'
import { encodeEmbeddingSet } from './lteb.js'

export interface ExportJob {
  imageDir: string
  labelMap: LabelMap
  modelId: string
  batch: number
  output: string
}

export class LabelResolutionError extends Error {
  constructor(readonly failures: { stem: string; reason: string }[]) {
    super(
      'label resolution failed for: ' +
        failures.map((f) => `${f.stem} (${f.reason})`).join(', '),
    )
  }
}

export interface ExportSummary {
  count: number
  dim: number
  nClasses: number
  output: string
}

export async function exportEmbeddings(job: ExportJob): Promise<ExportSummary> {
  const names = readdirSync(job.imageDir)
    .filter((n) => n.endsWith('.ltcr'))
    .sort()
  if (names.length === 0) {
    throw new Error(`no composite (.ltcr) files in ${job.imageDir}`)
  }
  const stems = names.map((n) => basename(n, extname(n)))

  const { labels, failures } = resolveLabels(stems, job.labelMap)
  if (failures.length > 0) {
    throw new LabelResolutionError(failures)
  }

  const images = names.map((n) => decodeComposite(readFileSync(join(job.imageDir, n))))
  const backbone = await loadBackbone(job.modelId)
  const vectors = await backbone.embed(images, Math.max(1, job.batch))

  const records = stems.map((stem, i) => ({
    label: labels.get(stem)!,
    vector: vectors[i],
  }))
  const encoded = encodeEmbeddingSet({
    dim: backbone.dim,
    nClasses: job.labelMap.nClasses,
    records,
  })
  writeFileSync(job.output, encoded)
  return {
    count: records.length,
    dim: backbone.dim,
    nClasses: job.labelMap.nClasses,
    output: job.output,
  }
}

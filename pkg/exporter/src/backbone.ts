/**
 * Vision backbones for embedding export.
 *
 * Two families are available through `modelId`:
 *
 *  - `seeded-cnn-<dim>`: a small convolutional feature extractor whose
 *    weights are derived deterministically from the model id. It runs fully
 *    offline and makes exports reproducible byte for byte; use it for
 *    integration work and pipeline plumbing.
 *  - `graph:<path>`: a locally stored TF.js GraphModel (for example a
 *    converted self-supervised ViT such as DINOv2). The file is loaded as-is;
 *    nothing is downloaded.
 */

import * as tf from '@tensorflow/tfjs'

import type { CompositeRaster } from './ltcr.js'

export interface Backbone {
  readonly id: string
  readonly dim: number
  /** Per-image feature vectors; rows align with the input order. */
  embed(images: CompositeRaster[], batch: number): Promise<Float32Array[]>
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i)
    hash = Math.imul(hash, 0x01000193)
  }
  return hash >>> 0
}

function toBatchTensor(images: CompositeRaster[]): tf.Tensor4D {
  const { width, height } = images[0]
  const data = new Float32Array(images.length * height * width * 3)
  let off = 0
  for (const img of images) {
    if (img.width !== width || img.height !== height) {
      throw new Error('all composites in one export must share dimensions')
    }
    // channel-major planes -> HWC
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const p = y * width + x
        data[off++] = img.planes[0][p]
        data[off++] = img.planes[1][p]
        data[off++] = img.planes[2][p]
      }
    }
  }
  return tf.tensor4d(data, [images.length, height, width, 3])
}

class LayersBackbone implements Backbone {
  constructor(
    readonly id: string,
    readonly dim: number,
    private readonly model: tf.LayersModel,
  ) {}

  async embed(images: CompositeRaster[], batch: number): Promise<Float32Array[]> {
    const out: Float32Array[] = []
    for (let start = 0; start < images.length; start += batch) {
      const chunk = images.slice(start, start + batch)
      const input = toBatchTensor(chunk)
      const features = tf.tidy(() => this.model.predict(input) as tf.Tensor2D)
      input.dispose()
      const rows = (await features.array()) as number[][]
      features.dispose()
      for (const row of rows) out.push(Float32Array.from(row))
    }
    return out
  }
}

function buildSeededCnn(id: string, dim: number): tf.LayersModel {
  const seed = fnv1a(id)
  const conv = (filters: number, layerSeed: number) =>
    tf.layers.conv2d({
      filters,
      kernelSize: 3,
      strides: 2,
      padding: 'same',
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed: layerSeed }),
      biasInitializer: 'zeros',
    })
  const model = tf.sequential()
  model.add(tf.layers.inputLayer({ inputShape: [null, null, 3] }))
  model.add(conv(16, seed + 1))
  model.add(conv(32, seed + 2))
  model.add(conv(64, seed + 3))
  model.add(tf.layers.globalAveragePooling2d({}))
  model.add(
    tf.layers.dense({
      units: dim,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 4 }),
      biasInitializer: 'zeros',
    }),
  )
  return model
}

class GraphBackbone implements Backbone {
  constructor(
    readonly id: string,
    readonly dim: number,
    private readonly model: tf.GraphModel,
  ) {}

  async embed(images: CompositeRaster[], batch: number): Promise<Float32Array[]> {
    const out: Float32Array[] = []
    for (let start = 0; start < images.length; start += batch) {
      const chunk = images.slice(start, start + batch)
      const input = toBatchTensor(chunk)
      const features = this.model.predict(input) as tf.Tensor
      input.dispose()
      const flat = features.reshape([chunk.length, -1]) as tf.Tensor2D
      const rows = (await flat.array()) as number[][]
      features.dispose()
      flat.dispose()
      for (const row of rows) out.push(Float32Array.from(row))
    }
    return out
  }
}

const SEEDED_CNN = /^seeded-cnn-(\d+)$/

export async function loadBackbone(modelId: string): Promise<Backbone> {
  const seeded = SEEDED_CNN.exec(modelId)
  if (seeded) {
    const dim = Number(seeded[1])
    if (dim < 1 || dim > 4096) {
      throw new Error(`seeded-cnn dim out of range: ${dim}`)
    }
    return new LayersBackbone(modelId, dim, buildSeededCnn(modelId, dim))
  }
  if (modelId.startsWith('graph:')) {
    const path = modelId.slice('graph:'.length)
    const model = await tf.loadGraphModel(`file://${path}`)
    const probeDim = model.outputs[0]?.shape?.at(-1)
    if (!probeDim || probeDim < 1) {
      throw new Error(`cannot determine output width of graph model ${path}`)
    }
    return new GraphBackbone(modelId, probeDim, model)
  }
  throw new Error(
    `unknown model id ${modelId!}; expected "seeded-cnn-<dim>" or "graph:<path>"`,
  )
}

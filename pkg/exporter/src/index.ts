export { loadBackbone, type Backbone } from './backbone.js'
export { exportEmbeddings, LabelResolutionError, type ExportJob, type ExportSummary } from './export.js'
export { loadLabelMap, resolveLabels, type LabelMap } from './labels.js'
export { decodeComposite, encodeComposite, type CompositeRaster } from './ltcr.js'
export { decodeEmbeddingSet, encodeEmbeddingSet, type EmbeddingSet } from './lteb.js'

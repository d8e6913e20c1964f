#!/usr/bin/env node
/**
 * CLI: export deep-feature embeddings from composite raster folders into
 * the pipeline's embedding-file format.
 */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'

import { LabelResolutionError, exportEmbeddings } from './export.js'
import { loadLabelMap } from './labels.js'

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName('sartail-export')
    .option('image-dir', { type: 'string', demandOption: true, describe: 'folder of .ltcr composites' })
    .option('labels', { type: 'string', demandOption: true, describe: 'label map JSON (stem patterns -> class)' })
    .option('model', { type: 'string', default: 'seeded-cnn-64', describe: 'model id: seeded-cnn-<dim> | graph:<path>' })
    .option('batch', { type: 'number', default: 16 })
    .option('out', { type: 'string', demandOption: true, describe: 'output embedding file' })
    .strict()
    .fail((msg: string) => {
      throw new Error(msg)
    })
    .parse()

  const summary = await exportEmbeddings({
    imageDir: args['image-dir'],
    labelMap: loadLabelMap(args.labels),
    modelId: args.model,
    batch: args.batch,
    output: args.out,
  })
  console.log(
    `exported ${summary.count} embedding(s), dim=${summary.dim}, ` +
      `classes=${summary.nClasses} -> ${summary.output}`,
  )
  return 0
}

const isDirectRun = process.argv[1]?.endsWith('cli.js') || process.argv[1]?.endsWith('cli.ts')
if (isDirectRun) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      if (err instanceof LabelResolutionError) {
        console.error('error: aborted, no output written')
        for (const f of err.failures) console.error(`  ${f.stem}: ${f.reason}`)
      } else {
        console.error(`error: ${err instanceof Error ? err.message : err}`)
      }
      process.exit(1)
    })
}

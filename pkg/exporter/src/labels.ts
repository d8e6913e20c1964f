/**
 * Filename-pattern label resolution.
 *
 * A label map is JSON: `{ "nClasses": N, "rules": [{ "pattern": "...",
 * "class": c }, ...] }` where each pattern is a regular expression matched
 * against the file stem (basename without extension). Every stem must
 * resolve to exactly one class; anything unmatched or ambiguous aborts the
 * export before any output is written.
 */

import { readFileSync } from 'node:fs'

export interface LabelRule {
  pattern: string
  class: number
}

export interface LabelMap {
  nClasses: number
  rules: LabelRule[]
}

export function loadLabelMap(path: string): LabelMap {
  const raw = JSON.parse(readFileSync(path, 'utf-8'))
  if (!Number.isInteger(raw.nClasses) || raw.nClasses < 1) {
    throw new Error('label map needs an integer nClasses >= 1')
  }
  if (!Array.isArray(raw.rules) || raw.rules.length === 0) {
    throw new Error('label map needs a non-empty rules array')
  }
  const rules: LabelRule[] = raw.rules.map((r: unknown, i: number) => {
    const rule = r as Partial<LabelRule>
    if (typeof rule.pattern !== 'string') {
      throw new Error(`rule ${i}: pattern must be a string`)
    }
    if (!Number.isInteger(rule.class) || rule.class! < 0 || rule.class! >= raw.nClasses) {
      throw new Error(`rule ${i}: class must lie in [0, ${raw.nClasses})`)
    }
    new RegExp(rule.pattern) // validate eagerly
    return { pattern: rule.pattern, class: rule.class! }
  })
  return { nClasses: raw.nClasses, rules }
}

export interface ResolutionFailure {
  stem: string
  reason: 'unmatched' | 'ambiguous'
}

export function resolveLabels(
  stems: string[],
  map: LabelMap,
): { labels: Map<string, number>; failures: ResolutionFailure[] } {
  const labels = new Map<string, number>()
  const failures: ResolutionFailure[] = []
  const compiled = map.rules.map((r) => ({ re: new RegExp(r.pattern), class: r.class }))
  for (const stem of stems) {
    const classes = new Set<number>()
    for (const rule of compiled) {
      if (rule.re.test(stem)) classes.add(rule.class)
    }
    if (classes.size === 0) {
      failures.push({ stem, reason: 'unmatched' })
    } else if (classes.size > 1) {
      failures.push({ stem, reason: 'ambiguous' })
    } else {
      labels.set(stem, classes.values().next().value!)
    }
  }
  return { labels, failures }
}

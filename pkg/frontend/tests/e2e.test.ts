// Scripted examiner flow against a live service instance: upload two
// sibling generator documents, pick a template from the ground-truth
// glyph box, search it, and compare -- expecting the same-writer verdict
// and overlays at exactly the API-reported coordinates.

import { ChildProcess, execFileSync, spawn } from 'node:child_process'
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { ApiClient } from '../src/api.js'
import { ExaminerFlow } from '../src/flow.js'
import type { RectShape } from '../src/overlays.js'

const PORT = 8979
const BASE = `http://127.0.0.1:${PORT}`

interface Glyph {
  line: number
  row: number
  col: number
  height: number
  width: number
  label: string
}

let service: ChildProcess
let workDir: string
let docs: { path: string; gt: { glyphs: Glyph[] } }[]

function pngSize(path: string): { width: number; height: number } {
  const buf = readFileSync(path)
  return { width: buf.readUInt32BE(16), height: buf.readUInt32BE(20) }
}

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/documents`)
      if (res.ok) return
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200))
  }
  throw new Error('service did not come up')
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), 'examiner-e2e-'))
  docs = []
  for (const seed of [101, 102]) {
    const path = join(workDir, `doc${seed}.png`)
    execFileSync('python3', [
      '-m', 'scriptoria', 'gen', 'doc',
      '--out', path, '--writer', '0', '--seed', String(seed), '--labels', 'a,e',
    ])
    const gt = JSON.parse(readFileSync(`${path}.gt.json`, 'utf-8'))
    docs.push({ path, gt })
  }

  const configPath = join(workDir, 'service.json')
  writeFileSync(configPath, JSON.stringify({ run_length: 1, threshold: 4.0 }))
  service = spawn('python3', [
    '-m', 'scriptoria', 'serve',
    '--root', join(workDir, 'store'),
    '--port', String(PORT),
    '--config', configPath,
  ])
  await waitForService()
}, 60_000)

afterAll(() => {
  service?.kill('SIGTERM')
})

describe('examiner end-to-end flow', () => {
  const api = new ApiClient(BASE)
  const flow = new ExaminerFlow(api)
  const ids: string[] = []

  it('uploads two sibling documents', async () => {
    for (const doc of docs) {
      const bytes = readFileSync(doc.path)
      const size = pngSize(doc.path)
      const blob = new Blob([new Uint8Array(bytes)], { type: 'image/png' })
      const id = await flow.loadDocument(blob, 'doc.png', size.width, size.height)
      ids.push(id)
      expect(flow.panels.get(id)!.layout.lines.length).toBeGreaterThan(0)
    }
    expect(flow.state.docIds).toEqual(ids)
  }, 30_000)

  it('renders zone overlays at API-reported coordinates', () => {
    const panel = flow.panels.get(ids[0])!
    const shapes = flow.overlays(ids[0])
    const middles = shapes.filter(
      (s): s is RectShape => s.kind === 'rect' && s.tag === 'zone-middle',
    )
    expect(middles).toHaveLength(panel.layout.lines.length)
    panel.layout.lines.forEach((line, i) => {
      expect(middles[i].y).toBe(line.middle_start)
      expect(middles[i].h).toBe(line.middle_end - line.middle_start + 1)
    })
  })

  it('rejects an undersized selection before any API call', () => {
    let fetches = 0
    const realFetch = globalThis.fetch
    globalThis.fetch = ((...args: Parameters<typeof fetch>) => {
      fetches += 1
      return realFetch(...args)
    }) as typeof fetch
    try {
      const problem = flow.select(ids[0], { row: 0, col: 0, h: 2, w: 2 })
      expect(problem).toMatch(/at least 4x4/)
      expect(fetches).toBe(0)
    } finally {
      globalThis.fetch = realFetch
    }
  })

  it('raising So never increases the word count', async () => {
    const before = flow.wordCount(ids[0])
    flow.stageSo(60)
    expect(flow.wordCount(ids[0])).toBe(before) // staged, not applied
    await flow.applySo(ids[0])
    const after = flow.wordCount(ids[0])
    expect(after).toBeLessThanOrEqual(before)
    flow.stageSo(8)
    await flow.applySo(ids[0]) // restore a sensible threshold
  }, 30_000)

  it('creates a template from the ground-truth glyph box and finds copies', async () => {
    const glyphs = docs[0].gt.glyphs
      .filter((g) => g.label === 'a')
      .sort((x, y) => x.line - y.line || x.col - y.col)
    const g = glyphs[0]
    expect(flow.select(ids[0], { row: g.row, col: g.col, h: g.height, w: g.width })).toBeNull()
    const template = await flow.createTemplateFromSelection(ids[0], 'a')
    expect(template.label).toBe('a')

    const matches = await flow.runSearch(ids[0], template.template_id)
    expect(matches.length).toBe(glyphs.length)
    for (const match of matches) {
      expect(match.distance).toBeLessThan(0.1)
    }

    const shapes = flow.overlays(ids[0])
    const outlines = shapes.filter(
      (s): s is RectShape => s.kind === 'rect' && s.tag === 'match',
    )
    expect(outlines.map((o) => [o.y, o.x])).toEqual(matches.map((m) => [m.row, m.col]))
  }, 60_000)

  it('compares the pair to the same-writer verdict with feature tables', async () => {
    const verdict = await flow.compareLoaded()
    expect(verdict.comparison.same_writer).toBe(true)
    expect(verdict.comparison.distance).toBeLessThan(verdict.comparison.threshold)
    expect(verdict.featuresA.entries.map((e) => e.id)).toContain('middle')
    expect(verdict.featuresB.entries.length).toBeGreaterThan(0)
    console.log(
      `[PASS] examiner-ui e2e: verdict same_writer=${verdict.comparison.same_writer}, ` +
        `distance ${verdict.comparison.distance.toFixed(3)} < ${verdict.comparison.threshold}`,
    )
  }, 30_000)
})

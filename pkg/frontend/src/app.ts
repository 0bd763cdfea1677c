// Browser shell: two document panels, a parameter toolbar, and the
// comparison verdict area.  All measurement numbers are rendered from
// server payloads held by ExaminerFlow.

import { ApiClient } from './api.js'
import { ExaminerFlow } from './flow.js'
import { drawShapes } from './overlays.js'
import type { FeaturesPayload, Rect } from './types.js'

const api = new ApiClient(localStorage.getItem('scriptoria-api') ?? 'http://127.0.0.1:8967')
const flow = new ExaminerFlow(api)

const root = document.getElementById('app')!

const toolbar = el('div', 'toolbar')
const fileInput = el('input') as HTMLInputElement
fileInput.type = 'file'
fileInput.accept = 'image/png'
const soInput = numberInput('So (px)', 8)
const tcInput = numberInput('T_c', 0.1, 0.01)
const labelInput = el('input') as HTMLInputElement
labelInput.placeholder = 'template label'
labelInput.className = 'label-input'
const compareButton = button('Compare')
const statusLine = el('div', 'status')
toolbar.append(fileInput, soInput.wrap, tcInput.wrap, labelInput, compareButton, statusLine)

const panelsRow = el('div', 'panels')
const verdictBox = el('div', 'verdict')
root.append(toolbar, panelsRow, verdictBox)

interface PanelDom {
  docId: string
  canvas: HTMLCanvasElement
  image: HTMLImageElement
  dragStart: { x: number; y: number } | null
}

const panelDoms: PanelDom[] = []

fileInput.addEventListener('change', async () => {
  const file = fileInput.files?.[0]
  if (!file) return
  try {
    const bitmap = await createImageBitmap(file)
    const docId = await flow.loadDocument(file, file.name, bitmap.width, bitmap.height)
    addPanel(docId, bitmap.width, bitmap.height)
    setStatus(`loaded ${file.name} as ${docId}`)
  } catch (err) {
    setStatus(String(err))
  }
})

soInput.input.addEventListener('change', () => flow.stageSo(Number(soInput.input.value)))
tcInput.input.addEventListener('change', () => flow.stageTc(Number(tcInput.input.value)))

compareButton.addEventListener('click', async () => {
  try {
    const verdict = await flow.compareLoaded()
    const { comparison } = verdict
    verdictBox.innerHTML = ''
    const headline = el('h2')
    headline.textContent = comparison.same_writer
      ? `SAME WRITER (distance ${comparison.distance.toFixed(3)} < ${comparison.threshold})`
      : `DIFFERENT WRITER (distance ${comparison.distance.toFixed(3)} >= ${comparison.threshold})`
    headline.className = comparison.same_writer ? 'same' : 'different'
    verdictBox.append(
      headline,
      featureTable(verdict.featuresA),
      featureTable(verdict.featuresB),
    )
  } catch (err) {
    setStatus(String(err))
  }
})

function addPanel(docId: string, width: number, height: number): void {
  const wrap = el('div', 'panel')
  const title = el('div', 'panel-title')
  title.textContent = docId
  const canvas = el('canvas') as HTMLCanvasElement
  canvas.width = width
  canvas.height = height
  const image = new Image()
  image.src = api.imageUrl(docId)
  image.addEventListener('load', () => redraw(dom))
  const controls = el('div', 'panel-controls')
  const applySo = button('Apply So')
  const makeTemplate = button('Template from selection')
  const searchButton = button('Search')
  controls.append(applySo, makeTemplate, searchButton)
  wrap.append(title, canvas, controls)
  panelsRow.append(wrap)

  const dom: PanelDom = { docId, canvas, image, dragStart: null }
  panelDoms.push(dom)

  canvas.addEventListener('mousedown', (ev) => {
    dom.dragStart = canvasPoint(canvas, ev)
  })
  canvas.addEventListener('mouseup', (ev) => {
    if (!dom.dragStart) return
    const end = canvasPoint(canvas, ev)
    const rect: Rect = {
      row: Math.min(dom.dragStart.y, end.y),
      col: Math.min(dom.dragStart.x, end.x),
      h: Math.abs(end.y - dom.dragStart.y) + 1,
      w: Math.abs(end.x - dom.dragStart.x) + 1,
    }
    dom.dragStart = null
    const problem = flow.select(docId, rect)
    setStatus(problem ?? `selection ${rect.w}x${rect.h} at (${rect.row}, ${rect.col})`)
    redraw(dom)
  })

  applySo.addEventListener('click', async () => {
    try {
      await flow.applySo(docId)
      setStatus(`So applied; ${flow.wordCount(docId)} words`)
      redraw(dom)
    } catch {
      setStatus(flow.lastError ?? 'So update failed')
    }
  })

  makeTemplate.addEventListener('click', async () => {
    try {
      const template = await flow.createTemplateFromSelection(docId, labelInput.value || '?')
      setStatus(`template ${template.template_id} (${template.label})`)
    } catch {
      setStatus(flow.lastError ?? 'template creation failed')
    }
  })

  searchButton.addEventListener('click', async () => {
    const panel = flow.panels.get(docId)
    const last = panel?.templates[panel.templates.length - 1]
    if (!last) {
      setStatus('create a template first')
      return
    }
    try {
      const matches = await flow.runSearch(docId, last.template_id)
      setStatus(`${matches.length} matches for ${last.label}`)
      redraw(dom)
    } catch {
      setStatus(flow.lastError ?? 'search failed')
    }
  })
}

function redraw(dom: PanelDom): void {
  const ctx = dom.canvas.getContext('2d')!
  ctx.clearRect(0, 0, dom.canvas.width, dom.canvas.height)
  if (dom.image.complete) ctx.drawImage(dom.image, 0, 0)
  drawShapes(ctx, flow.overlays(dom.docId), 1)
  const selection = flow.panels.get(dom.docId)?.selection
  if (selection) {
    ctx.strokeStyle = 'rgba(30, 30, 220, 1)'
    ctx.setLineDash([4, 3])
    ctx.strokeRect(selection.col, selection.row, selection.w, selection.h)
    ctx.setLineDash([])
  }
}

function canvasPoint(canvas: HTMLCanvasElement, ev: MouseEvent): { x: number; y: number } {
  const bounds = canvas.getBoundingClientRect()
  return {
    x: Math.round(((ev.clientX - bounds.left) / bounds.width) * canvas.width),
    y: Math.round(((ev.clientY - bounds.top) / bounds.height) * canvas.height),
  }
}

function featureTable(features: FeaturesPayload): HTMLElement {
  const table = el('table', 'features') as HTMLTableElement
  const caption = table.createCaption()
  caption.textContent = `${features.doc_id} (${features.mode})`
  const head = table.insertRow()
  for (const text of ['measure', 'mean', 'std']) {
    const cell = el('th')
    cell.textContent = text
    head.append(cell)
  }
  for (const entry of features.entries) {
    const row = table.insertRow()
    row.insertCell().textContent = entry.id
    row.insertCell().textContent = entry.mean.toFixed(2)
    row.insertCell().textContent = entry.std.toFixed(2)
  }
  return table
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag)
  if (className) node.className = className
  return node
}

function button(text: string): HTMLButtonElement {
  const node = el('button') as HTMLButtonElement
  node.textContent = text
  return node
}

function numberInput(label: string, value: number, step = 1) {
  const wrap = el('label', 'num')
  wrap.textContent = label
  const input = el('input') as HTMLInputElement
  input.type = 'number'
  input.value = String(value)
  input.step = String(step)
  wrap.append(input)
  return { wrap, input }
}

function setStatus(text: string): void {
  statusLine.textContent = text
}

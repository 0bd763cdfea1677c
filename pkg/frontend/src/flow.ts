// Examiner workflow, DOM-free: the app shell and the e2e suite both
// drive this class.  It holds per-document server payloads verbatim --
// the UI never recomputes a measurement.

import { ApiClient, ApiError } from './api.js'
import { buildOverlays, Shape } from './overlays.js'
import {
  ViewState,
  addDocument,
  clampRect,
  initialViewState,
  validateTemplateRect,
} from './state.js'
import type {
  ComparisonPayload,
  FeaturesPayload,
  LayoutPayload,
  MatchPayload,
  Rect,
  TemplatePayload,
} from './types.js'

export interface DocumentPanel {
  docId: string
  layout: LayoutPayload
  matches: MatchPayload[]
  templates: TemplatePayload[]
  imageWidth: number
  imageHeight: number
  selection: Rect | null
}

export interface Verdict {
  comparison: ComparisonPayload
  featuresA: FeaturesPayload
  featuresB: FeaturesPayload
}

export class ExaminerFlow {
  state: ViewState = initialViewState()
  panels = new Map<string, DocumentPanel>()
  lastError: string | null = null

  constructor(readonly api: ApiClient) {}

  private panel(docId: string): DocumentPanel {
    const panel = this.panels.get(docId)
    if (!panel) throw new Error(`document ${docId} is not loaded`)
    return panel
  }

  async loadDocument(
    file: Blob,
    filename: string,
    imageWidth: number,
    imageHeight: number,
  ): Promise<string> {
    const uploaded = await this.api.uploadDocument(file, filename)
    const layout = await this.api.getLayout(uploaded.id)
    this.state = addDocument(this.state, uploaded.id)
    this.panels.set(uploaded.id, {
      docId: uploaded.id,
      layout,
      matches: [],
      templates: [],
      imageWidth,
      imageHeight,
      selection: null,
    })
    this.lastError = null
    return uploaded.id
  }

  // Rect selection is clamped to the image and validated client-side;
  // an undersized rect never reaches the API.
  select(docId: string, rect: Rect): string | null {
    const panel = this.panel(docId)
    const clamped = clampRect(rect, panel.imageWidth, panel.imageHeight)
    const problem = validateTemplateRect(clamped)
    if (problem) {
      this.lastError = problem
      return problem
    }
    panel.selection = clamped
    this.lastError = null
    return null
  }

  stageSo(value: number): void {
    this.state = { ...this.state, stagedSo: value }
  }

  stageTc(value: number): void {
    this.state = { ...this.state, stagedTc: value }
  }

  async applySo(docId: string): Promise<LayoutPayload> {
    const panel = this.panel(docId)
    if (this.state.stagedSo === null) return panel.layout
    try {
      const layout = await this.api.putSo(docId, { so: this.state.stagedSo })
      panel.layout = layout
      this.state = { ...this.state, stagedSo: null }
      this.lastError = null
      return layout
    } catch (err) {
      this.lastError = describe(err) // staged value survives the failure
      throw err
    }
  }

  async createTemplateFromSelection(docId: string, label: string): Promise<TemplatePayload> {
    const panel = this.panel(docId)
    if (!panel.selection) throw new Error('no selection to create a template from')
    const { row, col, h, w } = panel.selection
    try {
      const template = await this.api.createTemplate(docId, [row, col, h, w], label)
      panel.templates.push(template)
      this.lastError = null
      return template
    } catch (err) {
      this.lastError = describe(err)
      throw err
    }
  }

  async runSearch(docId: string, templateId: string): Promise<MatchPayload[]> {
    const panel = this.panel(docId)
    try {
      const result = await this.api.search(
        docId,
        templateId,
        this.state.stagedTc ?? undefined,
      )
      panel.matches = result.matches
      this.lastError = null
      return result.matches
    } catch (err) {
      this.lastError = describe(err)
      throw err
    }
  }

  async compareLoaded(): Promise<Verdict> {
    if (this.state.docIds.length !== 2) {
      throw new Error('comparison needs exactly two loaded documents')
    }
    const [a, b] = this.state.docIds
    const comparison = await this.api.compare(a, b, this.state.threshold ?? undefined)
    const featuresA = await this.api.getFeatures(a)
    const featuresB = await this.api.getFeatures(b)
    this.lastError = null
    return { comparison, featuresA, featuresB }
  }

  overlays(docId: string): Shape[] {
    const panel = this.panel(docId)
    return buildOverlays(panel.layout, panel.matches, this.state.toggles, panel.imageWidth)
  }

  wordCount(docId: string): number {
    return this.panel(docId).layout.lines.reduce((acc, line) => acc + line.words.length, 0)
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`
  return err instanceof Error ? err.message : String(err)
}

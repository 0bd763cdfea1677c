// View state for one examiner session: at most two documents side by
// side, staged parameter edits, and overlay visibility.

import type { Rect } from './types.js'

export type Tool = 'pan' | 'rect-select'

export interface OverlayToggles {
  lines: boolean
  zones: boolean
  words: boolean
  matches: boolean
}

export interface ViewState {
  docIds: string[] // length <= 2
  toggles: OverlayToggles
  tool: Tool
  stagedSo: number | null // staged until "Apply"
  stagedTc: number | null
  threshold: number | null // comparison cutoff; null = server default
}

export const MIN_TEMPLATE_SIDE = 4

export function initialViewState(): ViewState {
  return {
    docIds: [],
    toggles: { lines: true, zones: true, words: true, matches: true },
    tool: 'rect-select',
    stagedSo: null,
    stagedTc: null,
    threshold: null,
  }
}

export function addDocument(state: ViewState, docId: string): ViewState {
  if (state.docIds.includes(docId)) return state
  const docIds = [...state.docIds, docId].slice(-2) // keep newest two
  return { ...state, docIds }
}

export function clampRect(rect: Rect, imageWidth: number, imageHeight: number): Rect {
  const row = Math.min(Math.max(rect.row, 0), Math.max(imageHeight - 1, 0))
  const col = Math.min(Math.max(rect.col, 0), Math.max(imageWidth - 1, 0))
  return {
    row,
    col,
    h: Math.min(rect.h, imageHeight - row),
    w: Math.min(rect.w, imageWidth - col),
  }
}

export function validateTemplateRect(rect: Rect): string | null {
  if (rect.h < MIN_TEMPLATE_SIDE || rect.w < MIN_TEMPLATE_SIDE) {
    return `selection must be at least ${MIN_TEMPLATE_SIDE}x${MIN_TEMPLATE_SIDE} pixels`
  }
  return null
}

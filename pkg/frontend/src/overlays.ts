// Overlay scene construction: a pure function from server payloads and
// view state to drawable primitives.  The canvas adapter just replays
// the list, so tests can assert on exact coordinates without a browser.

import type { OverlayToggles } from './state.js'
import type { LayoutPayload, MatchPayload } from './types.js'

export interface RectShape {
  kind: 'rect'
  x: number
  y: number
  w: number
  h: number
  color: string
  fill: boolean
  tag: 'zone-upper' | 'zone-middle' | 'zone-lower' | 'line' | 'word' | 'match' | 'selection'
}

export interface LabelShape {
  kind: 'label'
  x: number
  y: number
  text: string
  color: string
  tag: 'gap' | 'match-distance'
}

export type Shape = RectShape | LabelShape

export const ZONE_COLORS = {
  upper: 'rgba(64, 129, 255, 0.25)',
  middle: 'rgba(255, 171, 64, 0.30)',
  lower: 'rgba(72, 199, 116, 0.25)',
}

export function buildOverlays(
  layout: LayoutPayload | null,
  matches: MatchPayload[],
  toggles: OverlayToggles,
  imageWidth: number,
): Shape[] {
  const shapes: Shape[] = []
  if (layout) {
    for (const line of layout.lines) {
      if (toggles.zones) {
        shapes.push(
          zoneRect(line.upper_start, line.middle_start - 1, imageWidth, ZONE_COLORS.upper, 'zone-upper'),
          zoneRect(line.middle_start, line.middle_end, imageWidth, ZONE_COLORS.middle, 'zone-middle'),
          zoneRect(line.middle_end + 1, line.lower_end, imageWidth, ZONE_COLORS.lower, 'zone-lower'),
        )
      }
      if (toggles.lines) {
        shapes.push({
          kind: 'rect',
          x: 0,
          y: line.upper_start,
          w: imageWidth,
          h: line.lower_end - line.upper_start + 1,
          color: 'rgba(90, 90, 90, 0.9)',
          fill: false,
          tag: 'line',
        })
      }
      if (toggles.words) {
        for (const word of line.words) {
          shapes.push({
            kind: 'rect',
            x: word.col_start,
            y: line.middle_start,
            w: word.col_end - word.col_start + 1,
            h: line.middle_end - line.middle_start + 1,
            color: 'rgba(170, 40, 180, 0.9)',
            fill: false,
            tag: 'word',
          })
          if (word.gap_before !== undefined) {
            shapes.push({
              kind: 'label',
              x: word.col_start - word.gap_before / 2,
              y: line.upper_start - 2,
              text: `${word.gap_before}px`,
              color: 'rgba(170, 40, 180, 1)',
              tag: 'gap',
            })
          }
        }
      }
    }
  }
  if (toggles.matches) {
    for (const match of matches) {
      shapes.push({
        kind: 'rect',
        x: match.col,
        y: match.row,
        w: match.w,
        h: match.h,
        color: 'rgba(220, 38, 38, 0.95)',
        fill: false,
        tag: 'match',
      })
      shapes.push({
        kind: 'label',
        x: match.col,
        y: match.row - 2,
        text: `d=${match.distance.toFixed(3)}`,
        color: 'rgba(220, 38, 38, 1)',
        tag: 'match-distance',
      })
    }
  }
  return shapes
}

function zoneRect(
  top: number,
  bottom: number,
  width: number,
  color: string,
  tag: RectShape['tag'],
): RectShape {
  return {
    kind: 'rect',
    x: 0,
    y: top,
    w: width,
    h: Math.max(bottom - top + 1, 0),
    color,
    fill: true,
    tag,
  }
}

export function drawShapes(ctx: CanvasRenderingContext2D, shapes: Shape[], scale: number): void {
  for (const shape of shapes) {
    if (shape.kind === 'rect') {
      if (shape.fill) {
        ctx.fillStyle = shape.color
        ctx.fillRect(shape.x * scale, shape.y * scale, shape.w * scale, shape.h * scale)
      } else {
        ctx.strokeStyle = shape.color
        ctx.lineWidth = 1
        ctx.strokeRect(shape.x * scale, shape.y * scale, shape.w * scale, shape.h * scale)
      }
    } else {
      ctx.fillStyle = shape.color
      ctx.font = '10px sans-serif'
      ctx.fillText(shape.text, shape.x * scale, shape.y * scale)
    }
  }
}

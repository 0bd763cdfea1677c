// Wire types mirroring the service JSON exactly.

export interface WordPayload {
  col_start: number
  col_end: number
  gap_before?: number
}

export interface LinePayload {
  upper_start: number
  middle_start: number
  middle_end: number
  lower_end: number
  words: WordPayload[]
}

export interface LayoutPayload {
  lines: LinePayload[]
}

export interface UploadResponse {
  id: string
  lines: number
  words: number
}

export interface TemplatePayload {
  template_id: string
  bbox: [number, number, number, number]
  label: string
}

export interface MatchPayload {
  line: number
  row: number
  col: number
  h: number
  w: number
  distance: number
  ink_height: number
  ink_width: number
}

export interface SearchResponse {
  template_id: string
  label: string
  partial: boolean
  matches: MatchPayload[]
}

export interface FeatureEntryPayload {
  id: string
  mean: number
  std: number
}

export interface FeaturesPayload {
  doc_id: string
  mode: string
  entries: FeatureEntryPayload[]
}

export interface ComparisonPayload {
  a: string
  b: string
  distance: number
  threshold: number
  same_writer: boolean
  shared_ids: string[]
}

export interface Rect {
  row: number
  col: number
  h: number
  w: number
}

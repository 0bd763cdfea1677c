// Thin typed client over the analysis service; every method is one
// endpoint and every number shown in the UI comes back through here.

import type {
  ComparisonPayload,
  FeaturesPayload,
  LayoutPayload,
  SearchResponse,
  TemplatePayload,
  UploadResponse,
} from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message)
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = 'http'
    let message = `${response.status} ${response.statusText}`
    try {
      const body = await response.json()
      code = body.code ?? code
      message = body.message ?? message
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(response.status, code, message)
  }
  return (await response.json()) as T
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path
  }

  async uploadDocument(file: Blob, filename: string): Promise<UploadResponse> {
    const form = new FormData()
    form.append('file', file, filename)
    return parse(await fetch(this.url('/documents'), { method: 'POST', body: form }))
  }

  async getLayout(docId: string): Promise<LayoutPayload> {
    return parse(await fetch(this.url(`/documents/${docId}/layout`)))
  }

  imageUrl(docId: string): string {
    return this.url(`/documents/${docId}/image`)
  }

  async putSo(
    docId: string,
    body: { so?: number; per_line?: Record<string, number> },
  ): Promise<LayoutPayload> {
    return parse(
      await fetch(this.url(`/documents/${docId}/so`), {
        method: 'PUT',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      }),
    )
  }

  async createTemplate(
    docId: string,
    bbox: [number, number, number, number],
    label: string,
  ): Promise<TemplatePayload> {
    return parse(
      await fetch(this.url(`/documents/${docId}/templates`), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ bbox, label }),
      }),
    )
  }

  async search(docId: string, templateId: string, tC?: number): Promise<SearchResponse> {
    const body: Record<string, unknown> = { template_id: templateId }
    if (tC !== undefined) body.t_c = tC
    return parse(
      await fetch(this.url(`/documents/${docId}/search`), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      }),
    )
  }

  async getFeatures(docId: string, mode?: string): Promise<FeaturesPayload> {
    const query = mode ? `?mode=${encodeURIComponent(mode)}` : ''
    return parse(await fetch(this.url(`/documents/${docId}/features${query}`)))
  }

  async compare(a: string, b: string, threshold?: number): Promise<ComparisonPayload> {
    const body: Record<string, unknown> = { a, b }
    if (threshold !== undefined) body.threshold = threshold
    return parse(
      await fetch(this.url('/compare'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      }),
    )
  }
}

// Thin typed client over the review service. The fetch implementation is
// injectable so tests can fake or capture the wire traffic.

import type {
  NextItemResponse,
  RatingSubmission,
  SessionCreateAck,
  SessionCreateRequest,
  SessionProgressResponse,
  SubmitAck,
} from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`review service responded ${status}: ${detail}`)
    this.name = 'ApiError'
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText
  try {
    const body = (await response.json()) as { detail?: string }
    if (body && typeof body.detail === 'string') detail = body.detail
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(response.status, detail)
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}/api/v1${path}`
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.url(path))
    if (!response.ok) await parseError(response)
    return (await response.json()) as T
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.url(path), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    })
    if (!response.ok) await parseError(response)
    return (await response.json()) as T
  }

  nextItem(sessionId: string, raterId: string): Promise<NextItemResponse> {
    const rater = encodeURIComponent(raterId)
    return this.get(`/sessions/${encodeURIComponent(sessionId)}/items/next?rater_id=${rater}`)
  }

  submitRating(sessionId: string, rating: RatingSubmission): Promise<SubmitAck> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/ratings`, rating)
  }

  progress(sessionId: string): Promise<SessionProgressResponse> {
    return this.get(`/sessions/${encodeURIComponent(sessionId)}/progress`)
  }

  createSession(request: SessionCreateRequest): Promise<SessionCreateAck> {
    return this.post('/sessions', request)
  }

  closeSession(sessionId: string): Promise<{ session_id: string; closed: boolean }> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/close`)
  }
}

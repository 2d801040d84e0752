// Shared test doubles: a canned-response fetch and an in-memory review
// service faithful enough for flow tests.

import type { FetchLike } from '../src/api'
import type {
  NextItemResponse,
  RaterItemView,
  RatingSchema,
  RatingSubmission,
} from '../src/types'
import { DIMENSIONS, OVERALL_LABELS } from '../src/types'

export const SCHEMA: RatingSchema = {
  overall: [...OVERALL_LABELS],
  dimensions: [...DIMENSIONS],
  scale_min: 1,
  scale_max: 5,
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  })
}

export interface RecordedCall {
  url: string
  method: string
  body: unknown
}

export function cannedFetch(
  responses: Array<Response | Error>,
): FetchLike & { calls: RecordedCall[] } {
  const queue = [...responses]
  const calls: RecordedCall[] = []
  const impl = (async (url: string, init?: RequestInit) => {
    calls.push({
      url,
      method: init?.method ?? 'GET',
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    })
    const next = queue.shift()
    if (next === undefined) throw new Error('cannedFetch queue exhausted')
    if (next instanceof Error) throw next
    return next
  }) as FetchLike & { calls: RecordedCall[] }
  impl.calls = calls
  return impl
}

export function makeItems(n: number): RaterItemView[] {
  return Array.from({ length: n }, (_, i) => ({
    item_id: `item-${String(i).padStart(4, '0')}`,
    position: i,
    findings: `findings text ${i}`,
    shown_impression: `impression text ${i}`,
  }))
}

/** Minimal in-memory stand-in for the review service. */
export class FakeService {
  readonly submissions: RatingSubmission[] = []
  failNextSubmit = false

  constructor(private readonly items: RaterItemView[]) {}

  fetch: FetchLike = async (url: string, init?: RequestInit) => {
    if (url.includes('/items/next')) {
      const rated = this.submissions.length
      const payload: NextItemResponse = {
        session_id: 's',
        rater_id: 'r',
        progress: { rated, total: this.items.length },
        schema: SCHEMA,
        done: rated >= this.items.length,
        ...(rated < this.items.length ? { item: this.items[rated] } : {}),
      }
      return jsonResponse(200, payload)
    }
    if (url.includes('/ratings')) {
      if (this.failNextSubmit) {
        this.failNextSubmit = false
        throw new TypeError('fetch failed: connection refused')
      }
      const submission = JSON.parse(init?.body as string) as RatingSubmission
      this.submissions.push(submission)
      return jsonResponse(200, {
        status: 'accepted',
        item_id: submission.item_id,
        rater_id: submission.rater_id,
        replaced: false,
      })
    }
    throw new Error(`FakeService has no route for ${url}`)
  }
}

export function fillForm(
  flow: import('../src/flow').RatingFlow,
  overall: (typeof OVERALL_LABELS)[number] = 'neutral',
  value = 3,
): void {
  flow.setOverall(overall)
  for (const dim of DIMENSIONS) flow.setDimension(dim, value)
}

// Wire types for the review service (/api/v1/). The rater-facing item view
// deliberately has no origin field; the schema test enforces this at both
// the type level and against captured payloads.

export const OVERALL_LABELS = ['positive', 'neutral', 'negative'] as const
export type OverallLabel = (typeof OVERALL_LABELS)[number]

export const DIMENSIONS = [
  'clearance',
  'completeness',
  'human_likeness',
  'conciseness',
  'coherence',
] as const
export type DimensionName = (typeof DIMENSIONS)[number]

export interface RaterItemView {
  item_id: string
  position: number
  findings: string
  shown_impression: string
}

export interface RatingSchema {
  overall: OverallLabel[]
  dimensions: DimensionName[]
  scale_min: number
  scale_max: number
}

export interface Progress {
  rated: number
  total: number
}

export interface NextItemResponse {
  session_id: string
  rater_id: string
  progress: Progress
  schema: RatingSchema
  done: boolean
  item?: RaterItemView
}

export interface RatingSubmission {
  item_id: string
  rater_id: string
  overall: OverallLabel
  dimensions: Record<DimensionName, number>
}

export interface SubmitAck {
  status: string
  item_id: string
  rater_id: string
  replaced: boolean
}

export interface SessionProgressResponse {
  session_id: string
  total: number
  rated: number
  per_rater: Record<string, number>
  complete: boolean
}

export interface SessionItemIn {
  report_id: string
  text: string
  findings?: string
}

export interface SessionCreateRequest {
  generated: SessionItemIn[]
  originals: SessionItemIn[]
  rater_ids: string[]
  seed?: number
  session_id?: string
  allow_replacement?: boolean
}

export interface SessionCreateAck {
  session_id: string
  n_items: number
  rater_ids: string[]
}

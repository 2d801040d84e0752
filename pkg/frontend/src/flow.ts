// Session flow controller: fetch next item, collect a complete rating,
// submit, advance, repeat until the service says done.
//
// The server is the single source of truth: nothing is persisted client
// side and there is no optimistic advance - the UI moves on only after the
// service acknowledged the rating. A network failure surfaces as a retry
// banner and leaves the in-progress form untouched.

import { ReviewApi } from './api'
import type {
  DimensionName,
  NextItemResponse,
  OverallLabel,
  Progress,
  RaterItemView,
  RatingSchema,
} from './types'
import { DIMENSIONS } from './types'

export interface RatingForm {
  overall: OverallLabel | null
  dimensions: Partial<Record<DimensionName, number>>
}

export type FlowPhase = 'loading' | 'rating' | 'done' | 'disconnected'

export interface FlowState {
  phase: FlowPhase
  item: RaterItemView | null
  schema: RatingSchema | null
  progress: Progress
  form: RatingForm
  validationErrors: string[]
  retryBanner: string | null
  submitting: boolean
}

function emptyForm(): RatingForm {
  return { overall: null, dimensions: {} }
}

export type FlowListener = (state: FlowState) => void

export class RatingFlow {
  private state: FlowState = {
    phase: 'loading',
    item: null,
    schema: null,
    progress: { rated: 0, total: 0 },
    form: emptyForm(),
    validationErrors: [],
    retryBanner: null,
    submitting: false,
  }
  private listeners: FlowListener[] = []

  constructor(
    private readonly api: ReviewApi,
    private readonly sessionId: string,
    private readonly raterId: string,
  ) {}

  getState(): FlowState {
    return this.state
  }

  subscribe(listener: FlowListener): void {
    this.listeners.push(listener)
  }

  private update(partial: Partial<FlowState>): void {
    this.state = { ...this.state, ...partial }
    for (const listener of this.listeners) listener(this.state)
  }

  /** Fetch the next unrated item (also the entry point and retry target). */
  async advance(): Promise<void> {
    this.update({ phase: 'loading', retryBanner: null })
    let next: NextItemResponse
    try {
      next = await this.api.nextItem(this.sessionId, this.raterId)
    } catch (error) {
      this.update({
        phase: 'disconnected',
        retryBanner: `Could not reach the review service (${String(error)}). Retry.`,
      })
      return
    }
    if (next.done) {
      this.update({
        phase: 'done',
        item: null,
        progress: next.progress,
        form: emptyForm(),
        validationErrors: [],
        retryBanner: null,
      })
      return
    }
    this.update({
      phase: 'rating',
      item: next.item ?? null,
      schema: next.schema,
      progress: next.progress,
      form: emptyForm(),
      validationErrors: [],
      retryBanner: null,
    })
  }

  setOverall(label: OverallLabel): void {
    this.update({
      form: { ...this.state.form, overall: label },
      validationErrors: [],
    })
  }

  setDimension(name: DimensionName, value: number): void {
    this.update({
      form: {
        ...this.state.form,
        dimensions: { ...this.state.form.dimensions, [name]: value },
      },
      validationErrors: [],
    })
  }

  /** Names of everything still missing from the form. */
  missingFields(): string[] {
    const missing: string[] = []
    if (this.state.form.overall === null) missing.push('overall verdict')
    const schema = this.state.schema
    const names: readonly DimensionName[] = schema ? schema.dimensions : DIMENSIONS
    for (const dim of names) {
      const value = this.state.form.dimensions[dim]
      if (value === undefined) missing.push(dim)
    }
    return missing
  }

  /**
   * Submit the current form. Incomplete forms never leave the client;
   * transport failures keep the form and raise the retry banner.
   */
  async submit(): Promise<'invalid' | 'retry' | 'advanced'> {
    if (this.state.phase !== 'rating' || !this.state.item || this.state.submitting) {
      return 'invalid'
    }
    const missing = this.missingFields()
    if (missing.length > 0) {
      this.update({ validationErrors: missing })
      return 'invalid'
    }
    this.update({ submitting: true, retryBanner: null })
    try {
      await this.api.submitRating(this.sessionId, {
        item_id: this.state.item.item_id,
        rater_id: this.raterId,
        overall: this.state.form.overall as OverallLabel,
        dimensions: this.state.form.dimensions as Record<DimensionName, number>,
      })
    } catch (error) {
      this.update({
        submitting: false,
        retryBanner: `Submission failed (${String(error)}). Your answers are kept; retry.`,
      })
      return 'retry'
    }
    this.update({ submitting: false })
    await this.advance()
    return 'advanced'
  }
}

// Framework-free DOM rendering over the flow controller. The view renders
// only the fields present in the rater-facing payload; there is nothing
// else to show by construction.

import { RatingFlow } from './flow'
import type { FlowState } from './flow'
import { DIMENSIONS, OVERALL_LABELS } from './types'
import type { DimensionName, OverallLabel } from './types'

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

export function renderApp(container: HTMLElement, flow: RatingFlow): void {
  const doc = container.ownerDocument
  flow.subscribe((state) => render(doc, container, flow, state))
  render(doc, container, flow, flow.getState())
}

function render(
  doc: Document,
  container: HTMLElement,
  flow: RatingFlow,
  state: FlowState,
): void {
  container.replaceChildren()

  const header = el(doc, 'header', 'progress-header')
  header.appendChild(
    el(doc, 'span', 'progress', `Rated ${state.progress.rated} of ${state.progress.total}`),
  )
  container.appendChild(header)

  if (state.retryBanner) {
    const banner = el(doc, 'div', 'retry-banner', state.retryBanner)
    const retry = el(doc, 'button', 'retry-button', 'Retry')
    retry.addEventListener('click', () => {
      if (state.phase === 'disconnected') void flow.advance()
      else void flow.submit()
    })
    banner.appendChild(retry)
    container.appendChild(banner)
  }

  if (state.phase === 'loading') {
    container.appendChild(el(doc, 'p', 'loading', 'Loading next item...'))
    return
  }
  if (state.phase === 'done') {
    // Completion shows progress only; aggregate results are never fetched
    // mid-session so raters cannot anchor on earlier outcomes.
    const complete = el(doc, 'section', 'completion')
    complete.appendChild(el(doc, 'h1', undefined, 'Session complete'))
    complete.appendChild(
      el(doc, 'p', undefined,
         `You rated ${state.progress.rated} of ${state.progress.total} items. Thank you.`),
    )
    container.appendChild(complete)
    return
  }
  if (state.phase === 'disconnected' || !state.item) return

  const item = state.item
  const main = el(doc, 'main', 'rating-card')

  const findings = el(doc, 'section', 'findings')
  findings.appendChild(el(doc, 'h2', undefined, 'Findings'))
  findings.appendChild(el(doc, 'p', 'findings-text', item.findings))
  main.appendChild(findings)

  const impression = el(doc, 'section', 'impression')
  impression.appendChild(el(doc, 'h2', undefined, 'Impression'))
  impression.appendChild(el(doc, 'p', 'impression-text', item.shown_impression))
  main.appendChild(impression)

  const verdict = el(doc, 'fieldset', 'overall')
  verdict.appendChild(el(doc, 'legend', undefined, 'Overall verdict'))
  const labels: readonly OverallLabel[] = state.schema
    ? state.schema.overall
    : OVERALL_LABELS
  for (const label of labels) {
    const button = el(doc, 'button', 'overall-choice', label)
    button.dataset.label = label
    if (state.form.overall === label) button.classList.add('selected')
    button.addEventListener('click', () => flow.setOverall(label))
    verdict.appendChild(button)
  }
  main.appendChild(verdict)

  const dims = el(doc, 'fieldset', 'dimensions')
  dims.appendChild(el(doc, 'legend', undefined, 'Quality dimensions (1-5)'))
  const names: readonly DimensionName[] = state.schema
    ? state.schema.dimensions
    : DIMENSIONS
  const lo = state.schema ? state.schema.scale_min : 1
  const hi = state.schema ? state.schema.scale_max : 5
  for (const name of names) {
    const row = el(doc, 'div', 'dimension-row')
    row.appendChild(el(doc, 'label', 'dimension-name', name.replace('_', '-')))
    for (let value = lo; value <= hi; value += 1) {
      const button = el(doc, 'button', 'scale-choice', String(value))
      button.dataset.dimension = name
      button.dataset.value = String(value)
      if (state.form.dimensions[name] === value) button.classList.add('selected')
      button.addEventListener('click', () => flow.setDimension(name, value))
      row.appendChild(button)
    }
    dims.appendChild(row)
  }
  main.appendChild(dims)

  if (state.validationErrors.length > 0) {
    main.appendChild(
      el(doc, 'p', 'validation-error',
         `Please complete: ${state.validationErrors.join(', ')}`),
    )
  }

  const submit = el(doc, 'button', 'submit-rating', 'Submit rating')
  submit.disabled = state.submitting
  submit.addEventListener('click', () => void flow.submit())
  main.appendChild(submit)

  container.appendChild(main)
}

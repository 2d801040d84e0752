// Entry point: ?session=<id>&rater=<token>&api=<base url, default origin>.

import { ReviewApi } from './api'
import { RatingFlow } from './flow'
import { renderApp } from './ui'

function requireParam(params: URLSearchParams, name: string): string {
  const value = params.get(name)
  if (!value) throw new Error(`missing required query parameter: ${name}`)
  return value
}

export function boot(root: HTMLElement, search: string, origin: string): RatingFlow {
  const params = new URLSearchParams(search)
  const api = new ReviewApi(params.get('api') ?? origin)
  const flow = new RatingFlow(api, requireParam(params, 'session'), requireParam(params, 'rater'))
  renderApp(root, flow)
  void flow.advance()
  return flow
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  boot(
    document.getElementById('app') as HTMLElement,
    window.location.search,
    window.location.origin,
  )
}

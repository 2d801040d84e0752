import { describe, expect, it } from 'vitest'

import { ApiError, ReviewApi } from '../src/api'
import { cannedFetch, jsonResponse, makeItems, SCHEMA } from './helpers'

describe('ReviewApi', () => {
  it('fetches the next item with an encoded rater id', async () => {
    const [item] = makeItems(1)
    const fetchImpl = cannedFetch([
      jsonResponse(200, {
        session_id: 's1',
        rater_id: 'dr lee',
        progress: { rated: 0, total: 3 },
        schema: SCHEMA,
        done: false,
        item,
      }),
    ])
    const api = new ReviewApi('http://svc:8321', fetchImpl)
    const next = await api.nextItem('s1', 'dr lee')
    expect(next.item?.item_id).toBe('item-0000')
    expect(fetchImpl.calls[0]?.url).toBe(
      'http://svc:8321/api/v1/sessions/s1/items/next?rater_id=dr%20lee',
    )
  })

  it('posts ratings as JSON', async () => {
    const fetchImpl = cannedFetch([
      jsonResponse(200, {
        status: 'accepted', item_id: 'item-0000', rater_id: 'r1', replaced: false,
      }),
    ])
    const api = new ReviewApi('http://svc:8321/', fetchImpl)
    const ack = await api.submitRating('s1', {
      item_id: 'item-0000',
      rater_id: 'r1',
      overall: 'positive',
      dimensions: {
        clearance: 4, completeness: 4, human_likeness: 3,
        conciseness: 5, coherence: 4,
      },
    })
    expect(ack.status).toBe('accepted')
    const call = fetchImpl.calls[0]
    expect(call?.method).toBe('POST')
    expect(call?.url).toBe('http://svc:8321/api/v1/sessions/s1/ratings')
    expect((call?.body as { overall: string }).overall).toBe('positive')
  })

  it('surfaces service error details', async () => {
    const fetchImpl = cannedFetch([
      jsonResponse(409, { detail: 'duplicate rating for item item-0000' }),
    ])
    const api = new ReviewApi('http://svc:8321', fetchImpl)
    await expect(
      api.submitRating('s1', {
        item_id: 'item-0000',
        rater_id: 'r1',
        overall: 'neutral',
        dimensions: {
          clearance: 3, completeness: 3, human_likeness: 3,
          conciseness: 3, coherence: 3,
        },
      }),
    ).rejects.toMatchObject({ status: 409 })
  })

  it('propagates transport failures untouched', async () => {
    const fetchImpl = cannedFetch([new TypeError('fetch failed')])
    const api = new ReviewApi('http://svc:8321', fetchImpl)
    await expect(api.progress('s1')).rejects.toBeInstanceOf(TypeError)
  })

  it('wraps non-JSON error bodies', async () => {
    const fetchImpl = cannedFetch([new Response('gateway exploded', { status: 502 })])
    const api = new ReviewApi('http://svc:8321', fetchImpl)
    await expect(api.progress('s1')).rejects.toBeInstanceOf(ApiError)
  })
})

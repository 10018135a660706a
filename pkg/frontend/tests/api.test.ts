import { afterEach, describe, expect, it, vi } from 'vitest'

import { Api, ApiError } from '../src/api'

const jsonResponse = (status: number, body: unknown) =>
  new Response(JSON.stringify(body), { status, headers: { 'Content-Type': 'application/json' } })

describe('api client', () => {
  afterEach(() => vi.unstubAllGlobals())

  it('posts step actions and returns the parsed body untouched', async () => {
    const body = { observation: [0.5, 0.5, 0, 0], reward: -12.25, done: false,
                   info: { new_cases: 12.25, new_deaths: 0, cumulative_cases: 12.25, day: 14 } }
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(200, body))
    vi.stubGlobal('fetch', fetchMock)
    const result = await Api.step('abc', 42)
    expect(result).toEqual(body)
    expect(fetchMock).toHaveBeenCalledWith('/v1/environments/abc/step', expect.objectContaining({
      method: 'POST',
      body: JSON.stringify({ action: 42 }),
    }))
  })

  it('maps service errors to ApiError with the machine-readable code', async () => {
    vi.stubGlobal('fetch', vi.fn().mockResolvedValue(
      jsonResponse(422, { error: { code: 'ActionOutOfSpace', message: 'level 150' } })))
    const err = await Api.step('abc', 150).catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.status).toBe(422)
    expect(err.code).toBe('ActionOutOfSpace')
    expect(err.message).toContain('150')
  })

  it('maps connection failures to a ConnectionFailed error', async () => {
    vi.stubGlobal('fetch', vi.fn().mockRejectedValue(new TypeError('ECONNREFUSED')))
    const err = await Api.describe('abc').catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err.code).toBe('ConnectionFailed')
  })
})

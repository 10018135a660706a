import type {
  ApiErrorBody,
  CreateResponse,
  ExperimentStatus,
  PolicyConfig,
  ResetResponse,
  SessionDescription,
  StepResponse,
} from './types.js'

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message)
  }
}

async function request<T>(method: string, path: string, body?: unknown): Promise<T> {
  let response: Response
  try {
    response = await fetch(path, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    })
  } catch (err) {
    throw new ApiError(0, 'ConnectionFailed', `cannot reach the API: ${String(err)}`)
  }
  const text = await response.text()
  const parsed = text ? JSON.parse(text) : null
  if (!response.ok) {
    const code = (parsed as ApiErrorBody | null)?.error?.code ?? 'HttpError'
    const message = (parsed as ApiErrorBody | null)?.error?.message ?? response.statusText
    throw new ApiError(response.status, code, message)
  }
  return parsed as T
}

export const Api = {
  createEnvironment: (envType: string, config: PolicyConfig) =>
    request<CreateResponse>('POST', '/v1/environments', { env_type: envType, config }),
  reset: (envId: string, seed: number) =>
    request<ResetResponse>('POST', `/v1/environments/${envId}/reset`, { seed }),
  step: (envId: string, action: number) =>
    request<StepResponse>('POST', `/v1/environments/${envId}/step`, { action }),
  describe: (envId: string) =>
    request<SessionDescription>('GET', `/v1/environments/${envId}`),
  deleteEnvironment: (envId: string) =>
    request<{ deleted: boolean }>('DELETE', `/v1/environments/${envId}`),
  startExperiment: (payload: Record<string, unknown>) =>
    request<{ run_id: string }>('POST', '/v1/experiments', payload),
  experimentStatus: (runId: string) =>
    request<ExperimentStatus>('GET', `/v1/experiments/${runId}`),
}

export type ApiClient = typeof Api

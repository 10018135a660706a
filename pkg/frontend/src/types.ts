// Wire types for the epigym HTTP API. The UI never computes epidemic or
// reward quantities; it renders these fields as received.

export type StepInfo = {
  new_cases: number
  new_deaths: number
  cumulative_cases: number
  day: number
}

export type StepResponse = {
  observation: number[]
  reward: number
  done: boolean
  info: StepInfo
}

export type ResetResponse = { observation: number[] }

export type CreateResponse = { env_id: string }

export type HistoryEntry = StepResponse & { action: number }

export type SessionDescription = {
  env_id: string
  env_type: string
  state: 'Fresh' | 'Running' | 'Done'
  step_index: number
  horizon: number
  seed: number
  created_at: string
  config: PolicyConfig
  config_digest: string
  history: HistoryEntry[]
}

export type LinkConfig = { base_beta: number; kappa: number }

export type InitConfig = { s: number; i: number; r: number; d: number; n: number }

export type CostFields = {
  daily_cost: number
  exponent: number
  value_per_life_year: number
  expected_life_years_lost_per_death: number
}

export type PolicyConfig = {
  model_kind: string
  link: LinkConfig
  init: InitConfig
  gamma: number
  mu: number
  horizon: number
  substeps_per_day: number
  level_range: [number, number]
  cost?: CostFields
}

export type ExperimentResult = {
  best_action: number[]
  best_reward: number
  history: unknown[]
  diagnostics: Record<string, unknown>
}

export type ExperimentStatus = {
  status: 'pending' | 'running' | 'done' | 'failed'
  result: ExperimentResult | null
  error: string | null
}

export type ApiErrorBody = { error: { code: string; message: string } }

// One finished episode the comparison panel can draw: everything comes from
// step echoes of a live session (user-built or an optimizer policy replayed
// through a session).
export type CompletedRun = {
  name: string
  envId: string
  envType: string
  configDigest: string
  seed: number
  levels: number[]
  steps: StepResponse[]
}

import type { CompletedRun, SessionDescription, StepResponse } from './types.js'

// Pure session-view bookkeeping. Every number stored here is an API echo.

export type SessionView = {
  envId: string
  envType: string
  configDigest: string
  seed: number
  horizon: number
  levels: number[]
  steps: StepResponse[]
  status: 'Running' | 'Done'
}

export function newSession(envId: string, envType: string, configDigest: string,
                           seed: number, horizon: number): SessionView {
  return { envId, envType, configDigest, seed, horizon, levels: [], steps: [], status: 'Running' }
}

export function applyEcho(view: SessionView, level: number, echo: StepResponse): SessionView {
  const levels = [...view.levels, level]
  const steps = [...view.steps, echo]
  return { ...view, levels, steps, status: echo.done ? 'Done' : 'Running' }
}

export function fromDescription(desc: SessionDescription): SessionView {
  return {
    envId: desc.env_id,
    envType: desc.env_type,
    configDigest: desc.config_digest,
    seed: desc.seed,
    horizon: desc.horizon,
    levels: desc.history.map((h) => h.action),
    steps: desc.history.map(({ action: _action, ...echo }) => echo),
    status: desc.state === 'Done' ? 'Done' : 'Running',
  }
}

// Sum of the API's per-step reward fields (no reward is computed client-side).
export function totalReward(steps: StepResponse[]): number {
  return steps.reduce((acc, s) => acc + s.reward, 0)
}

export function latestCumulativeCases(steps: StepResponse[]): number | null {
  return steps.length ? steps[steps.length - 1].info.cumulative_cases : null
}

export function asCompletedRun(view: SessionView, name: string): CompletedRun {
  return {
    name,
    envId: view.envId,
    envType: view.envType,
    configDigest: view.configDigest,
    seed: view.seed,
    levels: [...view.levels],
    steps: [...view.steps],
  }
}

export type CompareCheck = { ok: true } | { ok: false; reason: string }

// Comparisons are only meaningful between runs of the same configured
// environment and the same random realization.
export function canCompare(runs: CompletedRun[]): CompareCheck {
  if (runs.length < 2) {
    return { ok: false, reason: 'select at least two completed runs' }
  }
  const digest = runs[0].configDigest
  if (!runs.every((r) => r.configDigest === digest)) {
    return { ok: false, reason: 'config mismatch: runs use different environment configs' }
  }
  const seed = runs[0].seed
  if (!runs.every((r) => r.seed === seed)) {
    return { ok: false, reason: 'seed mismatch: runs were simulated under different seeds' }
  }
  return { ok: true }
}

import { Api, ApiClient, ApiError } from './api.js'
import { PALETTE, renderChart } from './chart.js'
import {
  SessionView,
  applyEcho,
  asCompletedRun,
  canCompare,
  fromDescription,
  latestCumulativeCases,
  newSession,
  totalReward,
} from './state.js'
import type { CompletedRun, CostFields, PolicyConfig } from './types.js'

const COMPARTMENTS = ['susceptible', 'infectious', 'recovered', 'dead']

type FormValues = {
  population: number
  initialInfected: number
  baseBeta: number
  kappa: number
  gamma: number
  mu: number
  horizon: number
  seed: number
}

const COST_DEFAULTS: CostFields = {
  daily_cost: 1000,
  exponent: 1,
  value_per_life_year: 50000,
  expected_life_years_lost_per_death: 10,
}

// Assembles the wire config; initial compartments are bookkeeping, not model math.
export function buildConfig(values: FormValues, cost?: CostFields): PolicyConfig {
  const config: PolicyConfig = {
    model_kind: 'sird_stringency',
    link: { base_beta: values.baseBeta, kappa: values.kappa },
    init: {
      s: values.population - values.initialInfected,
      i: values.initialInfected,
      r: 0,
      d: 0,
      n: values.population,
    },
    gamma: values.gamma,
    mu: values.mu,
    horizon: values.horizon,
    substeps_per_day: 4,
    level_range: [0, 99],
  }
  if (cost) config.cost = cost
  return config
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = ''): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value)
  if (text) node.textContent = text
  return node
}

// Numbers are rendered exactly as the API returned them; `source` names the
// response field so audits can trace every figure.
function apiNumber(value: number, source: string): HTMLElement {
  const span = el('span', { 'data-api': source }, String(value))
  return span
}

export class App {
  private session: SessionView | null = null
  private costView: SessionView | null = null
  private runs: CompletedRun[] = []
  private busy = false
  private pendingLevels: number[] = []
  private observations: number[][] = []

  constructor(private root: HTMLElement, private api: ApiClient = Api) {}

  async boot(): Promise<void> {
    this.renderShell()
    const match = /env=([A-Za-z0-9-]+)/.exec(window.location.hash)
    if (match) {
      try {
        await this.restore(match[1])
      } catch (err) {
        this.showError('session', err)
      }
    }
  }

  // ------------------------------------------------------------------ shell

  private renderShell(): void {
    this.root.textContent = ''
    this.root.appendChild(this.buildForm())
    this.root.appendChild(el('div', { id: 'session-error', class: 'error', role: 'alert' }))
    this.root.appendChild(el('section', { id: 'session-panel' }))
    const compare = el('section', { id: 'compare-panel' })
    compare.appendChild(el('h2', {}, 'Completed runs'))
    compare.appendChild(el('div', { id: 'runs-list' }))
    const compareButton = el('button', { id: 'compare-button', type: 'button' }, 'Compare selected')
    compareButton.addEventListener('click', () => this.comparePolicies())
    compare.appendChild(compareButton)
    compare.appendChild(el('div', { id: 'compare-refusal', class: 'error', role: 'alert' }))
    compare.appendChild(el('div', { id: 'compare-output' }))
    this.root.appendChild(compare)
  }

  private field(form: HTMLElement, id: string, label: string, value: string): void {
    const wrap = el('label', { class: 'field' }, `${label} `)
    wrap.appendChild(el('input', { id, value, name: id }))
    form.appendChild(wrap)
  }

  private buildForm(): HTMLElement {
    const form = el('form', { id: 'config-form' })
    form.appendChild(el('h2', {}, 'Scenario'))
    this.field(form, 'population', 'Population', '1000000')
    this.field(form, 'initial-infected', 'Initially infected', '100')
    this.field(form, 'base-beta', 'Base transmission rate', '0.4')
    this.field(form, 'kappa', 'Max transmission reduction', '0.9')
    this.field(form, 'gamma', 'Recovery rate', '0.1')
    this.field(form, 'mu', 'Death rate', '0.01')
    this.field(form, 'horizon', 'Steps (14 days each)', '12')
    this.field(form, 'seed', 'Seed', '0')
    const start = el('button', { id: 'start-session', type: 'submit' }, 'Start session')
    form.appendChild(start)
    const bo = el('button', { id: 'run-optimizer', type: 'button' }, 'Find policy (optimizer)')
    bo.addEventListener('click', () => void this.runOptimizer())
    form.appendChild(bo)
    form.addEventListener('submit', (event) => {
      event.preventDefault()
      void this.startSession()
    })
    return form
  }

  private formValues(): FormValues {
    const read = (id: string) => Number((this.root.querySelector(`#${id}`) as HTMLInputElement).value)
    return {
      population: read('population'),
      initialInfected: read('initial-infected'),
      baseBeta: read('base-beta'),
      kappa: read('kappa'),
      gamma: read('gamma'),
      mu: read('mu'),
      horizon: read('horizon'),
      seed: read('seed'),
    }
  }

  private showError(scope: 'session' | 'compare', err: unknown): void {
    const id = scope === 'session' ? '#session-error' : '#compare-refusal'
    const box = this.root.querySelector(id) as HTMLElement
    if (err instanceof ApiError) {
      box.textContent = `${err.code}: ${err.message}`
    } else if (err) {
      box.textContent = String(err)
    } else {
      box.textContent = ''
    }
  }

  // --------------------------------------------------------------- sessions

  async startSession(): Promise<void> {
    this.showError('session', null)
    const values = this.formValues()
    try {
      const created = await this.api.createEnvironment('policy', buildConfig(values))
      const reset = await this.api.reset(created.env_id, values.seed)
      const desc = await this.api.describe(created.env_id)
      this.session = newSession(created.env_id, 'policy', desc.config_digest,
                                values.seed, values.horizon)
      this.costView = null
      this.observations = [reset.observation]
      window.location.hash = `env=${created.env_id}`
      this.renderSession()
    } catch (err) {
      this.session = null
      this.renderSession()
      this.showError('session', err)
    }
  }

  async restore(envId: string): Promise<void> {
    const desc = await this.api.describe(envId)
    this.session = fromDescription(desc)
    this.observations = this.session.steps.map((s) => s.observation)
    this.renderSession()
  }

  // Clicks queue; at most one step request is in flight per session.
  async applyStep(): Promise<void> {
    if (!this.session || this.session.status === 'Done') return
    const slider = this.root.querySelector('#level-slider') as HTMLInputElement
    this.pendingLevels.push(Number(slider.value))
    if (this.busy) return
    this.busy = true
    this.showError('session', null)
    try {
      while (this.pendingLevels.length > 0 && this.session !== null
             && this.session.status !== 'Done') {
        const level = this.pendingLevels.shift() as number
        const echo = await this.api.step(this.session.envId, level)
        this.session = applyEcho(this.session, level, echo)
        this.observations.push(echo.observation)
        if (this.costView) await this.mirrorCostStep(level)
        if (this.session.status === 'Done') {
          this.runs.push(asCompletedRun(this.session, `user seed=${this.session.seed}`))
        }
        this.renderSession()
        this.renderRuns()
      }
    } catch (err) {
      this.showError('session', err)
    } finally {
      this.pendingLevels = []
      this.busy = false
    }
  }

  // Cost lens: a parallel cost-environment session under the same seed, so
  // the same dynamics get priced instead of counted.
  async toggleCostLens(): Promise<void> {
    if (!this.session) return
    if (this.costView) {
      this.costView = null
      this.renderSession()
      return
    }
    try {
      const values = this.formValues()
      const created = await this.api.createEnvironment('cost', buildConfig(values, COST_DEFAULTS))
      await this.api.reset(created.env_id, this.session.seed)
      const desc = await this.api.describe(created.env_id)
      let view = newSession(created.env_id, 'cost', desc.config_digest,
                            this.session.seed, this.session.horizon)
      for (const level of this.session.levels) {
        const echo = await this.api.step(created.env_id, level)
        view = applyEcho(view, level, echo)
      }
      this.costView = view
      this.renderSession()
    } catch (err) {
      this.showError('session', err)
    }
  }

  private async mirrorCostStep(level: number): Promise<void> {
    if (!this.costView) return
    const echo = await this.api.step(this.costView.envId, level)
    this.costView = applyEcho(this.costView, level, echo)
  }

  // ------------------------------------------------------------- optimizer

  async runOptimizer(): Promise<void> {
    this.showError('session', null)
    const values = this.formValues()
    const status = this.root.querySelector('#session-error') as HTMLElement
    try {
      const { run_id } = await this.api.startExperiment({
        kind: 'optimize_policy',
        env_type: 'policy',
        env_config: buildConfig(values),
        algorithm: 'bayes_opt',
        algorithm_config: { budget: 20 },
        seed: values.seed,
      })
      status.textContent = `optimizer running (${run_id})...`
      const result = await this.pollExperiment(run_id)
      status.textContent = ''
      await this.replayPolicy(result.best_action, values, `optimizer seed=${values.seed}`)
      this.renderRuns()
    } catch (err) {
      this.showError('session', err)
    }
  }

  private async pollExperiment(runId: string) {
    for (;;) {
      const body = await this.api.experimentStatus(runId)
      if (body.status === 'done' && body.result) return body.result
      if (body.status === 'failed') {
        throw new ApiError(500, 'ExperimentFailed', body.error ?? 'experiment failed')
      }
      await new Promise((resolve) => setTimeout(resolve, 150))
    }
  }

  // Replays a level sequence through a fresh session so its trajectory and
  // rewards come from the API like any user-built run.
  private async replayPolicy(levels: number[], values: FormValues, name: string): Promise<void> {
    const created = await this.api.createEnvironment('policy', buildConfig(values))
    await this.api.reset(created.env_id, values.seed)
    const desc = await this.api.describe(created.env_id)
    let view = newSession(created.env_id, 'policy', desc.config_digest,
                          values.seed, values.horizon)
    for (const level of levels) {
      view = applyEcho(view, level, await this.api.step(created.env_id, level))
    }
    this.runs.push(asCompletedRun(view, name))
  }

  // ------------------------------------------------------------- rendering

  private renderSession(): void {
    const panel = this.root.querySelector('#session-panel') as HTMLElement
    panel.textContent = ''
    if (!this.session) return
    const s = this.session

    const head = el('div', { class: 'session-head' })
    head.appendChild(el('h2', {}, `Session ${s.envId.slice(0, 8)}`))
    head.appendChild(el('span', { id: 'session-status' },
      `${s.status} — step ${s.steps.length} of ${s.horizon} — seed ${s.seed}`))
    panel.appendChild(head)

    const charts = el('div', { class: 'charts' })
    const compartmentBox = el('div', { id: 'compartment-chart' })
    const incidenceBox = el('div', { id: 'incidence-chart' })
    charts.appendChild(compartmentBox)
    charts.appendChild(incidenceBox)
    panel.appendChild(charts)
    renderChart(compartmentBox, COMPARTMENTS.map((label, dim) => ({
      label,
      color: PALETTE[dim],
      values: this.observations.map((obs) => obs[dim]),
    })), 'compartment fractions per step')
    renderChart(incidenceBox, [{
      label: 'new cases per step',
      color: PALETTE[1],
      values: s.steps.map((st) => st.info.new_cases),
    }], 'incidence per step')

    panel.appendChild(this.buildStepTable())
    panel.appendChild(this.buildReadouts())
    panel.appendChild(this.buildControls())
  }

  private buildStepTable(): HTMLElement {
    const s = this.session as SessionView
    const table = el('table', { id: 'step-table' })
    const header = el('tr')
    for (const title of ['step', 'level', 'reward', 'new cases', 'new deaths', 'cumulative cases']) {
      header.appendChild(el('th', {}, title))
    }
    table.appendChild(header)
    s.steps.forEach((echo, index) => {
      const row = el('tr', { 'data-step': String(index) })
      row.appendChild(el('td', {}, String(index + 1)))
      row.appendChild(el('td', { 'data-api': 'action' }, String(s.levels[index])))
      const cells: [number, string][] = [
        [echo.reward, 'reward'],
        [echo.info.new_cases, 'info.new_cases'],
        [echo.info.new_deaths, 'info.new_deaths'],
        [echo.info.cumulative_cases, 'info.cumulative_cases'],
      ]
      for (const [value, source] of cells) {
        const cell = el('td')
        cell.appendChild(apiNumber(value, source))
        row.appendChild(cell)
      }
      table.appendChild(row)
    })
    // remaining steps render as empty slots so the horizon is visible
    for (let index = s.steps.length; index < s.horizon; index++) {
      const row = el('tr', { 'data-step': String(index), class: 'pending' })
      row.appendChild(el('td', {}, String(index + 1)))
      for (let c = 0; c < 5; c++) row.appendChild(el('td', {}, '·'))
      table.appendChild(row)
    }
    return table
  }

  private buildReadouts(): HTMLElement {
    const s = this.session as SessionView
    const box = el('div', { id: 'readouts' })
    const cumulative = latestCumulativeCases(s.steps)
    const cumulativeBox = el('div', { id: 'cumulative-cases' }, 'cumulative cases: ')
    cumulativeBox.appendChild(cumulative === null
      ? el('span', {}, '0 steps taken')
      : apiNumber(cumulative, 'info.cumulative_cases'))
    box.appendChild(cumulativeBox)
    const totalBox = el('div', { id: 'total-reward' }, 'total reward (sum of step rewards): ')
    totalBox.appendChild(el('span', { 'data-api': 'sum(reward)' }, String(totalReward(s.steps))))
    box.appendChild(totalBox)
    if (this.costView) {
      const costBox = el('div', { id: 'cost-readout' }, 'cost-lens total reward: ')
      costBox.appendChild(el('span', { 'data-api': 'sum(reward)' },
        String(totalReward(this.costView.steps))))
      box.appendChild(costBox)
    }
    return box
  }

  private buildControls(): HTMLElement {
    const s = this.session as SessionView
    const controls = el('div', { id: 'controls' })
    const slider = el('input', {
      id: 'level-slider', type: 'range', min: '0', max: '99', step: '1', value: '50',
    })
    const label = el('span', { id: 'level-value' }, slider.value)
    slider.addEventListener('input', () => { label.textContent = slider.value })
    const apply = el('button', { id: 'apply-step', type: 'button' }, 'Apply step')
    if (s.status === 'Done') {
      apply.setAttribute('disabled', 'disabled')
      slider.setAttribute('disabled', 'disabled')
    }
    apply.addEventListener('click', () => void this.applyStep())
    const costToggle = el('button', { id: 'cost-lens', type: 'button' },
      this.costView ? 'Hide cost lens' : 'View as cost')
    costToggle.addEventListener('click', () => void this.toggleCostLens())
    controls.appendChild(el('label', { for: 'level-slider' }, 'Stringency level '))
    controls.appendChild(slider)
    controls.appendChild(label)
    controls.appendChild(apply)
    controls.appendChild(costToggle)
    return controls
  }

  private renderRuns(): void {
    const list = this.root.querySelector('#runs-list') as HTMLElement
    list.textContent = ''
    this.runs.forEach((run, index) => {
      const row = el('label', { class: 'run-row', 'data-run': String(index) })
      row.appendChild(el('input', { type: 'checkbox', 'data-run-check': String(index) }))
      const total = totalReward(run.steps)
      row.appendChild(el('span', {},
        ` ${run.name} [${run.envType}] seed=${run.seed} config=${run.configDigest.slice(0, 8)} total=`))
      row.appendChild(el('span', { 'data-api': 'sum(reward)' }, String(total)))
      list.appendChild(row)
    })
  }

  // ------------------------------------------------------------ comparison

  selectedRuns(): CompletedRun[] {
    const boxes = this.root.querySelectorAll('input[data-run-check]')
    const picked: CompletedRun[] = []
    boxes.forEach((box) => {
      const input = box as HTMLInputElement
      if (input.checked) picked.push(this.runs[Number(input.dataset.runCheck)])
    })
    return picked
  }

  comparePolicies(): void {
    const refusal = this.root.querySelector('#compare-refusal') as HTMLElement
    const output = this.root.querySelector('#compare-output') as HTMLElement
    refusal.textContent = ''
    output.textContent = ''
    const picked = this.selectedRuns()
    const check = canCompare(picked)
    if (!check.ok) {
      refusal.textContent = `comparison refused: ${check.reason}`
      return
    }
    const chartBox = el('div', { id: 'compare-chart' })
    output.appendChild(chartBox)
    renderChart(chartBox, picked.map((run, index) => ({
      label: run.name,
      color: PALETTE[index % PALETTE.length],
      values: run.steps.map((s) => s.info.new_cases),
    })), 'incidence per step, compared')

    const table = el('table', { id: 'compare-table' })
    const header = el('tr')
    header.appendChild(el('th', {}, 'policy'))
    header.appendChild(el('th', {}, 'levels'))
    header.appendChild(el('th', {}, 'total reward'))
    header.appendChild(el('th', {}, 'final cumulative cases'))
    table.appendChild(header)
    for (const run of picked) {
      const row = el('tr')
      row.appendChild(el('td', {}, run.name))
      row.appendChild(el('td', {}, run.levels.join(',')))
      const totalCell = el('td')
      totalCell.appendChild(el('span', { 'data-api': 'sum(reward)' },
        String(totalReward(run.steps))))
      row.appendChild(totalCell)
      const finalCell = el('td')
      const final = latestCumulativeCases(run.steps)
      finalCell.appendChild(apiNumber(final ?? 0, 'info.cumulative_cases'))
      row.appendChild(finalCell)
      table.appendChild(row)
    }
    output.appendChild(table)
  }
}

export function mountApp(root: HTMLElement, api: ApiClient = Api): App {
  return new App(root, api)
}

// Hand-rolled SVG line charts; geometry only, values are rendered elsewhere.

const SVG_NS = 'http://www.w3.org/2000/svg'
const WIDTH = 560
const HEIGHT = 220
const PAD = 28

export type Series = { label: string; color: string; values: number[] }

function scale(values: number[], lo: number, hi: number, outLo: number, outHi: number): number[] {
  const span = hi - lo || 1
  return values.map((v) => outLo + ((v - lo) / span) * (outHi - outLo))
}

export function renderChart(container: HTMLElement, series: Series[], title: string): void {
  container.textContent = ''
  const svg = document.createElementNS(SVG_NS, 'svg')
  svg.setAttribute('viewBox', `0 0 ${WIDTH} ${HEIGHT}`)
  svg.setAttribute('class', 'chart')
  svg.setAttribute('role', 'img')
  svg.setAttribute('aria-label', title)

  const all = series.flatMap((s) => s.values)
  const lo = Math.min(0, ...all)
  const hi = Math.max(1e-12, ...all)
  const maxLen = Math.max(2, ...series.map((s) => s.values.length))

  for (const s of series) {
    if (!s.values.length) continue
    const xs = scale(s.values.map((_v, i) => i), 0, maxLen - 1, PAD, WIDTH - PAD)
    const ys = scale(s.values, lo, hi, HEIGHT - PAD, PAD)
    const line = document.createElementNS(SVG_NS, 'polyline')
    line.setAttribute('points', xs.map((x, i) => `${x},${ys[i]}`).join(' '))
    line.setAttribute('fill', 'none')
    line.setAttribute('stroke', s.color)
    line.setAttribute('stroke-width', '2')
    svg.appendChild(line)
  }

  const legend = document.createElement('div')
  legend.className = 'legend'
  for (const s of series) {
    const item = document.createElement('span')
    item.textContent = `— ${s.label}`
    item.style.color = s.color
    legend.appendChild(item)
  }
  container.appendChild(svg)
  container.appendChild(legend)
}

export const PALETTE = ['#2563eb', '#dc2626', '#059669', '#9333ea', '#d97706', '#0891b2']

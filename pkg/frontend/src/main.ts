import { PlannerApi } from './api.js';
import { PlannerApp } from './app.js';
import { legendFor } from './legend.js';
import { MapProjection } from './projection.js';
import { hitTestStation, renderLayer } from './render.js';
import type { LayerKind, StationMode } from './types.js';

const params = new URLSearchParams(window.location.search);
const apiBase = params.get('api') ?? 'http://localhost:8000';

const canvas = document.getElementById('map') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;
const legendEl = document.getElementById('legend')!;
const stationsEl = document.getElementById('stations')!;
const statusEl = document.getElementById('status')!;
const errorEl = document.getElementById('error')!;
const summaryEl = document.getElementById('summary')!;
const relocationEl = document.getElementById('relocation')!;

const api = new PlannerApi(apiBase);
let proj: MapProjection | null = null;
let drag: { index: number; lon: number; lat: number } | null = null;

const app = new PlannerApp(api, {
  onLayers: () => {
    draw();
    renderSidebar();
  },
  onBusy: (busy, job) => {
    statusEl.textContent = busy
      ? job
        ? `working… ${(job.progress * 100).toFixed(0)}%`
        : 'working…'
      : 'ready';
    statusEl.classList.toggle('busy', busy);
  },
  onError: (message) => {
    errorEl.textContent = message;
    errorEl.classList.add('visible');
    window.setTimeout(() => errorEl.classList.remove('visible'), 6000);
  },
  onRelocation: (result) => {
    const delta = result.afterMaxMinutes - result.beforeMaxMinutes;
    const verdict = delta < 0 ? 'improves coverage' : delta > 0 ? 'worsens coverage' : 'no change';
    relocationEl.innerHTML =
      `<b>max response:</b> ${result.beforeMaxMinutes.toFixed(1)} min → ` +
      `${result.afterMaxMinutes.toFixed(1)} min (${verdict})`;
  },
});

function draw(): void {
  if (!proj || !app.current) return;
  renderLayer(
    ctx,
    proj,
    app.layer,
    app.landmask,
    app.current.bands,
    app.current.diff,
    app.summary.stations,
    {
      selected: app.selectedStation ?? undefined,
      dragging: drag ?? undefined,
      closed: app.state.open.map((o) => !o),
    },
    canvas.width,
    canvas.height,
  );
  renderLegend();
}

function renderLegend(): void {
  const entries = legendFor(
    app.layer,
    app.summary.stations.map((s) => s.name),
  );
  legendEl.innerHTML = entries
    .map(
      (e) =>
        `<span class="legend-entry"><span class="swatch" style="background:${e.color}"></span>${e.label}</span>`,
    )
    .join('');
}

function renderSidebar(): void {
  const summary = app.current?.summary;
  if (summary) {
    const compliance = summary.compliance;
    summaryEl.innerHTML =
      `<div>max response: <b>${summary.max_response_minutes.toFixed(1)} min</b></div>` +
      (compliance
        ? `<div>critical violations: <b>${compliance.violation_count}</b>` +
          (compliance.violation_count
            ? ` (max excess ${compliance.max_excess_minutes.toFixed(1)} min)`
            : '') +
          `</div>`
        : '');
  }
  stationsEl.innerHTML = '';
  for (const s of app.summary.stations) {
    const row = document.createElement('div');
    row.className = 'station-row' + (app.selectedStation === s.index ? ' selected' : '');

    const check = document.createElement('input');
    check.type = 'checkbox';
    check.checked = app.state.open[s.index];
    check.title = 'open/closed';
    check.addEventListener('change', () => void app.toggleStation(s.index));

    const name = document.createElement('span');
    name.className = 'station-name';
    name.textContent = s.name;
    name.addEventListener('click', () => {
      app.selectedStation = app.selectedStation === s.index ? null : s.index;
      draw();
      renderSidebar();
    });

    const mode = document.createElement('select');
    for (const value of ['full_time', 'part_time'] as StationMode[]) {
      const opt = document.createElement('option');
      opt.value = value;
      opt.textContent = value === 'full_time' ? 'full-time' : 'part-time';
      opt.selected = app.state.mode[s.index] === value;
      mode.appendChild(opt);
    }
    mode.addEventListener('change', () => void app.setMode(s.index, mode.value as StationMode));

    row.append(check, name, mode);
    stationsEl.appendChild(row);
  }
}

function wireControls(): void {
  const layerSelect = document.getElementById('layer') as HTMLSelectElement;
  layerSelect.addEventListener('change', () => app.setLayer(layerSelect.value as LayerKind));

  const speed = document.getElementById('speed-factor') as HTMLInputElement;
  const speedOut = document.getElementById('speed-factor-value')!;
  speed.addEventListener('input', () => (speedOut.textContent = `×${speed.value}`));
  speed.addEventListener('change', () => void app.setSpeedFactor(parseFloat(speed.value)));

  for (const m of ['full_time', 'part_time'] as StationMode[]) {
    const input = document.getElementById(`delay-${m}`) as HTMLInputElement;
    input.value = String(app.delayMinutes(m));
    input.addEventListener('change', () => {
      const v = input.value.trim();
      void app.setDelay(m, v === '' ? null : Math.max(0, parseFloat(v)));
    });
  }

  (document.getElementById('reset') as HTMLButtonElement).addEventListener('click', () => {
    relocationEl.textContent = '';
    void app.resetToBaseline();
  });
}

function canvasPos(ev: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) / rect.width) * canvas.width,
    ((ev.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

function wireDrag(): void {
  canvas.addEventListener('mousedown', (ev) => {
    if (!proj) return;
    const [x, y] = canvasPos(ev);
    const hit = hitTestStation(proj, app.summary.stations, x, y);
    if (hit !== null) {
      const [lon, lat] = proj.toLonLat(x, y);
      drag = { index: hit, lon, lat };
      app.selectedStation = hit;
      renderSidebar();
    }
  });
  canvas.addEventListener('mousemove', (ev) => {
    if (!drag || !proj) return;
    const [x, y] = canvasPos(ev);
    const [lon, lat] = proj.toLonLat(x, y);
    drag = { ...drag, lon, lat };
    draw();
  });
  canvas.addEventListener('mouseup', () => {
    if (!drag) return;
    const { index, lon, lat } = drag;
    drag = null;
    draw();
    void app.relocateStation(index, lon, lat);
  });
  canvas.addEventListener('mouseleave', () => {
    drag = null;
    draw();
  });
}

async function start(): Promise<void> {
  statusEl.textContent = 'loading…';
  try {
    await app.init();
  } catch (err) {
    errorEl.textContent = `cannot reach the service at ${apiBase}: ${String(err)}`;
    errorEl.classList.add('visible');
    return;
  }
  proj = new MapProjection(app.summary.bbox, canvas.width, canvas.height);
  wireControls();
  wireDrag();
  draw();
  renderSidebar();
}

void start();

import type { PlannerApi } from './api.js';
import { ApiError } from './api.js';
import { baselineState, configKey, toConfig, UiScenarioState } from './config.js';
import type {
  BandProps,
  DiffProps,
  FeatureCollection,
  GraphSummary,
  JobHandle,
  LandMask,
  LayerKind,
  ScenarioConfig,
  ScenarioSummary,
  StationMode,
} from './types.js';

export interface LayerSet {
  bands: FeatureCollection<BandProps>;
  diff: FeatureCollection<DiffProps>;
  summary: ScenarioSummary;
}

export interface RelocationResult {
  station: number;
  beforeMaxMinutes: number; // from the baseline summary (API)
  afterMaxMinutes: number; // from the relocation summary (API)
}

export interface AppEvents {
  onLayers?: (layers: LayerSet, state: UiScenarioState) => void;
  onBusy?: (busy: boolean, job?: JobHandle) => void;
  onError?: (message: string) => void;
  onRelocation?: (result: RelocationResult) => void;
}

/** Planner state machine. Holds the editable scenario, fetches every
 * number from the API (the client never computes response times), and
 * caches result layers by config so revisiting a config reuses an
 * identical payload. */
export class PlannerApp {
  state!: UiScenarioState;
  summary!: GraphSummary;
  landmask: LandMask | null = null;
  layer: LayerKind = 'bands';
  selectedStation: number | null = null;
  current: LayerSet | null = null;
  lastRelocation: RelocationResult | null = null;

  private baselineKey = '';
  private layerCache = new Map<string, LayerSet>();
  private relocationInFlight = false;

  constructor(
    private readonly api: PlannerApi,
    private readonly events: AppEvents = {},
  ) {}

  async init(): Promise<void> {
    this.summary = await this.api.graphSummary();
    const base = await this.api.baseline();
    this.state = baselineState(this.summary.stations);
    this.baselineKey = configKey(toConfig(this.state));
    // Sanity: the server's baseline must match what the stations imply.
    if (configKey(base.config) !== this.baselineKey) {
      this.state = { ...this.state, ...fromServer(base.config) };
      this.baselineKey = configKey(toConfig(this.state));
    }
    try {
      this.landmask = await this.api.landmask();
    } catch {
      this.landmask = null;
    }
    await this.refresh();
  }

  baselineLayers(): LayerSet | undefined {
    return this.layerCache.get(this.baselineKey);
  }

  config(): ScenarioConfig {
    return toConfig(this.state);
  }

  isBaseline(): boolean {
    return configKey(this.config()) === this.baselineKey;
  }

  openCount(): number {
    return this.state.open.filter(Boolean).length;
  }

  async refresh(): Promise<LayerSet | null> {
    const cfg = this.config();
    const key = configKey(cfg);
    const cached = this.layerCache.get(key);
    if (cached) {
      this.current = cached;
      this.events.onLayers?.(cached, this.state);
      return cached;
    }
    this.events.onBusy?.(true);
    try {
      const handle = await this.api.evaluate(cfg);
      const done = await this.api.waitForJob(handle, (job) => this.events.onBusy?.(true, job));
      const layers: LayerSet = {
        bands: await this.api.bands(done.id),
        diff: await this.api.diff(done.id),
        summary: await this.api.summary(done.id),
      };
      this.layerCache.set(key, layers);
      this.current = layers;
      this.events.onLayers?.(layers, this.state);
      return layers;
    } catch (err) {
      this.events.onError?.(errorMessage(err));
      return null; // stale layer stays visible
    } finally {
      this.events.onBusy?.(false);
    }
  }

  async toggleStation(index: number): Promise<void> {
    if (this.state.open[index] && this.openCount() === 1) {
      this.events.onError?.('cannot close the last open station');
      return;
    }
    this.state.open = this.state.open.map((o, i) => (i === index ? !o : o));
    await this.refresh();
  }

  async setMode(index: number, mode: StationMode): Promise<void> {
    this.state.mode = this.state.mode.map((m, i) => (i === index ? mode : m));
    await this.refresh();
  }

  async setDelay(mode: StationMode, minutes: number | null): Promise<void> {
    const override = { ...this.state.delayOverride };
    if (minutes === null) {
      delete override[mode];
    } else {
      override[mode] = minutes;
    }
    this.state.delayOverride = override;
    await this.refresh();
  }

  async setSpeedFactor(factor: number): Promise<void> {
    this.state.speedFactor = factor;
    await this.refresh();
  }

  setLayer(layer: LayerKind): void {
    this.layer = layer;
    if (this.current) {
      this.events.onLayers?.(this.current, this.state);
    }
  }

  delayMinutes(mode: StationMode): number {
    const fallback = mode === 'full_time' ? 0 : 5;
    return this.state.delayOverride[mode] ?? fallback;
  }

  /** Drag-drop relocation: one in-flight job at a time, explicit progress,
   * before/after max response both taken from API summaries. */
  async relocateStation(index: number, lon: number, lat: number): Promise<RelocationResult | null> {
    if (this.relocationInFlight) {
      this.events.onError?.('a relocation is already running');
      return null;
    }
    const baseline = this.layerCache.get(this.baselineKey);
    if (!baseline) {
      this.events.onError?.('baseline not loaded yet');
      return null;
    }
    this.relocationInFlight = true;
    this.events.onBusy?.(true);
    try {
      const handle = await this.api.relocate(index, lon, lat);
      const done = await this.api.waitForJob(handle, (job) => this.events.onBusy?.(true, job));
      const layers: LayerSet = {
        bands: await this.api.bands(done.id),
        diff: await this.api.diff(done.id),
        summary: await this.api.summary(done.id),
      };
      this.state.relocations = {
        ...this.state.relocations,
        [String(index)]: { lon, lat },
      };
      this.layerCache.set(configKey(this.config()), layers);
      this.current = layers;
      const result: RelocationResult = {
        station: index,
        beforeMaxMinutes: baseline.summary.max_response_minutes,
        afterMaxMinutes: layers.summary.max_response_minutes,
      };
      this.lastRelocation = result;
      this.events.onLayers?.(layers, this.state);
      this.events.onRelocation?.(result);
      return result;
    } catch (err) {
      this.events.onError?.(errorMessage(err));
      return null;
    } finally {
      this.relocationInFlight = false;
      this.events.onBusy?.(false);
    }
  }

  async clearRelocations(): Promise<void> {
    this.state.relocations = {};
    await this.refresh();
  }

  /** Back to the baseline scenario; served from the layer cache, so the
   * restored layer payload is the exact baseline one. */
  async resetToBaseline(): Promise<void> {
    this.state = baselineState(this.summary.stations);
    this.lastRelocation = null;
    await this.refresh();
  }
}

function fromServer(cfg: ScenarioConfig): Partial<UiScenarioState> {
  return {
    open: [...cfg.open],
    mode: [...cfg.mode],
    delayOverride: { ...cfg.callout_delay_override },
    speedFactor: cfg.speed_factor,
    timeScale: cfg.time_scale,
    relocations: { ...cfg.relocations },
  };
}

function errorMessage(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 422 ? `cannot place station there: ${err.detail}` : err.detail;
  }
  return err instanceof Error ? err.message : String(err);
}

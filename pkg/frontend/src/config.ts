import type { ScenarioConfig, StationInfo, StationMode } from './types.js';

/** UI-side scenario state; always serialisable to a valid ScenarioConfig. */
export interface UiScenarioState {
  open: boolean[];
  mode: StationMode[];
  delayOverride: Partial<Record<StationMode, number>>;
  speedFactor: number;
  timeScale: number;
  relocations: Record<string, { lon: number; lat: number }>;
}

export function baselineState(stations: StationInfo[]): UiScenarioState {
  return {
    open: stations.map(() => true),
    mode: stations.map((s) => s.mode),
    delayOverride: {},
    speedFactor: 1.0,
    timeScale: 1.0,
    relocations: {},
  };
}

export function toConfig(state: UiScenarioState): ScenarioConfig {
  return {
    open: [...state.open],
    mode: [...state.mode],
    callout_delay_override: { ...state.delayOverride },
    speed_factor: state.speedFactor,
    time_scale: state.timeScale,
    relocations: { ...state.relocations },
  };
}

export function fromConfig(cfg: ScenarioConfig): UiScenarioState {
  return {
    open: [...cfg.open],
    mode: [...cfg.mode],
    delayOverride: { ...cfg.callout_delay_override },
    speedFactor: cfg.speed_factor,
    timeScale: cfg.time_scale,
    relocations: { ...cfg.relocations },
  };
}

/** Stable string key for a config (sorted keys at every level), used for
 * client-side layer caching. */
export function configKey(cfg: ScenarioConfig): string {
  return stableStringify(cfg);
}

function stableStringify(value: unknown): string {
  if (value === null || typeof value !== 'object') {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(',')}]`;
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  return `{${keys.map((k) => `${JSON.stringify(k)}:${stableStringify(obj[k])}`).join(',')}}`;
}

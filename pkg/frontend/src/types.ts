export type StationMode = 'full_time' | 'part_time';

export interface ScenarioConfig {
  open: boolean[];
  mode: StationMode[];
  callout_delay_override: Partial<Record<StationMode, number>>;
  speed_factor: number;
  time_scale: number;
  relocations: Record<string, { lon: number; lat: number }>;
}

export interface StationInfo {
  index: number;
  name: string;
  lon: number;
  lat: number;
  mode: StationMode;
  node: number;
}

export interface GraphSummary {
  node_count: number;
  edge_count: number;
  bbox: [number, number, number, number]; // min_lon, min_lat, max_lon, max_lat
  stations: StationInfo[];
  brown_node_count: number;
}

export interface JobHandle {
  id: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  progress: number;
  error: string | null;
}

export interface PointFeature<P> {
  type: 'Feature';
  geometry: { type: 'Point'; coordinates: [number, number] };
  properties: P;
}

export type BandName = 'green' | 'amber' | 'red' | 'blue' | 'brown' | 'black';
export type DiffName = 'unchanged' | 'improved' | 'worsened' | 'newly_unreachable' | 'newly_reachable';

export interface BandProps {
  node_id: number;
  band: BandName;
  seconds: number | null;
  station: number;
}

export interface DiffProps {
  node_id: number;
  diff: DiffName;
}

export interface FeatureCollection<P> {
  type: 'FeatureCollection';
  properties: { scenario: string; counts: Record<string, number> };
  features: PointFeature<P>[];
}

export interface ScenarioSummary {
  scenario: string;
  config: ScenarioConfig;
  max_response_minutes: number;
  band_counts: Record<BandName, number>;
  unreachable_count: number;
  compliance?: {
    violation_count: number;
    max_excess_minutes: number;
    unmatched: string[];
    violations: { name: string; response_minutes: number | null }[];
  };
}

export interface LandMask {
  polygons: [number, number][][];
  warnings: string[];
}

export type LayerKind = 'bands' | 'areas' | 'diff';

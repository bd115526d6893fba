import type { BandName, DiffName, LayerKind } from './types.js';

export const BAND_COLORS: Record<BandName, string> = {
  green: '#1a9641',
  amber: '#ffbf00',
  red: '#d7191c',
  blue: '#2c7bb6',
  brown: '#8c510a',
  black: '#000000',
};

export const BAND_LABELS: Record<BandName, string> = {
  green: '< 10 min',
  amber: '10–20 min',
  red: '20–30 min',
  blue: '> 30 min',
  brown: 'always unreachable',
  black: 'unreachable here',
};

export const DIFF_COLORS: Record<DiffName, string> = {
  unchanged: '#bdbdbd',
  improved: '#1a9641',
  worsened: '#d7191c',
  newly_unreachable: '#000000',
  newly_reachable: '#2c7bb6',
};

// Station areas cycle through a qualitative palette by station index.
export const AREA_PALETTE = [
  '#1b9e77', '#d95f02', '#7570b3', '#e7298a', '#66a61e', '#e6ab02',
  '#a6761d', '#666666', '#1f78b4', '#b2df8a', '#fb9a99', '#cab2d6',
];

export interface LegendEntry {
  label: string;
  color: string;
}

export function legendFor(layer: LayerKind, stationNames: string[] = []): LegendEntry[] {
  if (layer === 'bands') {
    return (Object.keys(BAND_COLORS) as BandName[]).map((band) => ({
      label: BAND_LABELS[band],
      color: BAND_COLORS[band],
    }));
  }
  if (layer === 'diff') {
    return (Object.keys(DIFF_COLORS) as DiffName[]).map((diff) => ({
      label: diff.replace('_', ' '),
      color: DIFF_COLORS[diff],
    }));
  }
  return stationNames.map((name, i) => ({
    label: name,
    color: AREA_PALETTE[i % AREA_PALETTE.length],
  }));
}

export function areaColor(stationIndex: number): string {
  if (stationIndex < 0) {
    return '#000000';
  }
  return AREA_PALETTE[stationIndex % AREA_PALETTE.length];
}

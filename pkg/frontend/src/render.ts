import { areaColor, BAND_COLORS, DIFF_COLORS } from './legend.js';
import type { MapProjection } from './projection.js';
import type {
  BandProps,
  DiffProps,
  FeatureCollection,
  LandMask,
  LayerKind,
  StationInfo,
} from './types.js';

/** The subset of CanvasRenderingContext2D the renderer needs; tests pass a
 * recording stub instead of a real canvas. */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
}

export const LAND_COLOR = '#d9d9d9';
export const SEA_COLOR = '#eef6fb';
const NODE_SIZE = 3;

export function clearMap(ctx: Ctx2D, width: number, height: number): void {
  ctx.fillStyle = SEA_COLOR;
  ctx.fillRect(0, 0, width, height);
}

export function drawLandMask(ctx: Ctx2D, proj: MapProjection, mask: LandMask): void {
  ctx.fillStyle = LAND_COLOR;
  for (const ring of mask.polygons) {
    if (ring.length < 3) continue;
    ctx.beginPath();
    const [x0, y0] = proj.toPx(ring[0][0], ring[0][1]);
    ctx.moveTo(x0, y0);
    for (let i = 1; i < ring.length; i++) {
      const [x, y] = proj.toPx(ring[i][0], ring[i][1]);
      ctx.lineTo(x, y);
    }
    ctx.closePath();
    ctx.fill();
  }
}

function drawNode(ctx: Ctx2D, proj: MapProjection, lon: number, lat: number, color: string): void {
  const [x, y] = proj.toPx(lon, lat);
  ctx.fillStyle = color;
  ctx.fillRect(x - NODE_SIZE / 2, y - NODE_SIZE / 2, NODE_SIZE, NODE_SIZE);
}

export function drawBandLayer(
  ctx: Ctx2D,
  proj: MapProjection,
  bands: FeatureCollection<BandProps>,
): void {
  for (const f of bands.features) {
    const [lon, lat] = f.geometry.coordinates;
    drawNode(ctx, proj, lon, lat, BAND_COLORS[f.properties.band]);
  }
}

export function drawAreaLayer(
  ctx: Ctx2D,
  proj: MapProjection,
  bands: FeatureCollection<BandProps>,
): void {
  for (const f of bands.features) {
    const [lon, lat] = f.geometry.coordinates;
    drawNode(ctx, proj, lon, lat, areaColor(f.properties.station));
  }
}

export function drawDiffLayer(
  ctx: Ctx2D,
  proj: MapProjection,
  diff: FeatureCollection<DiffProps>,
): void {
  for (const f of diff.features) {
    const [lon, lat] = f.geometry.coordinates;
    drawNode(ctx, proj, lon, lat, DIFF_COLORS[f.properties.diff]);
  }
}

export interface StationMarkerState {
  selected?: number;
  dragging?: { index: number; lon: number; lat: number };
  closed?: boolean[];
}

export function drawStations(
  ctx: Ctx2D,
  proj: MapProjection,
  stations: StationInfo[],
  state: StationMarkerState = {},
): void {
  const size = 11;
  for (const s of stations) {
    const dragging = state.dragging?.index === s.index ? state.dragging : undefined;
    const lon = dragging ? dragging.lon : s.lon;
    const lat = dragging ? dragging.lat : s.lat;
    const [x, y] = proj.toPx(lon, lat);
    const closed = state.closed?.[s.index] ?? false;
    ctx.fillStyle = closed ? '#ffffff' : '#e31a1c';
    ctx.fillRect(x - size / 2, y - size / 2, size, size);
    ctx.lineWidth = s.index === state.selected ? 3 : 1;
    ctx.strokeStyle = '#000000';
    ctx.strokeRect(x - size / 2, y - size / 2, size, size);
  }
}

export function renderLayer(
  ctx: Ctx2D,
  proj: MapProjection,
  layer: LayerKind,
  mask: LandMask | null,
  bands: FeatureCollection<BandProps> | null,
  diff: FeatureCollection<DiffProps> | null,
  stations: StationInfo[],
  markers: StationMarkerState,
  width: number,
  height: number,
): void {
  clearMap(ctx, width, height);
  if (mask) drawLandMask(ctx, proj, mask);
  if (layer === 'bands' && bands) drawBandLayer(ctx, proj, bands);
  else if (layer === 'areas' && bands) drawAreaLayer(ctx, proj, bands);
  else if (layer === 'diff' && diff) drawDiffLayer(ctx, proj, diff);
  drawStations(ctx, proj, stations, markers);
}

/** Station index whose marker covers the pixel, or null. */
export function hitTestStation(
  proj: MapProjection,
  stations: StationInfo[],
  x: number,
  y: number,
  radius = 8,
): number | null {
  let best: number | null = null;
  let bestDist = radius;
  for (const s of stations) {
    const [sx, sy] = proj.toPx(s.lon, s.lat);
    const d = Math.hypot(sx - x, sy - y);
    if (d <= bestDist) {
      best = s.index;
      bestDist = d;
    }
  }
  return best;
}

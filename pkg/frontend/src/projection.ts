/** Linear lon/lat to canvas-pixel mapping with latitude aspect correction.
 * Purely a display projection; every geographic number shown to the user
 * comes from the API, never from here. */
export class MapProjection {
  private readonly lonMin: number;
  private readonly latMin: number;
  private readonly lonMax: number;
  private readonly latMax: number;
  private readonly scale: number;
  private readonly aspect: number;
  private readonly offsetX: number;
  private readonly offsetY: number;

  constructor(
    bbox: [number, number, number, number],
    readonly width: number,
    readonly height: number,
    padding = 12,
  ) {
    const [lonMin, latMin, lonMax, latMax] = bbox;
    this.lonMin = lonMin;
    this.latMin = latMin;
    this.lonMax = lonMax;
    this.latMax = latMax;
    const midLat = (latMin + latMax) / 2;
    this.aspect = Math.cos((midLat * Math.PI) / 180);
    const spanX = (lonMax - lonMin) * this.aspect;
    const spanY = latMax - latMin;
    const sx = (width - 2 * padding) / (spanX || 1e-9);
    const sy = (height - 2 * padding) / (spanY || 1e-9);
    this.scale = Math.min(sx, sy);
    this.offsetX = (width - spanX * this.scale) / 2;
    this.offsetY = (height - spanY * this.scale) / 2;
  }

  toPx(lon: number, lat: number): [number, number] {
    const x = this.offsetX + (lon - this.lonMin) * this.aspect * this.scale;
    const y = this.height - this.offsetY - (lat - this.latMin) * this.scale;
    return [x, y];
  }

  toLonLat(x: number, y: number): [number, number] {
    const lon = this.lonMin + (x - this.offsetX) / (this.aspect * this.scale);
    const lat = this.latMin + (this.height - this.offsetY - y) / this.scale;
    return [lon, lat];
  }

  contains(lon: number, lat: number): boolean {
    return lon >= this.lonMin && lon <= this.lonMax && lat >= this.latMin && lat <= this.latMax;
  }
}

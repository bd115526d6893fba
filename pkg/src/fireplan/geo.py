"""Coordinate transforms: local metric projection, great-circle distance,
UTM zone 32 inverse conversion, and point-in-polygon tests.

All angular coordinates are WGS84 longitude/latitude in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Mean of the WGS84 semi-major and semi-minor axes; the local projection is
# spherical on purpose so that distances are reproducible bit-for-bit.
EARTH_RADIUS_M = (6378137.0 + 6356752.0) / 2.0

# WGS84 ellipsoid, used only by the UTM conversion.
_WGS84_A = 6378137.0
_WGS84_B = 6356752.314245
_UTM_K0 = 0.9996

SUPPORTED_UTM_ZONE = 32


@dataclass(frozen=True)
class LonLat:
    """A point as degrees east / degrees north."""

    lon: float
    lat: float

    def __post_init__(self) -> None:
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")


@dataclass(frozen=True)
class LocalXY:
    """Metres east/north of a local origin."""

    x: float
    y: float


@dataclass(frozen=True)
class UtmCoord:
    """UTM easting/northing in metres. Only zone 32 north is supported."""

    easting: float
    northing: float
    zone: int = 32
    north: bool = True

    def __post_init__(self) -> None:
        if self.easting <= 0 or self.northing <= 0:
            raise ValueError("easting and northing must be positive")


class RegionPolygon:
    """A single closed polygon of LonLat vertices (may be complex/concave).

    The first vertex is treated as joined to the last; an explicitly closed
    vertex list is accepted and deduplicated.
    """

    def __init__(self, vertices: list[LonLat]):
        verts = list(vertices)
        if len(verts) >= 2 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")
        self.vertices = verts
        self._lon = np.array([v.lon for v in verts])
        self._lat = np.array([v.lat for v in verts])

    def __len__(self) -> int:
        return len(self.vertices)

    def bbox(self) -> tuple[float, float, float, float]:
        """(min_lon, min_lat, max_lon, max_lat)."""
        return (
            float(self._lon.min()),
            float(self._lat.min()),
            float(self._lon.max()),
            float(self._lat.max()),
        )

    def signed_area(self) -> float:
        """Shoelace area in degree^2; positive when counterclockwise."""
        x, y = self._lon, self._lat
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def counterclockwise(self) -> "RegionPolygon":
        if self.signed_area() < 0:
            return RegionPolygon(list(reversed(self.vertices)))
        return self


def haversine_distance(a: LonLat, b: LonLat) -> float:
    """Great-circle distance in metres on the mean-radius sphere."""
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def haversine_project(origin: LonLat, p: LonLat) -> LocalXY:
    """Project p to metres east/north of origin.

    Distance is the great-circle distance, direction the initial bearing
    from the origin, so sqrt(x^2 + y^2) == haversine_distance(origin, p)
    and projecting the origin itself gives exactly (0, 0).
    """
    if p == origin:
        return LocalXY(0.0, 0.0)
    ref_lat = math.radians(origin.lat)
    lat = math.radians(p.lat)
    dlat = lat - ref_lat
    dlon = math.radians(p.lon - origin.lon)

    h = math.sin(dlat / 2.0) ** 2 + math.cos(ref_lat) * math.cos(lat) * math.sin(dlon / 2.0) ** 2
    distance = EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))
    # Initial bearing, clockwise from north.
    theta = math.atan2(
        math.sin(dlon) * math.cos(lat),
        math.cos(ref_lat) * math.sin(lat) - math.sin(ref_lat) * math.cos(lat) * math.cos(dlon),
    )
    # Compass bearing -> mathematical angle (counterclockwise from east).
    theta_math = 2.0 * math.pi - theta + math.pi / 2.0
    return LocalXY(distance * math.cos(theta_math), distance * math.sin(theta_math))


def project_many(origin: LonLat, lon: np.ndarray, lat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised haversine_project for node arrays (same formulas)."""
    ref_lat = math.radians(origin.lat)
    lat_r = np.radians(lat)
    dlat = lat_r - ref_lat
    dlon = np.radians(lon - origin.lon)
    h = np.sin(dlat / 2.0) ** 2 + math.cos(ref_lat) * np.cos(lat_r) * np.sin(dlon / 2.0) ** 2
    distance = EARTH_RADIUS_M * 2.0 * np.arctan2(np.sqrt(h), np.sqrt(1.0 - h))
    theta = np.arctan2(
        np.sin(dlon) * np.cos(lat_r),
        math.cos(ref_lat) * np.sin(lat_r) - math.sin(ref_lat) * np.cos(lat_r) * np.cos(dlon),
    )
    theta_math = 2.0 * np.pi - theta + np.pi / 2.0
    return distance * np.cos(theta_math), distance * np.sin(theta_math)


def _central_meridian_rad(zone: int) -> float:
    return math.radians(-183.0 + 6.0 * zone)


def utm_to_lonlat(u: UtmCoord) -> LonLat:
    """Inverse UTM (WGS84, northern hemisphere) via footpoint latitude series.

    Only zone 32 is accepted; the project region lies entirely within it.
    """
    if u.zone != SUPPORTED_UTM_ZONE:
        raise ValueError(f"unsupported UTM zone {u.zone}; only zone {SUPPORTED_UTM_ZONE}")
    if not u.north:
        raise ValueError("southern hemisphere not supported")

    a, b = _WGS84_A, _WGS84_B
    x = (u.easting - 500000.0) / _UTM_K0
    y = u.northing / _UTM_K0

    # Footpoint latitude from the meridian arc (third-flattening series).
    n = (a - b) / (a + b)
    alpha = (a + b) / 2.0 * (1.0 + n**2 / 4.0 + n**4 / 64.0)
    yy = y / alpha
    phi_f = (
        yy
        + (3.0 * n / 2.0 - 27.0 * n**3 / 32.0 + 269.0 * n**5 / 512.0) * math.sin(2.0 * yy)
        + (21.0 * n**2 / 16.0 - 55.0 * n**4 / 32.0) * math.sin(4.0 * yy)
        + (151.0 * n**3 / 96.0 - 417.0 * n**5 / 128.0) * math.sin(6.0 * yy)
        + (1097.0 * n**4 / 512.0) * math.sin(8.0 * yy)
    )

    ep2 = (a * a - b * b) / (b * b)
    cf = math.cos(phi_f)
    nuf2 = ep2 * cf * cf
    nf = a * a / (b * math.sqrt(1.0 + nuf2))
    tf = math.tan(phi_f)
    tf2 = tf * tf
    tf4 = tf2 * tf2

    frac = [0.0] * 9
    npow = nf
    frac[1] = 1.0 / (npow * cf)
    npow *= nf
    frac[2] = tf / (2.0 * npow)
    npow *= nf
    frac[3] = 1.0 / (6.0 * npow * cf)
    npow *= nf
    frac[4] = tf / (24.0 * npow)
    npow *= nf
    frac[5] = 1.0 / (120.0 * npow * cf)
    npow *= nf
    frac[6] = tf / (720.0 * npow)
    npow *= nf
    frac[7] = 1.0 / (5040.0 * npow * cf)
    npow *= nf
    frac[8] = tf / (40320.0 * npow)

    p2 = -1.0 - nuf2
    p3 = -1.0 - 2.0 * tf2 - nuf2
    p4 = 5.0 + 3.0 * tf2 + 6.0 * nuf2 - 6.0 * tf2 * nuf2 - 3.0 * nuf2**2 - 9.0 * tf2 * nuf2**2
    p5 = 5.0 + 28.0 * tf2 + 24.0 * tf4 + 6.0 * nuf2 + 8.0 * tf2 * nuf2
    p6 = -61.0 - 90.0 * tf2 - 45.0 * tf4 - 107.0 * nuf2 + 162.0 * tf2 * nuf2
    p7 = -61.0 - 662.0 * tf2 - 1320.0 * tf4 - 720.0 * tf4 * tf2
    p8 = 1385.0 + 3633.0 * tf2 + 4095.0 * tf4 + 1575.0 * tf4 * tf2

    lat = phi_f + frac[2] * p2 * x**2 + frac[4] * p4 * x**4 + frac[6] * p6 * x**6 + frac[8] * p8 * x**8
    lon = (
        _central_meridian_rad(u.zone)
        + frac[1] * x
        + frac[3] * p3 * x**3
        + frac[5] * p5 * x**5
        + frac[7] * p7 * x**7
    )
    return LonLat(math.degrees(lon), math.degrees(lat))


def _on_segment(px: float, py: float, x1: float, y1: float, x2: float, y2: float) -> bool:
    eps = 1e-12
    cross = (py - y1) * (x2 - x1) - (px - x1) * (y2 - y1)
    if abs(cross) > eps:
        return False
    dot = (px - x1) * (px - x2) + (py - y1) * (py - y2)
    return dot <= eps


def point_in_polygon(p: LonLat, poly: RegionPolygon) -> bool:
    """Even-odd ray-casting test. Points on the boundary count as inside."""
    x, y = p.lon, p.lat
    verts = poly.vertices
    n = len(verts)
    inside = False
    for i in range(n):
        x1, y1 = verts[i].lon, verts[i].lat
        x2, y2 = verts[(i + 1) % n].lon, verts[(i + 1) % n].lat
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def points_in_polygon(lon: np.ndarray, lat: np.ndarray, poly: RegionPolygon) -> np.ndarray:
    """Vectorised even-odd test over point arrays; same rule as the scalar
    version including boundary-points-are-inside."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    x1 = poly._lon
    y1 = poly._lat
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)

    inside = np.zeros(lon.shape, dtype=bool)
    on_edge = np.zeros(lon.shape, dtype=bool)
    eps = 1e-12
    for ax, ay, bx, by in zip(x1, y1, x2, y2):
        cross = (lat - ay) * (bx - ax) - (lon - ax) * (by - ay)
        dot = (lon - ax) * (lon - bx) + (lat - ay) * (lat - by)
        on_edge |= (np.abs(cross) <= eps) & (dot <= eps)
        spans = (ay > lat) != (by > lat)
        if not spans.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = ax + (lat - ay) * (bx - ax) / (by - ay)
        inside ^= spans & (lon < x_cross)
    return inside | on_edge

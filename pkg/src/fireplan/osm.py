"""Overpass JSON ingestion: highway and coastline extraction, cropping to the
responsibility polygon, land-mask construction, and the CSV loaders for
stations, critical locations and incident statistics.
"""

from __future__ import annotations

import codecs
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterator

import numpy as np

from .geo import (
    LonLat,
    RegionPolygon,
    haversine_project,
    point_in_polygon,
    points_in_polygon,
)

# Highway inclusion table: every class observed for the region, whether it is
# drivable for a fire truck, and the default speed (km/h) used when a way has
# no usable maxspeed tag.
HIGHWAY_CLASSES: dict[str, float | None] = {
    "construction": None,
    "cycleway": None,
    "footway": None,
    "living_street": 50.0,
    "path": None,
    "pedestrian": None,
    "platform": None,
    "primary": 50.0,
    "primary_link": 50.0,
    "proposed": None,
    "raceway": 50.0,
    "residential": 20.0,
    "secondary": 50.0,
    "secondary_link": 50.0,
    "service": 10.0,
    "steps": None,
    "trunk": 50.0,
    "trunk_link": 50.0,
    "track": 5.0,
    "tertiary": 50.0,
    "unclassified": 50.0,
}

INCLUDED_HIGHWAYS = frozenset(k for k, v in HIGHWAY_CLASSES.items() if v is not None)

# Islands smaller than this are dropped from the land mask; inhabited islands
# in the region are comfortably above it.
DEFAULT_MIN_ISLAND_AREA_M2 = 10_000.0


class OverpassParseError(Exception):
    """Malformed Overpass JSON; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class OsmNode:
    id: int
    pos: LonLat


@dataclass(frozen=True)
class OsmWay:
    id: int
    node_ids: tuple[int, ...]
    tags: dict[str, str]


@dataclass
class ParsedNetwork:
    nodes: list[OsmNode]
    ways: list[OsmWay]
    warnings: list[str] = field(default_factory=list)


@dataclass
class CoastlineData:
    nodes: list[OsmNode]
    edges: list[tuple[int, int]]  # (from_id, to_id), way direction preserved
    warnings: list[str] = field(default_factory=list)


@dataclass
class LandMask:
    """Closed land polygons (first vertex repeated last) for drawing."""

    polygons: list[list[LonLat]]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "polygons": [[[v.lon, v.lat] for v in ring] for ring in self.polygons],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "LandMask":
        return cls(
            polygons=[[LonLat(lon, lat) for lon, lat in ring] for ring in data["polygons"]],
            warnings=list(data.get("warnings", [])),
        )


@dataclass(frozen=True)
class StationRecord:
    name: str
    pos: LonLat
    mode: str  # "full_time" | "part_time"


@dataclass(frozen=True)
class CriticalLocation:
    name: str
    pos: LonLat


@dataclass(frozen=True)
class IncidentRecord:
    pos: LonLat
    real_response_minutes: float


# ---------------------------------------------------------------------------
# Streaming Overpass JSON


class _ChunkedText:
    """Sliding text window over a byte or text stream.

    Keeps only the unconsumed tail in memory and can report exact byte
    offsets, so a 30 MB export is parsed with a bounded buffer.
    """

    def __init__(self, stream: IO[bytes] | IO[str], chunk_size: int = 1 << 20):
        self._stream = stream
        self._chunk = chunk_size
        self._decoder = codecs.getincrementaldecoder("utf-8")()
        self.buf = ""
        self.bytes_before = 0  # bytes consumed before buf[0]
        self.eof = False

    def fill(self) -> bool:
        if self.eof:
            return False
        raw = self._stream.read(self._chunk)
        if not raw:
            self.eof = True
            return False
        self.buf += self._decoder.decode(raw) if isinstance(raw, bytes) else raw
        return True

    def ensure(self, idx: int) -> bool:
        while idx >= len(self.buf):
            if not self.fill():
                return False
        return True

    def compact(self, idx: int) -> int:
        """Drop the consumed prefix; returns the new index (0)."""
        if idx > 0:
            self.bytes_before += len(self.buf[:idx].encode("utf-8"))
            self.buf = self.buf[idx:]
        return 0

    def byte_offset(self, idx: int) -> int:
        return self.bytes_before + len(self.buf[: min(idx, len(self.buf))].encode("utf-8"))

    def skip_ws(self, idx: int) -> int:
        while True:
            if not self.ensure(idx):
                return idx
            while idx < len(self.buf) and self.buf[idx] in " \t\r\n":
                idx += 1
            if idx < len(self.buf):
                return idx


def iter_overpass_elements(
    stream: IO[bytes] | IO[str], chunk_size: int = 1 << 20
) -> Iterator[dict[str, Any]]:
    """Stream the objects of the top-level ``elements`` array one at a time.

    Exports run to tens of megabytes, so the document is never materialised
    as one tree; memory stays bounded by the chunk size plus one element.
    Raises OverpassParseError with a byte offset on malformed input.
    """
    text = _ChunkedText(stream, chunk_size=chunk_size)
    decoder = json.JSONDecoder()
    key = '"elements"'

    # Locate the elements key; the preamble before it is tiny, but the scan
    # still keeps the window bounded.
    idx = 0
    while True:
        found = text.buf.find(key, idx)
        if found >= 0:
            idx = found + len(key)
            break
        idx = max(0, len(text.buf) - len(key) + 1)
        idx = text.compact(idx)
        if not text.fill():
            raise OverpassParseError("no 'elements' array found", text.byte_offset(len(text.buf)))

    idx = text.skip_ws(idx)
    if not text.ensure(idx) or text.buf[idx] != ":":
        raise OverpassParseError("expected ':' after 'elements'", text.byte_offset(idx))
    idx = text.skip_ws(idx + 1)
    if not text.ensure(idx) or text.buf[idx] != "[":
        raise OverpassParseError("expected '[' to open elements array", text.byte_offset(idx))
    idx += 1

    first = True
    while True:
        idx = text.skip_ws(idx)
        if not text.ensure(idx):
            raise OverpassParseError("unterminated elements array", text.byte_offset(idx))
        ch = text.buf[idx]
        if ch == "]":
            return
        if not first:
            if ch != ",":
                raise OverpassParseError("expected ',' between elements", text.byte_offset(idx))
            idx = text.skip_ws(idx + 1)
            if not text.ensure(idx):
                raise OverpassParseError("unterminated elements array", text.byte_offset(idx))
            if text.buf[idx] == "]":
                return
        while True:
            try:
                obj, idx = decoder.raw_decode(text.buf, idx)
                break
            except json.JSONDecodeError as exc:
                # The failure may just be a truncated buffer; refill and
                # retry until end of input proves it malformed.
                if not text.fill():
                    raise OverpassParseError(exc.msg, text.byte_offset(exc.pos)) from exc
        if not isinstance(obj, dict):
            raise OverpassParseError("element is not an object", text.byte_offset(idx))
        yield obj
        first = False
        if idx > text._chunk:
            idx = text.compact(idx)


def _resolve_ways(
    nodes_by_id: dict[int, OsmNode], ways: list[OsmWay], warnings: list[str]
) -> list[OsmWay]:
    kept = []
    for way in ways:
        missing = [ref for ref in way.node_ids if ref not in nodes_by_id]
        if missing:
            warnings.append(f"way {way.id} references missing node(s) {missing[:3]}; dropped")
            continue
        kept.append(way)
    return kept


def parse_overpass_highways(stream: IO[bytes] | IO[str]) -> ParsedNetwork:
    """Extract road nodes and ways from an Overpass highways export.

    Ways without an included highway class are dropped, as are service ways
    tagged ``service=parking_aisle`` (parking aisles are not roads here).
    """
    nodes_by_id: dict[int, OsmNode] = {}
    ways: list[OsmWay] = []
    warnings: list[str] = []
    seen_unknown: set[str] = set()
    for el in iter_overpass_elements(stream):
        etype = el.get("type")
        if etype == "node":
            node = OsmNode(int(el["id"]), LonLat(float(el["lon"]), float(el["lat"])))
            nodes_by_id[node.id] = node
        elif etype == "way":
            tags = {str(k): str(v) for k, v in (el.get("tags") or {}).items()}
            highway = tags.get("highway")
            if highway is None:
                continue
            if highway not in HIGHWAY_CLASSES and highway not in seen_unknown:
                seen_unknown.add(highway)
                warnings.append(f"unknown highway type {highway!r}; excluded")
            if highway not in INCLUDED_HIGHWAYS:
                continue
            if highway == "service" and tags.get("service") == "parking_aisle":
                continue
            refs = tuple(int(r) for r in el.get("nodes", ()))
            if len(refs) < 2:
                warnings.append(f"way {el['id']} has fewer than 2 node refs; dropped")
                continue
            ways.append(OsmWay(int(el["id"]), refs, tags))
    ways = _resolve_ways(nodes_by_id, ways, warnings)
    return ParsedNetwork(nodes=list(nodes_by_id.values()), ways=ways, warnings=warnings)


def parse_overpass_coastline(stream: IO[bytes] | IO[str]) -> CoastlineData:
    """Extract coastline nodes and directed edges (natural=coastline ways)."""
    nodes_by_id: dict[int, OsmNode] = {}
    ways: list[OsmWay] = []
    warnings: list[str] = []
    for el in iter_overpass_elements(stream):
        etype = el.get("type")
        if etype == "node":
            node = OsmNode(int(el["id"]), LonLat(float(el["lon"]), float(el["lat"])))
            nodes_by_id[node.id] = node
        elif etype == "way":
            tags = {str(k): str(v) for k, v in (el.get("tags") or {}).items()}
            if tags.get("natural") != "coastline":
                continue
            refs = tuple(int(r) for r in el.get("nodes", ()))
            if len(refs) < 2:
                warnings.append(f"coastline way {el['id']} has fewer than 2 node refs; dropped")
                continue
            ways.append(OsmWay(int(el["id"]), refs, tags))
    ways = _resolve_ways(nodes_by_id, ways, warnings)
    edges: list[tuple[int, int]] = []
    used: set[int] = set()
    for way in ways:
        for a, b in zip(way.node_ids, way.node_ids[1:]):
            edges.append((a, b))
            used.add(a)
            used.add(b)
    nodes = [nodes_by_id[i] for i in sorted(used)]
    return CoastlineData(nodes=nodes, edges=edges, warnings=warnings)


# ---------------------------------------------------------------------------
# Cropping to the responsibility polygon


def crop_highways(
    nodes: list[OsmNode], ways: list[OsmWay], poly: RegionPolygon
) -> tuple[list[OsmNode], list[OsmWay]]:
    """Keep nodes inside the polygon; truncate ways at the boundary.

    A way is split into its maximal runs of consecutive inside nodes, so an
    edge with one endpoint outside is dropped (roads get cut off at the
    boundary rather than extended beyond it).
    """
    if not nodes:
        return [], []
    lon = np.array([n.pos.lon for n in nodes])
    lat = np.array([n.pos.lat for n in nodes])
    inside_mask = points_in_polygon(lon, lat, poly)
    inside_ids = {n.id for n, ok in zip(nodes, inside_mask) if ok}

    kept_nodes = [n for n in nodes if n.id in inside_ids]
    kept_ways: list[OsmWay] = []
    for way in ways:
        run: list[int] = []
        runs: list[list[int]] = []
        for ref in way.node_ids:
            if ref in inside_ids:
                run.append(ref)
            else:
                if len(run) >= 2:
                    runs.append(run)
                run = []
        if len(run) >= 2:
            runs.append(run)
        for run in runs:
            kept_ways.append(OsmWay(way.id, tuple(run), way.tags))
    return kept_nodes, kept_ways


def crop_coastline(coast: CoastlineData, poly: RegionPolygon) -> CoastlineData:
    """Keep coastline edges whose both endpoints lie inside the polygon."""
    if not coast.nodes:
        return CoastlineData([], [], list(coast.warnings))
    lon = np.array([n.pos.lon for n in coast.nodes])
    lat = np.array([n.pos.lat for n in coast.nodes])
    inside_mask = points_in_polygon(lon, lat, poly)
    inside_ids = {n.id for n, ok in zip(coast.nodes, inside_mask) if ok}
    edges = [(a, b) for a, b in coast.edges if a in inside_ids and b in inside_ids]
    used = {i for e in edges for i in e}
    nodes = [n for n in coast.nodes if n.id in used]
    return CoastlineData(nodes=nodes, edges=edges, warnings=list(coast.warnings))


# ---------------------------------------------------------------------------
# Land mask


class _BoundaryWalk:
    """Arc-length parameterisation of a counterclockwise polygon boundary."""

    def __init__(self, poly: RegionPolygon):
        self.poly = poly.counterclockwise()
        verts = self.poly.vertices
        origin = verts[0]
        pts = [haversine_project(origin, v) for v in verts]
        self._xy = [(p.x, p.y) for p in pts]
        self._origin = origin
        lengths = []
        n = len(verts)
        for i in range(n):
            x1, y1 = self._xy[i]
            x2, y2 = self._xy[(i + 1) % n]
            lengths.append(math.hypot(x2 - x1, y2 - y1))
        self.cum = [0.0]
        for seg in lengths:
            self.cum.append(self.cum[-1] + seg)
        self.total = self.cum[-1]

    def param_of(self, p: LonLat) -> float:
        """Arc-length parameter of the boundary point nearest to p."""
        q = haversine_project(self._origin, p)
        best_t = 0.0
        best_d = float("inf")
        n = len(self._xy)
        for i in range(n):
            x1, y1 = self._xy[i]
            x2, y2 = self._xy[(i + 1) % n]
            dx, dy = x2 - x1, y2 - y1
            seg2 = dx * dx + dy * dy
            if seg2 == 0:
                continue
            u = ((q.x - x1) * dx + (q.y - y1) * dy) / seg2
            u = min(1.0, max(0.0, u))
            px, py = x1 + u * dx, y1 + u * dy
            d = math.hypot(q.x - px, q.y - py)
            if d < best_d:
                best_d = d
                best_t = self.cum[i] + u * math.sqrt(seg2)
        return best_t

    def vertices_between(self, t_from: float, t_to: float) -> list[LonLat]:
        """Polygon vertices passed when walking ccw from t_from to t_to."""
        verts = self.poly.vertices
        n = len(verts)
        span = (t_to - t_from) % self.total
        passed: list[tuple[float, LonLat]] = []
        for i in range(n):
            rel = (self.cum[i] - t_from) % self.total
            if 0.0 < rel < span:
                passed.append((rel, verts[i]))
        passed.sort(key=lambda item: item[0])
        return [v for _, v in passed]


def _ring_area_m2(ring: list[LonLat]) -> float:
    origin = ring[0]
    pts = [haversine_project(origin, v) for v in ring]
    area = 0.0
    for (a, b) in zip(pts, pts[1:] + pts[:1]):
        area += a.x * b.y - b.x * a.y
    return abs(area) / 2.0


def build_land_mask(
    coastline_nodes: list[OsmNode],
    coastline_edges: list[tuple[int, int]],
    poly: RegionPolygon,
    min_island_area: float = DEFAULT_MIN_ISLAND_AREA_M2,
) -> LandMask:
    """Assemble closed land polygons from cropped coastline segments.

    Closed rings (islands) pass through unchanged; chains cut open by the
    region boundary are closed by walking counterclockwise along the boundary
    (OSM coastline keeps land on the left, and the boundary is normalised to
    counterclockwise, so the enclosed area is the land side). Rings smaller
    than min_island_area are removed.
    """
    warnings: list[str] = []
    pos = {n.id: n.pos for n in coastline_nodes}
    succ: dict[int, int] = {}
    for a, b in coastline_edges:
        if a in succ and succ[a] != b:
            warnings.append(f"coastline branches at node {a}; keeping first branch")
            continue
        succ[a] = b

    has_pred = set(succ.values())
    rings: list[list[LonLat]] = []
    visited: set[int] = set()

    # Open chains start at nodes without a predecessor.
    chains: list[list[int]] = []
    for start in sorted(succ):
        if start in has_pred or start in visited:
            continue
        chain = [start]
        visited.add(start)
        cur = start
        while cur in succ:
            cur = succ[cur]
            if cur in visited:
                warnings.append(f"coastline chain re-enters node {cur}; truncated")
                break
            chain.append(cur)
            visited.add(cur)
        chains.append(chain)

    # Remaining unvisited successor nodes belong to closed rings.
    for start in sorted(succ):
        if start in visited:
            continue
        ring_ids = [start]
        visited.add(start)
        cur = succ[start]
        closed = False
        while True:
            if cur == start:
                closed = True
                break
            if cur in visited or cur not in succ:
                break
            ring_ids.append(cur)
            visited.add(cur)
            cur = succ[cur]
        if closed:
            ring = [pos[i] for i in ring_ids] + [pos[ring_ids[0]]]
            rings.append(ring)
        else:
            warnings.append(f"coastline loop starting at node {start} does not close; dropped")

    if chains:
        walk = _BoundaryWalk(poly)
        entries = {}  # chain index -> param of chain head (where coast enters)
        exits = {}  # chain index -> param of chain tail (where coast leaves)
        for ci, chain in enumerate(chains):
            entries[ci] = walk.param_of(pos[chain[0]])
            exits[ci] = walk.param_of(pos[chain[-1]])

        unused = set(range(len(chains)))
        while unused:
            start_ci = min(unused)
            ring_pts: list[LonLat] = []
            ci = start_ci
            guard = 0
            closed = False
            while True:
                guard += 1
                if guard > len(chains) + 1:
                    break
                unused.discard(ci)
                ring_pts.extend(pos[i] for i in chains[ci])
                t_exit = exits[ci]
                # Next chain entry reached walking ccw from this exit.
                candidates = [
                    (((entries[cj] - t_exit) % walk.total), cj)
                    for cj in list(unused) + [start_ci]
                ]
                dist, nxt = min(candidates)
                ring_pts.extend(walk.vertices_between(t_exit, entries[nxt]))
                if nxt == start_ci:
                    closed = True
                    break
                ci = nxt
            if closed and len(ring_pts) >= 3:
                rings.append(ring_pts + [ring_pts[0]])
            else:
                warnings.append(
                    f"could not close coastline chain starting at node {chains[start_ci][0]}; dropped"
                )

    kept = [r for r in rings if _ring_area_m2(r) >= min_island_area]
    return LandMask(polygons=kept, warnings=warnings)


# ---------------------------------------------------------------------------
# CSV loaders


class CsvFormatError(Exception):
    """A CSV row or header failed validation; names the row and column."""


def _read_rows(path: Path | str, required: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        headers = reader.fieldnames or []
        for col in required:
            if col not in headers:
                raise CsvFormatError(f"{path}: missing required column {col!r}")
        return list(reader)


def _parse_float(path: Path | str, row_num: int, col: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise CsvFormatError(f"{path}: row {row_num}, column {col!r}: cannot parse {value!r}") from None


def load_stations_csv(path: Path | str) -> list[StationRecord]:
    """Load stations from a CSV with headers name,lon,lat[,mode].

    mode defaults to part_time when the column is absent or empty; the two
    full-time stations in the source data carry it explicitly.
    """
    rows = _read_rows(path, ["name", "lon", "lat"])
    out = []
    for i, row in enumerate(rows, start=2):
        mode = (row.get("mode") or "part_time").strip().replace("-", "_")
        if mode not in ("full_time", "part_time"):
            raise CsvFormatError(f"{path}: row {i}, column 'mode': unknown mode {row['mode']!r}")
        out.append(
            StationRecord(
                name=row["name"].strip(),
                pos=LonLat(_parse_float(path, i, "lon", row["lon"]), _parse_float(path, i, "lat", row["lat"])),
                mode=mode,
            )
        )
    return out


def load_critical_csv(path: Path | str) -> list[CriticalLocation]:
    rows = _read_rows(path, ["name", "lon", "lat"])
    return [
        CriticalLocation(
            name=row["name"].strip(),
            pos=LonLat(_parse_float(path, i, "lon", row["lon"]), _parse_float(path, i, "lat", row["lat"])),
        )
        for i, row in enumerate(rows, start=2)
    ]


def load_incidents_csv(path: Path | str) -> list[IncidentRecord]:
    rows = _read_rows(path, ["lon", "lat", "response_minutes"])
    out = []
    for i, row in enumerate(rows, start=2):
        minutes = _parse_float(path, i, "response_minutes", row["response_minutes"])
        if minutes <= 0:
            raise CsvFormatError(f"{path}: row {i}, column 'response_minutes': must be > 0")
        out.append(
            IncidentRecord(
                pos=LonLat(_parse_float(path, i, "lon", row["lon"]), _parse_float(path, i, "lat", row["lat"])),
                real_response_minutes=minutes,
            )
        )
    return out


def load_region_csv(path: Path | str) -> RegionPolygon:
    """Region polygon vertices from CSV: either lon,lat or easting,northing
    (UTM zone 32, converted on load)."""
    from .geo import UtmCoord, utm_to_lonlat

    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        headers = [h.strip() for h in (reader.fieldnames or [])]
        if "lon" in headers and "lat" in headers:
            verts = [
                LonLat(_parse_float(path, i, "lon", row["lon"]), _parse_float(path, i, "lat", row["lat"]))
                for i, row in enumerate(reader, start=2)
            ]
        elif "easting" in headers and "northing" in headers:
            verts = [
                utm_to_lonlat(
                    UtmCoord(
                        _parse_float(path, i, "easting", row["easting"]),
                        _parse_float(path, i, "northing", row["northing"]),
                    )
                )
                for i, row in enumerate(reader, start=2)
            ]
        else:
            raise CsvFormatError(f"{path}: expected headers lon,lat or easting,northing")
    return RegionPolygon(verts)


def check_point_inside(p: LonLat, poly: RegionPolygon) -> bool:
    # Thin alias kept for symmetry with the vectorised crop path.
    return point_in_polygon(p, poly)

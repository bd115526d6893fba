"""Directed, travel-time-weighted routing graph built from cropped highways."""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import binio
from .geo import EARTH_RADIUS_M, LonLat, haversine_distance, project_many
from .osm import HIGHWAY_CLASSES, OsmNode, OsmWay

KMH_TO_MS = 1000.0 / 3600.0

_MAXSPEED_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(?:km/h)?\s*$")


def parse_maxspeed(value: str | None) -> float | None:
    """Parse a maxspeed tag: plain number (km/h) or 'NN km/h'. Anything else
    (mph, 'none', ranges) falls back to the class default."""
    if value is None:
        return None
    m = _MAXSPEED_RE.match(value)
    if not m:
        return None
    speed = float(m.group(1))
    return speed if speed > 0 else None


@dataclass
class RoadGraph:
    """Immutable after build. Edges are unidirectional; a two-way road
    segment appears as two antiparallel edges. Edge arrays are sorted by
    (from, to) so adjacency is a contiguous slice per node."""

    osm_ids: np.ndarray  # int64 [n]
    lon: np.ndarray  # float64 [n]
    lat: np.ndarray  # float64 [n]
    local_x: np.ndarray  # float64 [n], metres east of local_origin
    local_y: np.ndarray  # float64 [n], metres north of local_origin
    local_origin: LonLat  # mean lon/lat of all nodes
    edge_from: np.ndarray  # int32 [m]
    edge_to: np.ndarray  # int32 [m]
    edge_length: np.ndarray  # float64 [m], metres
    edge_speed: np.ndarray  # float64 [m], km/h
    edge_time: np.ndarray  # float64 [m], seconds
    edge_tunnel: np.ndarray  # bool [m]
    edge_bridge: np.ndarray  # bool [m]
    warnings: list[str] = field(default_factory=list)

    _adj_offsets: np.ndarray | None = field(default=None, repr=False)
    _kdtree: cKDTree | None = field(default=None, repr=False)
    _adj_time: list | None = field(default=None, repr=False)
    _adj_dist: list | None = field(default=None, repr=False)
    _checksum: str | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.osm_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edge_from)

    def bbox(self) -> tuple[float, float, float, float]:
        return (
            float(self.lon.min()),
            float(self.lat.min()),
            float(self.lon.max()),
            float(self.lat.max()),
        )

    def adjacency_offsets(self) -> np.ndarray:
        """CSR offsets: outgoing edges of node i are edge indices
        offsets[i]:offsets[i+1]."""
        if self._adj_offsets is None:
            counts = np.bincount(self.edge_from, minlength=self.n_nodes)
            self._adj_offsets = np.concatenate(([0], np.cumsum(counts)))
        return self._adj_offsets

    def adjacency(self, weight: str = "time") -> list:
        """Per-node list of (target, weight) tuples; built once per weight.
        Plain Python containers keep the Dijkstra inner loop fast."""
        if weight == "time":
            if self._adj_time is None:
                self._adj_time = self._build_adjacency(self.edge_time)
            return self._adj_time
        if weight == "distance":
            if self._adj_dist is None:
                self._adj_dist = self._build_adjacency(self.edge_length)
            return self._adj_dist
        raise ValueError(f"unknown weight kind {weight!r}")

    def _build_adjacency(self, weights: np.ndarray) -> list:
        offsets = self.adjacency_offsets()
        to = self.edge_to.tolist()
        w = weights.tolist()
        return [
            list(zip(to[offsets[i]: offsets[i + 1]], w[offsets[i]: offsets[i + 1]]))
            for i in range(self.n_nodes)
        ]

    def checksum(self) -> str:
        if self._checksum is None:
            h = hashlib.sha256()
            for arr in (
                self.osm_ids,
                self.lon,
                self.lat,
                self.edge_from,
                self.edge_to,
                self.edge_length,
                self.edge_speed,
                self.edge_time,
            ):
                h.update(np.ascontiguousarray(arr).tobytes())
            self._checksum = h.hexdigest()
        return self._checksum

    def _tree(self) -> cKDTree:
        if self._kdtree is None:
            lon_r = np.radians(self.lon)
            lat_r = np.radians(self.lat)
            xyz = np.column_stack(
                (
                    np.cos(lat_r) * np.cos(lon_r),
                    np.cos(lat_r) * np.sin(lon_r),
                    np.sin(lat_r),
                )
            ) * EARTH_RADIUS_M
            self._kdtree = cKDTree(xyz)
        return self._kdtree

    def nearest_node(self, p: LonLat, max_dist: float = math.inf) -> int | None:
        """Index of the node nearest to p by great-circle distance, or None
        when the nearest is farther than max_dist metres. Exact: chord
        distance on the sphere is monotone in great-circle distance, and
        ties go to the lowest node index."""
        if self.n_nodes == 0:
            raise ValueError("graph has no nodes")
        tree = self._tree()
        lon_r, lat_r = math.radians(p.lon), math.radians(p.lat)
        q = np.array(
            [
                math.cos(lat_r) * math.cos(lon_r),
                math.cos(lat_r) * math.sin(lon_r),
                math.sin(lat_r),
            ]
        ) * EARTH_RADIUS_M
        chord, _ = tree.query(q)
        candidates = tree.query_ball_point(q, chord * (1.0 + 1e-12) + 1e-9)
        best: tuple[float, int] | None = None
        for idx in candidates:
            d = haversine_distance(p, LonLat(float(self.lon[idx]), float(self.lat[idx])))
            if best is None or (d, idx) < best:
                best = (d, idx)
        assert best is not None
        if best[0] > max_dist:
            return None
        return best[1]

    def node_pos(self, index: int) -> LonLat:
        return LonLat(float(self.lon[index]), float(self.lat[index]))


def build_graph(
    nodes: list[OsmNode],
    ways: list[OsmWay],
    classes: dict[str, float | None] = HIGHWAY_CLASSES,
) -> RoadGraph:
    """Build the routing graph from cropped, parsed highways.

    One directed edge per consecutive node pair per way, plus the reverse
    edge unless the way is one-way. Edge speed comes from the maxspeed tag
    when parseable, otherwise the class default.
    """
    warnings: list[str] = []
    node_pos = {n.id: n.pos for n in nodes}

    used_ids: set[int] = set()
    usable_ways: list[OsmWay] = []
    for way in ways:
        missing = [r for r in way.node_ids if r not in node_pos]
        if missing:
            warnings.append(f"way {way.id} references unresolved node(s) {missing[:3]}; skipped")
            continue
        usable_ways.append(way)
        used_ids.update(way.node_ids)

    id_list = sorted(used_ids)
    index_of = {osm_id: i for i, osm_id in enumerate(id_list)}
    lon = np.array([node_pos[i].lon for i in id_list], dtype=np.float64)
    lat = np.array([node_pos[i].lat for i in id_list], dtype=np.float64)

    e_from: list[int] = []
    e_to: list[int] = []
    e_len: list[float] = []
    e_speed: list[float] = []
    e_tunnel: list[bool] = []
    e_bridge: list[bool] = []

    for way in usable_ways:
        highway = way.tags.get("highway", "")
        default_speed = classes.get(highway)
        if default_speed is None:
            warnings.append(f"way {way.id}: highway type {highway!r} has no default speed; skipped")
            continue
        speed = parse_maxspeed(way.tags.get("maxspeed"))
        if speed is None:
            if "maxspeed" in way.tags:
                warnings.append(
                    f"way {way.id}: unparsable maxspeed {way.tags['maxspeed']!r}; "
                    f"using class default {default_speed}"
                )
            speed = default_speed
        oneway = way.tags.get("oneway", "no")
        tunnel = way.tags.get("tunnel") == "yes"
        bridge = way.tags.get("bridge") == "yes"

        pairs = list(zip(way.node_ids, way.node_ids[1:]))
        if oneway == "-1":
            pairs = [(b, a) for a, b in pairs]
            oneway = "yes"
        two_way = oneway not in ("yes", "true", "1")

        for a, b in pairs:
            length = haversine_distance(node_pos[a], node_pos[b])
            if length <= 0.0:
                warnings.append(f"way {way.id}: zero-length segment {a}->{b}; dropped")
                continue
            ia, ib = index_of[a], index_of[b]
            e_from.append(ia)
            e_to.append(ib)
            e_len.append(length)
            e_speed.append(speed)
            e_tunnel.append(tunnel)
            e_bridge.append(bridge)
            if two_way:
                e_from.append(ib)
                e_to.append(ia)
                e_len.append(length)
                e_speed.append(speed)
                e_tunnel.append(tunnel)
                e_bridge.append(bridge)

    edge_from = np.array(e_from, dtype=np.int32)
    edge_to = np.array(e_to, dtype=np.int32)
    edge_length = np.array(e_len, dtype=np.float64)
    edge_speed = np.array(e_speed, dtype=np.float64)
    edge_tunnel = np.array(e_tunnel, dtype=bool)
    edge_bridge = np.array(e_bridge, dtype=bool)

    order = np.lexsort((edge_to, edge_from))
    edge_from = edge_from[order]
    edge_to = edge_to[order]
    edge_length = edge_length[order]
    edge_speed = edge_speed[order]
    edge_tunnel = edge_tunnel[order]
    edge_bridge = edge_bridge[order]

    edge_time = edge_length / (edge_speed * KMH_TO_MS)

    if len(id_list) > 0:
        origin = LonLat(float(lon.mean()), float(lat.mean()))
        local_x, local_y = project_many(origin, lon, lat)
    else:
        origin = LonLat(0.0, 0.0)
        local_x = np.zeros(0)
        local_y = np.zeros(0)

    return RoadGraph(
        osm_ids=np.array(id_list, dtype=np.int64),
        lon=lon,
        lat=lat,
        local_x=local_x,
        local_y=local_y,
        local_origin=origin,
        edge_from=edge_from,
        edge_to=edge_to,
        edge_length=edge_length,
        edge_speed=edge_speed,
        edge_time=edge_time,
        edge_tunnel=edge_tunnel,
        edge_bridge=edge_bridge,
        warnings=warnings,
    )


def scale_speeds(g: RoadGraph, factor: float) -> RoadGraph:
    """Derived graph with every travel time multiplied by factor (> 1 means
    slower driving). Lengths are unchanged; speeds divide by the factor so
    time * speed == length still holds."""
    if factor <= 0:
        raise ValueError("speed factor must be > 0")
    return RoadGraph(
        osm_ids=g.osm_ids,
        lon=g.lon,
        lat=g.lat,
        local_x=g.local_x,
        local_y=g.local_y,
        local_origin=g.local_origin,
        edge_from=g.edge_from,
        edge_to=g.edge_to,
        edge_length=g.edge_length,
        edge_speed=g.edge_speed / factor,
        edge_time=g.edge_time * factor,
        edge_tunnel=g.edge_tunnel,
        edge_bridge=g.edge_bridge,
        warnings=list(g.warnings),
    )


def save_graph(g: RoadGraph, path: Path | str) -> None:
    header = {
        "format": "fireplan-graph",
        "version": 1,
        "checksum": g.checksum(),
        "local_origin": [g.local_origin.lon, g.local_origin.lat],
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "warnings": g.warnings,
    }
    flags = (g.edge_tunnel.astype(np.uint8) | (g.edge_bridge.astype(np.uint8) << 1)).astype(np.uint8)
    binio.write_container(
        path,
        header,
        {
            "osm_ids": g.osm_ids,
            "lon": g.lon,
            "lat": g.lat,
            "local_x": g.local_x,
            "local_y": g.local_y,
            "edge_from": g.edge_from,
            "edge_to": g.edge_to,
            "edge_length": g.edge_length,
            "edge_speed": g.edge_speed,
            "edge_flags": flags,
        },
    )


def load_graph(path: Path | str) -> RoadGraph:
    header, arrays = binio.read_container(path)
    if header.get("format") != "fireplan-graph":
        raise binio.CacheFormatError(f"{path}: not a graph cache")
    flags = arrays["edge_flags"]
    g = RoadGraph(
        osm_ids=arrays["osm_ids"],
        lon=arrays["lon"],
        lat=arrays["lat"],
        local_x=arrays["local_x"],
        local_y=arrays["local_y"],
        local_origin=LonLat(*header["local_origin"]),
        edge_from=arrays["edge_from"],
        edge_to=arrays["edge_to"],
        edge_length=arrays["edge_length"],
        edge_speed=arrays["edge_speed"],
        edge_time=arrays["edge_length"] / (arrays["edge_speed"] * KMH_TO_MS),
        edge_tunnel=(flags & 1).astype(bool),
        edge_bridge=((flags >> 1) & 1).astype(bool),
        warnings=list(header.get("warnings", [])),
    )
    if g.checksum() != header.get("checksum"):
        raise binio.CacheFormatError(f"{path}: checksum mismatch; cache corrupted")
    return g

"""One-to-all shortest paths and combination of per-station fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from heapq import heappop, heappush
from pathlib import Path

import numpy as np

from . import binio
from .graph import RoadGraph
from .osm import StationRecord

UNREACHABLE = np.inf


@dataclass
class TravelTimeField:
    """Seconds (or metres in distance mode) from one source to every node.
    Unreachable nodes hold inf."""

    source: int
    values: np.ndarray  # float64 [n]
    weight: str = "time"  # "time" | "distance"

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.values)


def dijkstra_one_to_all(g: RoadGraph, source: int, weight: str = "time") -> TravelTimeField:
    """Exact one-to-all shortest paths with a binary heap.

    Heap entries are (value, node) tuples, so ties resolve by node index and
    two runs produce bit-identical fields.
    """
    if not (0 <= source < g.n_nodes):
        raise ValueError(f"source index {source} out of range")
    adj = g.adjacency(weight)
    dist = [UNREACHABLE] * g.n_nodes
    dist[source] = 0.0
    settled = bytearray(g.n_nodes)
    heap: list[tuple[float, int]] = [(0.0, source)]
    while heap:
        d, u = heappop(heap)
        if settled[u]:
            continue
        settled[u] = 1
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heappush(heap, (nd, v))
    return TravelTimeField(source=source, values=np.array(dist, dtype=np.float64), weight=weight)


@dataclass
class CombinedField:
    """Per-node best response time over the open stations.

    best_time includes the callout delay of the winning station;
    best_station is -1 where no open station can reach the node. The scaled
    travel components are retained so the field can be re-minimised under a
    different travel-time scale without recomputing shortest paths.
    """

    best_time: np.ndarray  # float64 [n], seconds, inf when unreachable
    best_station: np.ndarray  # int32 [n], -1 when unreachable
    station_indices: np.ndarray = field(repr=False, default=None)  # int32 [k]
    delays_s: np.ndarray = field(repr=False, default=None)  # float64 [k]
    travel_s: np.ndarray = field(repr=False, default=None)  # float64 [k, n]

    @property
    def unreachable(self) -> np.ndarray:
        return ~np.isfinite(self.best_time)

    def max_finite_minutes(self) -> float:
        finite = self.best_time[np.isfinite(self.best_time)]
        return float(finite.max() / 60.0) if finite.size else 0.0


def combine_fields(
    fields: list[TravelTimeField],
    delays_s: list[float],
    open_flags: list[bool],
) -> CombinedField:
    """Node-wise minimum of delay + travel over the open stations.

    Ties go to the lowest station index. A node is unreachable only when it
    is unreachable from every open station.
    """
    if len(fields) != len(delays_s) or len(fields) != len(open_flags):
        raise ValueError("fields, delays and open flags must have equal length")
    open_idx = [i for i, is_open in enumerate(open_flags) if is_open]
    if not open_idx:
        raise ValueError("no stations are open")
    n = len(fields[open_idx[0]].values)
    travel = np.vstack([fields[i].values for i in open_idx])
    if travel.shape[1] != n or any(len(fields[i].values) != n for i in open_idx):
        raise ValueError("fields cover different graphs")
    delays = np.array([delays_s[i] for i in open_idx], dtype=np.float64)
    return _minimise(np.array(open_idx, dtype=np.int32), delays, travel)


def _minimise(station_indices: np.ndarray, delays: np.ndarray, travel: np.ndarray) -> CombinedField:
    total = travel + delays[:, None]
    # argmin returns the first minimum, i.e. the lowest open-station index.
    arg = np.argmin(total, axis=0)
    best = total[arg, np.arange(total.shape[1])]
    best_station = station_indices[arg].astype(np.int32)
    best_station[~np.isfinite(best)] = -1
    return CombinedField(
        best_time=best,
        best_station=best_station,
        station_indices=station_indices,
        delays_s=delays,
        travel_s=travel,
    )


def rescale_combined(
    fieldset: CombinedField, factor: float, scale_delays: bool = False
) -> CombinedField:
    """Re-minimise with every travel component multiplied by factor.

    The winning station can change under scaling (a slow nearby part-time
    station may overtake a distant full-time one), so this recombines
    rather than scaling best_time in place. Callout delays stay fixed
    unless scale_delays is set (for when the observed response times are
    believed to include alarm handling as well).
    """
    if factor <= 0:
        raise ValueError("scale factor must be > 0")
    if fieldset.travel_s is None:
        raise ValueError("combined field does not carry its travel components")
    delays = fieldset.delays_s * factor if scale_delays else fieldset.delays_s
    return _minimise(fieldset.station_indices, delays, fieldset.travel_s * factor)


def station_areas(combined: CombinedField) -> np.ndarray:
    """Per-node index of the closest (in response time) station; -1 where
    unreachable."""
    return combined.best_station.copy()


@dataclass
class FieldCache:
    """Per-station baseline travel-time fields over one graph."""

    graph_checksum: str
    stations: list[StationRecord]
    station_nodes: list[int]  # graph node index per station
    fields: list[TravelTimeField]

    def save(self, path: Path | str) -> None:
        header = {
            "format": "fireplan-fields",
            "version": 1,
            "graph_checksum": self.graph_checksum,
            "unreachable_sentinel": "inf",
            "stations": [
                {"name": s.name, "lon": s.pos.lon, "lat": s.pos.lat, "mode": s.mode, "node": n}
                for s, n in zip(self.stations, self.station_nodes)
            ],
        }
        arrays = {f"field_{i:03d}": f.values for i, f in enumerate(self.fields)}
        binio.write_container(path, header, arrays)

    @classmethod
    def load(cls, path: Path | str, expect_checksum: str | None = None) -> "FieldCache":
        from .geo import LonLat

        header, arrays = binio.read_container(path)
        if header.get("format") != "fireplan-fields":
            raise binio.CacheFormatError(f"{path}: not a field cache")
        if expect_checksum is not None and header["graph_checksum"] != expect_checksum:
            raise binio.CacheFormatError(
                f"{path}: field cache was built for a different graph "
                f"({header['graph_checksum'][:12]} != {expect_checksum[:12]})"
            )
        stations = [
            StationRecord(name=s["name"], pos=LonLat(s["lon"], s["lat"]), mode=s["mode"])
            for s in header["stations"]
        ]
        nodes = [int(s["node"]) for s in header["stations"]]
        fields = [
            TravelTimeField(source=nodes[i], values=arrays[f"field_{i:03d}"])
            for i in range(len(stations))
        ]
        return cls(
            graph_checksum=header["graph_checksum"],
            stations=stations,
            station_nodes=nodes,
            fields=fields,
        )


def _field_for_station(args: tuple) -> np.ndarray:
    g, node = args
    return dijkstra_one_to_all(g, node).values


def compute_station_fields(
    g: RoadGraph,
    stations: list[StationRecord],
    match_max_dist: float = 500.0,
    jobs: int = 1,
) -> FieldCache:
    """Run one Dijkstra per station. Results are independent of the worker
    schedule because each field depends only on its own source."""
    nodes = []
    for s in stations:
        node = g.nearest_node(s.pos, max_dist=match_max_dist)
        if node is None:
            raise ValueError(f"station {s.name!r} is more than {match_max_dist} m from any road node")
        nodes.append(node)

    if jobs > 1 and len(stations) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_field_for_station, [(g, n) for n in nodes]))
        fields = [TravelTimeField(source=n, values=v) for n, v in zip(nodes, values)]
    else:
        fields = [dijkstra_one_to_all(g, n) for n in nodes]

    return FieldCache(
        graph_checksum=g.checksum(),
        stations=list(stations),
        station_nodes=nodes,
        fields=fields,
    )

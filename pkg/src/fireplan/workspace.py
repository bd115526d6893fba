"""On-disk workspace layout: ingest artifacts, caches, and the result store
shared by the CLI and the HTTP service."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .graph import RoadGraph, load_graph
from .osm import CriticalLocation, IncidentRecord, LandMask, StationRecord
from .geo import LonLat
from .routing import FieldCache
from .scenario import ScenarioEngine


class WorkspaceError(Exception):
    """Missing or inconsistent workspace artifacts."""


@dataclass
class Workspace:
    root: Path

    @property
    def graph_path(self) -> Path:
        return self.root / "graph.bin"

    @property
    def fields_path(self) -> Path:
        return self.root / "fields.bin"

    @property
    def landmask_path(self) -> Path:
        return self.root / "landmask.json"

    @property
    def stations_path(self) -> Path:
        return self.root / "stations.json"

    @property
    def critical_path(self) -> Path:
        return self.root / "critical.json"

    @property
    def incidents_path(self) -> Path:
        return self.root / "incidents.json"

    @property
    def store_dir(self) -> Path:
        return self.root / "store"

    def ensure_dir(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)

    # -- save -----------------------------------------------------------

    def save_stations(self, stations: list[StationRecord]) -> None:
        data = [{"name": s.name, "lon": s.pos.lon, "lat": s.pos.lat, "mode": s.mode} for s in stations]
        self.stations_path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")

    def save_critical(self, locations: list[CriticalLocation]) -> None:
        data = [{"name": c.name, "lon": c.pos.lon, "lat": c.pos.lat} for c in locations]
        self.critical_path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")

    def save_incidents(self, incidents: list[IncidentRecord]) -> None:
        data = [
            {"lon": i.pos.lon, "lat": i.pos.lat, "response_minutes": i.real_response_minutes}
            for i in incidents
        ]
        self.incidents_path.write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")

    def save_landmask(self, mask: LandMask) -> None:
        self.landmask_path.write_text(json.dumps(mask.to_json(), sort_keys=True) + "\n")

    # -- load -----------------------------------------------------------

    def load_graph(self) -> RoadGraph:
        if not self.graph_path.exists():
            raise WorkspaceError(f"no graph cache at {self.graph_path}; run ingest first")
        return load_graph(self.graph_path)

    def load_fields(self, g: RoadGraph) -> FieldCache:
        if not self.fields_path.exists():
            raise WorkspaceError(f"no field cache at {self.fields_path}; run compute-fields first")
        return FieldCache.load(self.fields_path, expect_checksum=g.checksum())

    def load_stations(self) -> list[StationRecord]:
        if not self.stations_path.exists():
            raise WorkspaceError(f"no stations at {self.stations_path}; run ingest first")
        data = json.loads(self.stations_path.read_text())
        return [StationRecord(d["name"], LonLat(d["lon"], d["lat"]), d["mode"]) for d in data]

    def load_critical(self) -> list[CriticalLocation]:
        if not self.critical_path.exists():
            return []
        data = json.loads(self.critical_path.read_text())
        return [CriticalLocation(d["name"], LonLat(d["lon"], d["lat"])) for d in data]

    def load_incidents(self) -> list[IncidentRecord]:
        if not self.incidents_path.exists():
            raise WorkspaceError(f"no incidents at {self.incidents_path}")
        data = json.loads(self.incidents_path.read_text())
        return [IncidentRecord(LonLat(d["lon"], d["lat"]), d["response_minutes"]) for d in data]

    def load_landmask(self) -> LandMask | None:
        if not self.landmask_path.exists():
            return None
        return LandMask.from_json(json.loads(self.landmask_path.read_text()))

    def build_engine(self) -> ScenarioEngine:
        g = self.load_graph()
        cache = self.load_fields(g)
        return ScenarioEngine(g, cache, critical=self.load_critical())

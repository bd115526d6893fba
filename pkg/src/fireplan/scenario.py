"""Baseline and what-if worlds: banding, difference maps, compliance
reports, relocations and brute-force placement search."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .geo import LonLat
from .graph import RoadGraph
from .osm import CriticalLocation, StationRecord
from .routing import (
    CombinedField,
    FieldCache,
    TravelTimeField,
    combine_fields,
    dijkstra_one_to_all,
)

# Statutory thresholds on the response time (callout delay + travel time).
BAND_EDGES_S = (600.0, 1200.0, 1800.0)

DEFAULT_DELAY_MIN = {"full_time": 0.0, "part_time": 5.0}

# A relocated station must snap to a road node within this distance.
DEFAULT_SNAP_M = 1000.0

CRITICAL_MATCH_M = 100.0
CRITICAL_LIMIT_MIN = 10.0


class TimeBand(enum.IntEnum):
    GREEN = 0  # < 10 min
    AMBER = 1  # 10-20 min
    RED = 2  # 20-30 min
    BLUE = 3  # > 30 min
    BROWN = 4  # unreachable in the baseline (and therefore always)
    BLACK = 5  # unreachable only under this scenario


class DiffClass(enum.IntEnum):
    UNCHANGED = 0
    IMPROVED = 1
    WORSENED = 2
    NEWLY_UNREACHABLE = 3
    NEWLY_REACHABLE = 4


class ScenarioError(Exception):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One what-if world over a fixed station list.

    speed_factor and time_scale both multiply travel times (not callout
    delays): speed_factor models slower driving, time_scale the empirical
    calibration factor. They are kept separate so reports can name them.
    """

    open: tuple[bool, ...]
    mode: tuple[str, ...]
    callout_delay_override: dict[str, float] = field(default_factory=dict)  # minutes per mode
    speed_factor: float = 1.0
    time_scale: float = 1.0
    relocations: dict[int, LonLat] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.open) != len(self.mode):
            raise ScenarioError("open and mode must have one entry per station")
        for m in self.mode:
            if m not in DEFAULT_DELAY_MIN:
                raise ScenarioError(f"unknown station mode {m!r}")
        for m in self.callout_delay_override:
            if m not in DEFAULT_DELAY_MIN:
                raise ScenarioError(f"unknown mode {m!r} in callout_delay_override")
        for m, v in self.callout_delay_override.items():
            if v < 0:
                raise ScenarioError(f"callout delay for {m} must be >= 0")
        if self.speed_factor <= 0:
            raise ScenarioError("speed_factor must be > 0")
        if self.time_scale <= 0:
            raise ScenarioError("time_scale must be > 0")
        for idx in self.relocations:
            if not (0 <= idx < len(self.open)):
                raise ScenarioError(f"relocation station index {idx} out of range")

    @classmethod
    def baseline(cls, stations: list[StationRecord]) -> "ScenarioConfig":
        return cls(
            open=tuple(True for _ in stations),
            mode=tuple(s.mode for s in stations),
        )

    def delay_minutes(self, station: int) -> float:
        mode = self.mode[station]
        return float(self.callout_delay_override.get(mode, DEFAULT_DELAY_MIN[mode]))

    def to_json(self) -> dict[str, Any]:
        return {
            "open": list(self.open),
            "mode": list(self.mode),
            "callout_delay_override": dict(self.callout_delay_override),
            "speed_factor": self.speed_factor,
            "time_scale": self.time_scale,
            "relocations": {
                str(i): {"lon": p.lon, "lat": p.lat} for i, p in sorted(self.relocations.items())
            },
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "ScenarioConfig":
        try:
            return cls(
                open=tuple(bool(v) for v in data["open"]),
                mode=tuple(str(m) for m in data["mode"]),
                callout_delay_override={
                    str(k): float(v) for k, v in (data.get("callout_delay_override") or {}).items()
                },
                speed_factor=float(data.get("speed_factor", 1.0)),
                time_scale=float(data.get("time_scale", 1.0)),
                relocations={
                    int(k): LonLat(float(v["lon"]), float(v["lat"]))
                    for k, v in (data.get("relocations") or {}).items()
                },
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"invalid scenario config: {exc}") from exc

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def digest(self, graph_checksum: str) -> str:
        h = hashlib.sha256()
        h.update(self.canonical_json().encode("utf-8"))
        h.update(graph_checksum.encode("ascii"))
        return h.hexdigest()[:24]


@dataclass
class TimeBandMap:
    bands: np.ndarray  # uint8 [n] of TimeBand values
    scenario_id: str
    counts: dict[str, int]

    @classmethod
    def from_bands(cls, bands: np.ndarray, scenario_id: str) -> "TimeBandMap":
        counts = {band.name.lower(): int((bands == band).sum()) for band in TimeBand}
        return cls(bands=bands, scenario_id=scenario_id, counts=counts)


@dataclass
class DiffMap:
    classes: np.ndarray  # uint8 [n] of DiffClass values
    scenario_id: str
    counts: dict[str, int]

    @classmethod
    def from_classes(cls, classes: np.ndarray, scenario_id: str) -> "DiffMap":
        counts = {dc.name.lower(): int((classes == dc).sum()) for dc in DiffClass}
        return cls(classes=classes, scenario_id=scenario_id, counts=counts)


@dataclass
class ComplianceEntry:
    name: str
    node: int | None  # graph node, None when no node within the match cutoff
    response_minutes: float | None  # None when unmatched or unreachable
    violation: bool


@dataclass
class ComplianceReport:
    entries: list[ComplianceEntry]
    violation_count: int
    max_excess_minutes: float
    unmatched: list[str]

    @classmethod
    def build(cls, entries: list[ComplianceEntry]) -> "ComplianceReport":
        violations = [
            e for e in entries if e.violation and e.response_minutes is not None
        ]
        max_excess = max(
            (e.response_minutes - CRITICAL_LIMIT_MIN for e in violations), default=0.0
        )
        return cls(
            entries=entries,
            violation_count=sum(1 for e in entries if e.violation),
            max_excess_minutes=float(max_excess),
            unmatched=[e.name for e in entries if e.node is None],
        )


def band_map(
    combined: CombinedField, baseline_unreachable: np.ndarray, scenario_id: str = ""
) -> TimeBandMap:
    """Discretise response times into the statutory bands.

    Bands are half-open with the boundary going up (10.0 minutes is amber,
    "less than 10 minutes" is green). Baseline-unreachable nodes are brown
    in every scenario; nodes unreachable only here are black.
    """
    t = combined.best_time
    bands = np.full(t.shape, TimeBand.BLUE, dtype=np.uint8)
    bands[t < BAND_EDGES_S[2]] = TimeBand.RED
    bands[t < BAND_EDGES_S[1]] = TimeBand.AMBER
    bands[t < BAND_EDGES_S[0]] = TimeBand.GREEN
    unreachable = combined.unreachable
    bands[unreachable] = TimeBand.BLACK
    bands[baseline_unreachable] = TimeBand.BROWN
    return TimeBandMap.from_bands(bands, scenario_id)


def diff_map(scenario: CombinedField, baseline: CombinedField, scenario_id: str = "") -> DiffMap:
    """Per-node comparison of a scenario against the baseline.

    Exact equality counts as unchanged; nodes unreachable in both worlds are
    unchanged too.
    """
    if scenario.best_time.shape != baseline.best_time.shape:
        raise ValueError("scenario and baseline fields cover different graphs")
    s, b = scenario.best_time, baseline.best_time
    s_reach = np.isfinite(s)
    b_reach = np.isfinite(b)
    classes = np.full(s.shape, DiffClass.UNCHANGED, dtype=np.uint8)
    both = s_reach & b_reach
    classes[both & (s < b)] = DiffClass.IMPROVED
    classes[both & (s > b)] = DiffClass.WORSENED
    classes[b_reach & ~s_reach] = DiffClass.NEWLY_UNREACHABLE
    classes[~b_reach & s_reach] = DiffClass.NEWLY_REACHABLE
    return DiffMap.from_classes(classes, scenario_id)


def compliance_report(
    combined: CombinedField,
    locations: list[CriticalLocation],
    g: RoadGraph,
    match_max_dist: float = CRITICAL_MATCH_M,
) -> ComplianceReport:
    """Response time to each critical location (nearest road node within the
    match cutoff); flags the ones over the 10-minute limit."""
    entries = []
    for loc in locations:
        node = g.nearest_node(loc.pos, max_dist=match_max_dist)
        if node is None:
            entries.append(ComplianceEntry(loc.name, None, None, violation=False))
            continue
        t = combined.best_time[node]
        if not np.isfinite(t):
            entries.append(ComplianceEntry(loc.name, node, None, violation=True))
            continue
        minutes = float(t / 60.0)
        entries.append(
            ComplianceEntry(loc.name, node, minutes, violation=minutes > CRITICAL_LIMIT_MIN)
        )
    return ComplianceReport.build(entries)


class ScenarioEngine:
    """Evaluates scenarios against cached per-station fields.

    Closure, mode, delay and speed-factor scenarios recombine the cached
    fields without re-running any shortest-path search; relocations trigger
    one fresh Dijkstra per new location (memoised by snapped node).
    """

    def __init__(
        self,
        g: RoadGraph,
        cache: FieldCache,
        critical: list[CriticalLocation] | None = None,
        snap_max_dist: float = DEFAULT_SNAP_M,
    ):
        if cache.graph_checksum != g.checksum():
            raise ValueError("field cache does not match the graph")
        self.graph = g
        self.cache = cache
        self.critical = critical or []
        self.snap_max_dist = snap_max_dist
        self._relocated_fields: dict[int, TravelTimeField] = {}
        self._baseline: CombinedField | None = None

    @property
    def stations(self) -> list[StationRecord]:
        return self.cache.stations

    def baseline_config(self) -> ScenarioConfig:
        return ScenarioConfig.baseline(self.stations)

    def baseline(self) -> CombinedField:
        if self._baseline is None:
            self._baseline = self.evaluate(self.baseline_config())
        return self._baseline

    def baseline_unreachable(self) -> np.ndarray:
        return self.baseline().unreachable

    def snap(self, pos: LonLat) -> int | None:
        return self.graph.nearest_node(pos, max_dist=self.snap_max_dist)

    def field_from_node(self, node: int) -> TravelTimeField:
        if node not in self._relocated_fields:
            self._relocated_fields[node] = dijkstra_one_to_all(self.graph, node)
            # Unbounded growth only matters for placement sweeps over many
            # candidates; cap the memo to a sane size.
            if len(self._relocated_fields) > 64:
                self._relocated_fields.pop(next(iter(self._relocated_fields)))
        return self._relocated_fields[node]

    def evaluate(self, cfg: ScenarioConfig) -> CombinedField:
        if len(cfg.open) != len(self.stations):
            raise ScenarioError(
                f"config covers {len(cfg.open)} stations, dataset has {len(self.stations)}"
            )
        if not any(cfg.open):
            raise ScenarioError("all stations are closed")

        fields: list[TravelTimeField] = []
        for i in range(len(self.stations)):
            if i in cfg.relocations and cfg.open[i]:
                node = self.snap(cfg.relocations[i])
                if node is None:
                    raise ScenarioError(
                        f"relocated station {i} snaps to no road node within "
                        f"{self.snap_max_dist} m"
                    )
                fields.append(self.field_from_node(node))
            else:
                fields.append(self.cache.fields[i])

        scale = cfg.speed_factor * cfg.time_scale
        if scale != 1.0:
            fields = [
                TravelTimeField(f.source, f.values * scale, f.weight) for f in fields
            ]
        delays_s = [cfg.delay_minutes(i) * 60.0 for i in range(len(self.stations))]
        return combine_fields(fields, delays_s, list(cfg.open))

    def band_map(self, cfg: ScenarioConfig) -> TimeBandMap:
        return band_map(self.evaluate(cfg), self.baseline_unreachable(), self.scenario_id(cfg))

    def diff_map(self, cfg: ScenarioConfig) -> DiffMap:
        return diff_map(self.evaluate(cfg), self.baseline(), self.scenario_id(cfg))

    def compliance(self, cfg: ScenarioConfig) -> ComplianceReport:
        return compliance_report(self.evaluate(cfg), self.critical, self.graph)

    def scenario_id(self, cfg: ScenarioConfig) -> str:
        return cfg.digest(self.graph.checksum())

    # -- scenario families ---------------------------------------------

    def sweep(self, family: str, values: list) -> list[tuple[ScenarioConfig, TimeBandMap, DiffMap]]:
        """One (config, band map, diff map) per parameter value.

        Families: 'closure' and 'mode-switch' take station indices;
        'part-time-delay' and 'full-time-delay' take minutes;
        'speed-factor' takes multipliers.
        """
        if not values:
            raise ScenarioError("sweep range is empty")
        base = self.baseline_config()
        configs = []
        for v in values:
            if family == "closure":
                flags = list(base.open)
                flags[int(v)] = False
                configs.append(replace(base, open=tuple(flags)))
            elif family == "mode-switch":
                modes = list(base.mode)
                modes[int(v)] = "part_time" if modes[int(v)] == "full_time" else "full_time"
                configs.append(replace(base, mode=tuple(modes)))
            elif family == "part-time-delay":
                configs.append(
                    replace(base, callout_delay_override={"part_time": float(v)})
                )
            elif family == "full-time-delay":
                configs.append(
                    replace(base, callout_delay_override={"full_time": float(v)})
                )
            elif family == "speed-factor":
                configs.append(replace(base, speed_factor=float(v)))
            else:
                raise ScenarioError(f"unknown scenario family {family!r}")
        results = []
        for cfg in configs:
            combined = self.evaluate(cfg)
            sid = self.scenario_id(cfg)
            results.append(
                (
                    cfg,
                    band_map(combined, self.baseline_unreachable(), sid),
                    diff_map(combined, self.baseline(), sid),
                )
            )
        return results

    # -- placement search ----------------------------------------------

    def optimize_placement(
        self,
        station: int,
        candidates: list[int],
        objective: str = "max_response",
    ) -> list[tuple[int, float]]:
        """Rank candidate nodes for one station's location.

        Returns (node, objective value) sorted best first; ties break on the
        lower node index, so the ranking is independent of candidate order.
        """
        if not candidates:
            raise ScenarioError("candidate list is empty")
        if not (0 <= station < len(self.stations)):
            raise ScenarioError(f"station index {station} out of range")
        base = self.baseline_config()
        scored: list[tuple[float, int]] = []
        for node in candidates:
            cfg = replace(
                base,
                relocations={station: self.graph.node_pos(int(node))},
            )
            combined = self.evaluate(cfg)
            if objective == "max_response":
                value = combined.max_finite_minutes()
            elif objective == "violation_count":
                value = float(compliance_report(combined, self.critical, self.graph).violation_count)
            else:
                raise ScenarioError(f"unknown objective {objective!r}")
            scored.append((value, int(node)))
        scored.sort()
        return [(node, value) for value, node in scored]

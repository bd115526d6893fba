"""Fire-service response-time planning over a real road network."""

from .geo import LonLat, LocalXY, RegionPolygon, UtmCoord, haversine_distance, haversine_project, point_in_polygon, utm_to_lonlat
from .graph import RoadGraph, build_graph, scale_speeds
from .routing import CombinedField, TravelTimeField, combine_fields, dijkstra_one_to_all, station_areas
from .scenario import (
    DiffClass,
    ScenarioConfig,
    ScenarioEngine,
    TimeBand,
    band_map,
    compliance_report,
    diff_map,
)
from .calibration import estimate_scale_factor, fit_gamma, match_incidents

__version__ = "0.1.0"

__all__ = [
    "LonLat",
    "LocalXY",
    "RegionPolygon",
    "UtmCoord",
    "haversine_distance",
    "haversine_project",
    "point_in_polygon",
    "utm_to_lonlat",
    "RoadGraph",
    "build_graph",
    "scale_speeds",
    "CombinedField",
    "TravelTimeField",
    "combine_fields",
    "dijkstra_one_to_all",
    "station_areas",
    "DiffClass",
    "ScenarioConfig",
    "ScenarioEngine",
    "TimeBand",
    "band_map",
    "compliance_report",
    "diff_map",
    "estimate_scale_factor",
    "fit_gamma",
    "match_incidents",
    "__version__",
]

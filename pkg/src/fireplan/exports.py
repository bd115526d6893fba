"""Serialisation of maps and reports: GeoJSON point collections, delimited
CSV, and plain-text summaries. All writers are deterministic (sorted keys,
repr-based float formatting) so repeated runs produce identical bytes."""

from __future__ import annotations

import csv
import io
import json
from typing import Any

import numpy as np

from .calibration import CalibrationReport, histogram_minutes
from .graph import RoadGraph
from .routing import CombinedField
from .scenario import (
    CRITICAL_LIMIT_MIN,
    ComplianceReport,
    DiffClass,
    DiffMap,
    ScenarioConfig,
    TimeBand,
    TimeBandMap,
)

BAND_NAMES = {band: band.name.lower() for band in TimeBand}
DIFF_NAMES = {dc: dc.name.lower() for dc in DiffClass}


def band_geojson(g: RoadGraph, combined: CombinedField, bands: TimeBandMap) -> dict[str, Any]:
    features = []
    seconds = combined.best_time
    for i in range(g.n_nodes):
        t = seconds[i]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(g.lon[i]), float(g.lat[i])]},
                "properties": {
                    "node_id": int(g.osm_ids[i]),
                    "band": BAND_NAMES[TimeBand(bands.bands[i])],
                    "seconds": float(t) if np.isfinite(t) else None,
                    "station": int(combined.best_station[i]),
                },
            }
        )
    return {
        "type": "FeatureCollection",
        "properties": {"scenario": bands.scenario_id, "counts": bands.counts},
        "features": features,
    }


def diff_geojson(g: RoadGraph, diff: DiffMap) -> dict[str, Any]:
    features = []
    for i in range(g.n_nodes):
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [float(g.lon[i]), float(g.lat[i])]},
                "properties": {
                    "node_id": int(g.osm_ids[i]),
                    "diff": DIFF_NAMES[DiffClass(diff.classes[i])],
                },
            }
        )
    return {
        "type": "FeatureCollection",
        "properties": {"scenario": diff.scenario_id, "counts": diff.counts},
        "features": features,
    }


def band_csv(g: RoadGraph, combined: CombinedField, bands: TimeBandMap) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node_id", "lon", "lat", "seconds", "band"])
    seconds = combined.best_time
    for i in range(g.n_nodes):
        t = seconds[i]
        writer.writerow(
            [
                int(g.osm_ids[i]),
                repr(float(g.lon[i])),
                repr(float(g.lat[i])),
                repr(float(t)) if np.isfinite(t) else "",
                BAND_NAMES[TimeBand(bands.bands[i])],
            ]
        )
    return buf.getvalue()


def dump_json(data: dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"


def scenario_summary(
    cfg: ScenarioConfig,
    combined: CombinedField,
    bands: TimeBandMap,
    compliance: ComplianceReport | None,
) -> dict[str, Any]:
    summary: dict[str, Any] = {
        "scenario": bands.scenario_id,
        "config": cfg.to_json(),
        "max_response_minutes": combined.max_finite_minutes(),
        "band_counts": bands.counts,
        "unreachable_count": int(combined.unreachable.sum()),
    }
    if compliance is not None:
        summary["compliance"] = {
            "violation_count": compliance.violation_count,
            "max_excess_minutes": compliance.max_excess_minutes,
            "unmatched": compliance.unmatched,
            "violations": [
                {"name": e.name, "response_minutes": e.response_minutes}
                for e in compliance.entries
                if e.violation
            ],
        }
    return summary


def compliance_text(report: ComplianceReport) -> str:
    lines = ["critical-location compliance", "=" * 28, ""]
    width = max((len(e.name) for e in report.entries), default=8)
    lines.append(f"{'location':<{width}}  {'minutes':>8}  status")
    lines.append("-" * (width + 20))
    for e in report.entries:
        if e.node is None:
            status, minutes = "UNMATCHED", "-"
        elif e.response_minutes is None:
            status, minutes = "UNREACHABLE", "-"
        else:
            status = "VIOLATION" if e.violation else "ok"
            minutes = f"{e.response_minutes:.1f}"
        lines.append(f"{e.name:<{width}}  {minutes:>8}  {status}")
    lines.append("")
    lines.append(f"locations: {len(report.entries)}")
    lines.append(f"violations (> {CRITICAL_LIMIT_MIN:.0f} min): {report.violation_count}")
    lines.append(f"max excess: {report.max_excess_minutes:.1f} min")
    if report.unmatched:
        lines.append(f"unmatched (no node within cutoff): {', '.join(report.unmatched)}")
    return "\n".join(lines) + "\n"


def calibration_text(report: CalibrationReport) -> str:
    lines = [
        "incident calibration report",
        "=" * 27,
        "",
        f"incidents matched: {report.matched_count} (dropped beyond cutoff: {report.dropped})",
        "",
        f"scale factor (mean ratio):        {report.factor_mean_ratio:.3f}",
        f"scale factor (gamma-mean ratio):  {report.factor_gamma_means:.3f}",
        f"scale factor (KS-minimising):     {report.factor_ks:.3f}",
        "",
        f"real times:         Gamma(k={report.real_fit.shape:.3f}, theta={report.real_fit.scale:.3f}), "
        f"mean {report.real_fit.mean:.2f} min",
        f"model times:        Gamma(k={report.model_fit.shape:.3f}, theta={report.model_fit.scale:.3f}), "
        f"mean {report.model_fit.mean:.2f} min",
        f"scaled model times: Gamma(k={report.scaled_model_fit.shape:.3f}, "
        f"theta={report.scaled_model_fit.scale:.3f}), mean {report.scaled_model_fit.mean:.2f} min",
    ]
    return "\n".join(lines) + "\n"


def calibration_csv(report: CalibrationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lon", "lat", "node", "real_minutes", "model_minutes", "scaled_model_minutes"])
    for m in report.matched:
        writer.writerow(
            [
                repr(m.incident.pos.lon),
                repr(m.incident.pos.lat),
                m.node,
                repr(m.incident.real_response_minutes),
                repr(m.model_minutes),
                repr(m.model_minutes * report.factor_mean_ratio),
            ]
        )
    return buf.getvalue()


def histogram_csv(report: CalibrationReport) -> str:
    real = np.array([m.incident.real_response_minutes for m in report.matched])
    model = np.array([m.model_minutes for m in report.matched])
    scaled = model * report.factor_mean_ratio
    real_c, edges = histogram_minutes(real)
    model_c, _ = histogram_minutes(model)
    scaled_c, _ = histogram_minutes(scaled)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_start_minutes", "bin_end_minutes", "real", "model", "scaled_model"])
    for i in range(len(real_c)):
        writer.writerow(
            [repr(float(edges[i])), repr(float(edges[i + 1])), int(real_c[i]), int(model_c[i]), int(scaled_c[i])]
        )
    return buf.getvalue()

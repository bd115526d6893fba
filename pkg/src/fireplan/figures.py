"""Matplotlib renderings of the coverage maps and calibration histograms.
Figures are written to files next to the delimited exports; no interactive
backend is required."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.lines import Line2D  # noqa: E402
from matplotlib.patches import Polygon as MplPolygon  # noqa: E402

from .calibration import CalibrationReport, histogram_minutes  # noqa: E402
from .graph import RoadGraph  # noqa: E402
from .osm import LandMask, StationRecord  # noqa: E402
from .scenario import DiffClass, DiffMap, TimeBand, TimeBandMap  # noqa: E402

BAND_COLORS = {
    TimeBand.GREEN: "#1a9641",
    TimeBand.AMBER: "#ffbf00",
    TimeBand.RED: "#d7191c",
    TimeBand.BLUE: "#2c7bb6",
    TimeBand.BROWN: "#8c510a",
    TimeBand.BLACK: "#000000",
}

DIFF_COLORS = {
    DiffClass.UNCHANGED: "#bdbdbd",
    DiffClass.IMPROVED: "#1a9641",
    DiffClass.WORSENED: "#d7191c",
    DiffClass.NEWLY_UNREACHABLE: "#000000",
    DiffClass.NEWLY_REACHABLE: "#2c7bb6",
}

LAND_COLOR = "#d9d9d9"

_BAND_LABELS = {
    TimeBand.GREEN: "< 10 min",
    TimeBand.AMBER: "10-20 min",
    TimeBand.RED: "20-30 min",
    TimeBand.BLUE: "> 30 min",
    TimeBand.BROWN: "always unreachable",
    TimeBand.BLACK: "unreachable here",
}


def _base_map(g: RoadGraph, mask: LandMask | None):
    fig, ax = plt.subplots(figsize=(9, 7))
    if mask is not None:
        for ring in mask.polygons:
            xy = [(v.lon, v.lat) for v in ring]
            ax.add_patch(MplPolygon(xy, closed=True, facecolor=LAND_COLOR, edgecolor="none", zorder=0))
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    min_lon, min_lat, max_lon, max_lat = g.bbox()
    pad_lon = (max_lon - min_lon) * 0.03 or 0.01
    pad_lat = (max_lat - min_lat) * 0.03 or 0.01
    ax.set_xlim(min_lon - pad_lon, max_lon + pad_lon)
    ax.set_ylim(min_lat - pad_lat, max_lat + pad_lat)
    # Roughly correct aspect at this latitude.
    ax.set_aspect(1.0 / np.cos(np.radians((min_lat + max_lat) / 2.0)))
    return fig, ax


def _draw_stations(ax, g: RoadGraph, stations: list[StationRecord] | None):
    if not stations:
        return
    ax.scatter(
        [s.pos.lon for s in stations],
        [s.pos.lat for s in stations],
        marker="s",
        s=46,
        facecolor="red",
        edgecolor="black",
        zorder=5,
        label="fire station",
    )


def render_band_map(
    g: RoadGraph,
    bands: TimeBandMap,
    path: Path | str,
    mask: LandMask | None = None,
    stations: list[StationRecord] | None = None,
    title: str = "response-time bands",
) -> None:
    fig, ax = _base_map(g, mask)
    for band in TimeBand:
        sel = bands.bands == band
        if not sel.any():
            continue
        ax.scatter(
            g.lon[sel],
            g.lat[sel],
            s=2,
            color=BAND_COLORS[band],
            marker=".",
            linewidths=0,
            zorder=2,
        )
    _draw_stations(ax, g, stations)
    handles = [
        Line2D([], [], marker=".", linestyle="", color=BAND_COLORS[b], label=_BAND_LABELS[b])
        for b in TimeBand
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=8)
    ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_diff_map(
    g: RoadGraph,
    diff: DiffMap,
    path: Path | str,
    mask: LandMask | None = None,
    stations: list[StationRecord] | None = None,
    title: str = "difference vs baseline",
) -> None:
    fig, ax = _base_map(g, mask)
    for dc in DiffClass:
        sel = diff.classes == dc
        if not sel.any():
            continue
        ax.scatter(
            g.lon[sel],
            g.lat[sel],
            s=2,
            color=DIFF_COLORS[dc],
            marker=".",
            linewidths=0,
            zorder=2,
        )
    _draw_stations(ax, g, stations)
    handles = [
        Line2D([], [], marker=".", linestyle="", color=DIFF_COLORS[d], label=d.name.lower())
        for d in DiffClass
    ]
    ax.legend(handles=handles, loc="upper right", fontsize=8)
    ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_histograms(report: CalibrationReport, path: Path | str) -> None:
    """Real vs model response times, raw and after applying the factor."""
    real = np.array([m.incident.real_response_minutes for m in report.matched])
    model = np.array([m.model_minutes for m in report.matched])
    scaled = model * report.factor_mean_ratio

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharey=True)
    for ax, model_values, label in (
        (axes[0], model, "model"),
        (axes[1], scaled, f"model x {report.factor_mean_ratio:.2f}"),
    ):
        counts_r, edges = histogram_minutes(real)
        counts_m, _ = histogram_minutes(model_values)
        centers = (edges[:-1] + edges[1:]) / 2.0
        width = (edges[1] - edges[0]) * 0.42
        ax.bar(centers - width / 2, counts_r, width=width, color="#2c7bb6", label="real")
        ax.bar(centers + width / 2, counts_m, width=width, color="#1a9641", label=label)
        ax.set_xlabel("response time (minutes)")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("incidents")
    fig.suptitle("real vs model response times")
    fig.savefig(path, dpi=130)
    plt.close(fig)

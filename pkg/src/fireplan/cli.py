"""Batch driver: ingest, field precomputation, scenario runs and sweeps,
incident comparison and artifact export, without the HTTP service.

Exit codes: 0 ok, 1 computation error, 2 input error. Logs go to stderr;
artifacts only ever go to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import exports
from .binio import CacheFormatError
from .calibration import compare_incidents
from .graph import build_graph, save_graph
from .osm import (
    CsvFormatError,
    OverpassParseError,
    build_land_mask,
    crop_coastline,
    crop_highways,
    load_critical_csv,
    load_incidents_csv,
    load_region_csv,
    load_stations_csv,
    parse_overpass_coastline,
    parse_overpass_highways,
)
from .routing import compute_station_fields
from .scenario import ScenarioConfig, ScenarioEngine, ScenarioError
from .workspace import Workspace, WorkspaceError


class InputError(Exception):
    """User-facing input problem; exits with status 2."""


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _require(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {p}")
    return p


def _workspace(args: argparse.Namespace) -> Workspace:
    return Workspace(Path(args.data))


def _engine(args: argparse.Namespace) -> ScenarioEngine:
    try:
        return _workspace(args).build_engine()
    except (WorkspaceError, CacheFormatError) as exc:
        raise InputError(str(exc)) from exc


def _load_config(args: argparse.Namespace, engine: ScenarioEngine) -> ScenarioConfig:
    if getattr(args, "config", None):
        path = _require(args.config)
        try:
            return ScenarioConfig.from_json(json.loads(path.read_text()))
        except (json.JSONDecodeError, ScenarioError) as exc:
            raise InputError(f"{path}: {exc}") from exc
    return engine.baseline_config()


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    ws.ensure_dir()
    region = load_region_csv(_require(args.region))

    log(f"parsing highways from {args.highways}")
    with open(_require(args.highways), "rb") as f:
        net = parse_overpass_highways(f)
    log(f"  {len(net.nodes)} nodes, {len(net.ways)} ways before crop")
    nodes, ways = crop_highways(net.nodes, net.ways, region)
    log(f"  {len(nodes)} nodes, {len(ways)} ways inside the region")

    g = build_graph(nodes, ways)
    log(f"  graph: {g.n_nodes} nodes, {g.n_edges} directed edges")
    save_graph(g, ws.graph_path)

    log(f"parsing coastline from {args.coastline}")
    with open(_require(args.coastline), "rb") as f:
        coast = parse_overpass_coastline(f)
    coast = crop_coastline(coast, region)
    mask = build_land_mask(coast.nodes, coast.edges, region, min_island_area=args.min_island_area)
    log(f"  land mask: {len(mask.polygons)} polygons")
    ws.save_landmask(mask)

    stations = load_stations_csv(_require(args.stations))
    ws.save_stations(stations)
    log(f"  stations: {len(stations)}")
    critical = load_critical_csv(_require(args.critical))
    ws.save_critical(critical)
    log(f"  critical locations: {len(critical)}")
    if args.incidents:
        incidents = load_incidents_csv(_require(args.incidents))
        ws.save_incidents(incidents)
        log(f"  incidents: {len(incidents)}")

    for w in net.warnings + coast.warnings + g.warnings + mask.warnings:
        log(f"  warning: {w}")
    log(f"ingest complete: {ws.root}")
    return 0


def cmd_compute_fields(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    try:
        g = ws.load_graph()
        stations = ws.load_stations()
    except WorkspaceError as exc:
        raise InputError(str(exc)) from exc
    jobs = args.jobs or os.cpu_count() or 1
    log(f"computing {len(stations)} station fields (jobs={jobs})")
    cache = compute_station_fields(g, stations, jobs=jobs)
    cache.save(ws.fields_path)
    log(f"fields written to {ws.fields_path}")
    return 0


def _write_scenario_artifacts(
    engine: ScenarioEngine,
    cfg: ScenarioConfig,
    out: Path,
    prefix: str = "",
    figures: bool = True,
    mask=None,
) -> None:
    out.mkdir(parents=True, exist_ok=True)
    combined = engine.evaluate(cfg)
    sid = engine.scenario_id(cfg)
    from .scenario import band_map as make_bands
    from .scenario import compliance_report as make_compliance
    from .scenario import diff_map as make_diff

    bands = make_bands(combined, engine.baseline_unreachable(), sid)
    diff = make_diff(combined, engine.baseline(), sid)
    compliance = make_compliance(combined, engine.critical, engine.graph)

    (out / f"{prefix}config.json").write_text(cfg.canonical_json() + "\n")
    (out / f"{prefix}bands.geojson").write_text(
        exports.dump_json(exports.band_geojson(engine.graph, combined, bands))
    )
    (out / f"{prefix}diff.geojson").write_text(exports.dump_json(exports.diff_geojson(engine.graph, diff)))
    (out / f"{prefix}bands.csv").write_text(exports.band_csv(engine.graph, combined, bands))
    (out / f"{prefix}compliance.txt").write_text(exports.compliance_text(compliance))
    (out / f"{prefix}summary.json").write_text(
        exports.dump_json(exports.scenario_summary(cfg, combined, bands, compliance))
    )
    if figures:
        from .figures import render_band_map, render_diff_map

        render_band_map(
            engine.graph, bands, out / f"{prefix}bands.png", mask=mask, stations=engine.stations
        )
        render_diff_map(
            engine.graph, diff, out / f"{prefix}diff.png", mask=mask, stations=engine.stations
        )


def cmd_scenario_run(args: argparse.Namespace) -> int:
    engine = _engine(args)
    cfg = _load_config(args, engine)
    out = Path(args.out)
    mask = _workspace(args).load_landmask()
    _write_scenario_artifacts(engine, cfg, out, figures=not args.no_figures, mask=mask)
    log(f"scenario artifacts written to {out}")
    return 0


def cmd_scenario_sweep(args: argparse.Namespace) -> int:
    engine = _engine(args)
    family = args.family
    if family in ("part-time-delay", "full-time-delay", "closure", "mode-switch"):
        values: list = list(range(int(args.start), int(args.stop) + 1))
    else:
        values = []
        v = float(args.start)
        while v <= float(args.stop) + 1e-9:
            values.append(round(v, 6))
            v += float(args.step)
    if not values:
        raise InputError("sweep range is empty")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mask = _workspace(args).load_landmask()
    log(f"sweeping {family} over {values}")
    results = engine.sweep(family, values)
    for value, (cfg, bands, diff) in zip(values, results):
        tag = str(value).replace(".", "_")
        combined = engine.evaluate(cfg)
        (out / f"bands_{tag}.geojson").write_text(
            exports.dump_json(exports.band_geojson(engine.graph, combined, bands))
        )
        (out / f"diff_{tag}.geojson").write_text(
            exports.dump_json(exports.diff_geojson(engine.graph, diff))
        )
        if not args.no_figures:
            from .figures import render_band_map, render_diff_map

            render_band_map(
                engine.graph,
                bands,
                out / f"bands_{tag}.png",
                mask=mask,
                stations=engine.stations,
                title=f"{family} = {value}",
            )
            render_diff_map(
                engine.graph,
                diff,
                out / f"diff_{tag}.png",
                mask=mask,
                stations=engine.stations,
                title=f"{family} = {value} vs baseline",
            )
    log(f"{len(results)} band maps + {len(results)} diff maps written to {out}")
    return 0


def cmd_compare_incidents(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    engine = _engine(args)
    if args.incidents:
        incidents = load_incidents_csv(_require(args.incidents))
    else:
        try:
            incidents = ws.load_incidents()
        except WorkspaceError as exc:
            raise InputError(str(exc)) from exc
    report = compare_incidents(incidents, engine.graph, engine.baseline())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration.txt").write_text(exports.calibration_text(report))
    (out / "incidents.csv").write_text(exports.calibration_csv(report))
    (out / "histogram.csv").write_text(exports.histogram_csv(report))
    if not args.no_figures:
        from .figures import render_histograms

        render_histograms(report, out / "histogram.png")
    log(
        f"matched {report.matched_count} incidents (dropped {report.dropped}); "
        f"scale factor {report.factor_mean_ratio:.2f}"
    )
    log(f"calibration artifacts written to {out}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    engine = _engine(args)
    cfg = _load_config(args, engine)
    combined = engine.evaluate(cfg)
    sid = engine.scenario_id(cfg)
    from .scenario import band_map as make_bands
    from .scenario import compliance_report as make_compliance
    from .scenario import diff_map as make_diff

    bands = make_bands(combined, engine.baseline_unreachable(), sid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "geojson":
        if args.layer == "diff":
            payload = exports.diff_geojson(engine.graph, make_diff(combined, engine.baseline(), sid))
        else:
            payload = exports.band_geojson(engine.graph, combined, bands)
        out.write_text(exports.dump_json(payload))
    elif args.format == "csv":
        out.write_text(exports.band_csv(engine.graph, combined, bands))
    else:  # report
        compliance = make_compliance(combined, engine.critical, engine.graph)
        out.write_text(exports.compliance_text(compliance))
    log(f"wrote {out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_workspace(args), max_jobs=args.jobs or 2)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fireplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", default=os.environ.get("FIREPLAN_DATA", "data"), help="workspace directory")

    p = sub.add_parser("ingest", help="parse exports, build the graph cache and land mask")
    add_data(p)
    p.add_argument("--highways", required=True, help="Overpass highways export (JSON)")
    p.add_argument("--coastline", required=True, help="Overpass coastline export (JSON)")
    p.add_argument("--region", required=True, help="region polygon CSV (lon,lat or easting,northing)")
    p.add_argument("--stations", required=True, help="stations CSV (name,lon,lat[,mode])")
    p.add_argument("--critical", required=True, help="critical locations CSV (name,lon,lat)")
    p.add_argument("--incidents", help="incidents CSV (lon,lat,response_minutes)")
    p.add_argument("--min-island-area", type=float, default=10_000.0, help="m^2; smaller islands dropped")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("compute-fields", help="run one Dijkstra per station and cache the fields")
    add_data(p)
    p.add_argument("--jobs", type=int, default=0, help="parallel workers (default: CPU count)")
    p.set_defaults(func=cmd_compute_fields)

    p_scenario = sub.add_parser("scenario", help="evaluate what-if scenarios")
    scen_sub = p_scenario.add_subparsers(dest="scenario_command", required=True)

    p = scen_sub.add_parser("run", help="evaluate one scenario and export its artifacts")
    add_data(p)
    p.add_argument("--config", help="scenario config JSON (omit for the baseline)")
    p.add_argument("--baseline", action="store_true", help="run the baseline scenario (default)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_scenario_run)

    p = scen_sub.add_parser("sweep", help="run a scenario family over a parameter range")
    add_data(p)
    p.add_argument(
        "--family",
        required=True,
        choices=["closure", "mode-switch", "part-time-delay", "full-time-delay", "speed-factor"],
    )
    p.add_argument("--from", dest="start", required=True, help="first value")
    p.add_argument("--to", dest="stop", required=True, help="last value (inclusive)")
    p.add_argument("--step", default="0.1", help="step for speed-factor sweeps")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_scenario_sweep)

    p = sub.add_parser("compare-incidents", help="calibrate model times against incident data")
    add_data(p)
    p.add_argument("--incidents", help="incidents CSV; defaults to the ingested dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_compare_incidents)

    p = sub.add_parser("export", help="export one artifact for a scenario")
    add_data(p)
    p.add_argument("format", choices=["geojson", "csv", "report"])
    p.add_argument("--config", help="scenario config JSON (omit for the baseline)")
    p.add_argument("--layer", choices=["bands", "diff"], default="bands", help="geojson layer")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="start the HTTP service")
    add_data(p)
    p.add_argument("--host", default=os.environ.get("FIREPLAN_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("FIREPLAN_PORT", "8000")))
    p.add_argument("--jobs", type=int, default=0, help="max concurrent relocation jobs")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        log(f"error: {exc}")
        return 2
    except (CsvFormatError, OverpassParseError, FileNotFoundError) as exc:
        log(f"error: {exc}")
        return 2
    except (ScenarioError, CacheFormatError, ValueError) as exc:
        log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""HTTP service for the planner UI: graph metadata, scenario evaluation as
jobs, and GeoJSON layers. Results are content-addressed by config digest and
graph checksum, persisted on disk, and survive restarts."""

from __future__ import annotations

import json
import shutil
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from . import exports
from .geo import LonLat
from .scenario import (
    ScenarioConfig,
    ScenarioEngine,
    ScenarioError,
    band_map,
    compliance_report,
    diff_map,
)
from .workspace import Workspace, WorkspaceError

ARTIFACTS = ("summary", "bands", "diff", "compliance")


@dataclass
class Job:
    id: str
    status: str = "queued"  # queued | running | done | failed
    progress: float = 0.0
    error: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "status": self.status, "progress": self.progress, "error": self.error}


@dataclass
class ServiceState:
    workspace: Workspace | None
    engine: ScenarioEngine | None = None
    jobs: dict[str, Job] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    executor: ThreadPoolExecutor | None = None

    @property
    def store_dir(self) -> Path:
        assert self.workspace is not None
        return self.workspace.store_dir


def _artifact_path(state: ServiceState, job_id: str, name: str) -> Path:
    suffix = "geojson" if name in ("bands", "diff") else "json"
    return state.store_dir / job_id / f"{name}.{suffix}"


def _store_has(state: ServiceState, job_id: str) -> bool:
    return _artifact_path(state, job_id, "summary").exists()


def _run_scenario(state: ServiceState, job: Job, cfg: ScenarioConfig) -> None:
    engine = state.engine
    assert engine is not None
    try:
        job.status = "running"
        job.progress = 0.1
        combined = engine.evaluate(cfg)
        job.progress = 0.6
        sid = job.id
        bands = band_map(combined, engine.baseline_unreachable(), sid)
        diff = diff_map(combined, engine.baseline(), sid)
        compliance = compliance_report(combined, engine.critical, engine.graph)
        job.progress = 0.8

        target = state.store_dir / sid
        tmp = state.store_dir / f".{sid}.tmp"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        (tmp / "config.json").write_text(cfg.canonical_json() + "\n")
        (tmp / "summary.json").write_text(
            exports.dump_json(exports.scenario_summary(cfg, combined, bands, compliance))
        )
        (tmp / "bands.geojson").write_text(
            exports.dump_json(exports.band_geojson(engine.graph, combined, bands))
        )
        (tmp / "diff.geojson").write_text(exports.dump_json(exports.diff_geojson(engine.graph, diff)))
        (tmp / "compliance.json").write_text(
            exports.dump_json(
                {
                    "violation_count": compliance.violation_count,
                    "max_excess_minutes": compliance.max_excess_minutes,
                    "unmatched": compliance.unmatched,
                    "entries": [
                        {
                            "name": e.name,
                            "node": e.node,
                            "response_minutes": e.response_minutes,
                            "violation": e.violation,
                        }
                        for e in compliance.entries
                    ],
                }
            )
        )
        if target.exists():
            shutil.rmtree(tmp)
        else:
            tmp.rename(target)
        job.progress = 1.0
        job.status = "done"
    except Exception as exc:  # surfaced via the job handle
        job.status = "failed"
        job.error = str(exc)


def _submit(state: ServiceState, cfg: ScenarioConfig) -> Job:
    engine = state.engine
    assert engine is not None
    job_id = cfg.digest(engine.graph.checksum())
    with state.lock:
        existing = state.jobs.get(job_id)
        if existing is not None and existing.status != "failed":
            return existing
        if _store_has(state, job_id):
            job = Job(id=job_id, status="done", progress=1.0)
            state.jobs[job_id] = job
            return job
        job = Job(id=job_id)
        state.jobs[job_id] = job
    if cfg.relocations:
        assert state.executor is not None
        state.executor.submit(_run_scenario, state, job, cfg)
    else:
        # Cached-field scenarios are cheap; run them inline so the caller
        # gets a finished handle back.
        _run_scenario(state, job, cfg)
    return job


def create_app(
    workspace: Workspace | None,
    max_jobs: int = 2,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="fireplan service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    state = ServiceState(workspace=workspace)
    state.executor = ThreadPoolExecutor(max_workers=max_jobs)
    if workspace is not None:
        try:
            state.engine = workspace.build_engine()
            state.workspace.store_dir.mkdir(parents=True, exist_ok=True)
            # Baseline combined field is shared by every diff map; build it
            # up front rather than racing lazily from worker threads.
            state.engine.baseline()
        except WorkspaceError:
            state.engine = None
    app.state.service = state

    def engine_or_503() -> ScenarioEngine:
        if state.engine is None:
            raise HTTPException(status_code=503, detail="dataset not loaded")
        return state.engine

    def parse_config(body: dict[str, Any]) -> ScenarioConfig:
        engine = engine_or_503()
        try:
            cfg = ScenarioConfig.from_json(body)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if len(cfg.open) != len(engine.stations):
            raise HTTPException(
                status_code=400,
                detail=f"config covers {len(cfg.open)} stations, dataset has {len(engine.stations)}",
            )
        if not any(cfg.open):
            raise HTTPException(status_code=409, detail="all stations are closed")
        return cfg

    @app.get("/graph/summary")
    def graph_summary() -> dict[str, Any]:
        engine = engine_or_503()
        g = engine.graph
        min_lon, min_lat, max_lon, max_lat = g.bbox()
        return {
            "node_count": g.n_nodes,
            "edge_count": g.n_edges,
            "bbox": [min_lon, min_lat, max_lon, max_lat],
            "stations": [
                {
                    "index": i,
                    "name": s.name,
                    "lon": s.pos.lon,
                    "lat": s.pos.lat,
                    "mode": s.mode,
                    "node": engine.cache.station_nodes[i],
                }
                for i, s in enumerate(engine.stations)
            ],
            "brown_node_count": int(engine.baseline_unreachable().sum()),
        }

    @app.get("/baseline")
    def baseline() -> dict[str, Any]:
        engine = engine_or_503()
        cfg = engine.baseline_config()
        return {"config": cfg.to_json(), "scenario_id": engine.scenario_id(cfg)}

    @app.get("/landmask")
    def landmask() -> dict[str, Any]:
        engine_or_503()
        assert workspace is not None
        mask = workspace.load_landmask()
        return mask.to_json() if mask is not None else {"polygons": [], "warnings": []}

    @app.post("/scenario/evaluate")
    def evaluate(body: dict[str, Any]) -> dict[str, Any]:
        cfg = parse_config(body)
        if cfg.relocations:
            engine = engine_or_503()
            for idx, pos in cfg.relocations.items():
                if engine.snap(pos) is None:
                    raise HTTPException(
                        status_code=422,
                        detail=f"relocation of station {idx} snaps to no road node",
                    )
        return _submit(state, cfg).to_json()

    @app.get("/scenario/{job_id}")
    def job_status(job_id: str) -> dict[str, Any]:
        job = state.jobs.get(job_id)
        if job is None:
            if _store_has(state, job_id):
                return Job(id=job_id, status="done", progress=1.0).to_json()
            raise HTTPException(status_code=404, detail="unknown job")
        return job.to_json()

    @app.get("/scenario/{job_id}/{artifact}")
    def job_artifact(job_id: str, artifact: str) -> Any:
        if artifact not in ARTIFACTS:
            raise HTTPException(status_code=404, detail=f"unknown artifact {artifact!r}")
        job = state.jobs.get(job_id)
        known = job is not None or _store_has(state, job_id)
        if not known:
            raise HTTPException(status_code=404, detail="unknown job")
        if job is not None and job.status == "failed":
            raise HTTPException(status_code=409, detail=f"job failed: {job.error}")
        path = _artifact_path(state, job_id, artifact)
        if not path.exists():
            raise HTTPException(status_code=409, detail="job not finished")
        return json.loads(path.read_text())

    @app.post("/station/{index}/relocate")
    def relocate(index: int, body: dict[str, Any]) -> dict[str, Any]:
        engine = engine_or_503()
        if not (0 <= index < len(engine.stations)):
            raise HTTPException(status_code=404, detail=f"no station {index}")
        try:
            pos = LonLat(float(body["lon"]), float(body["lat"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"invalid position: {exc}") from exc
        if engine.snap(pos) is None:
            raise HTTPException(
                status_code=422,
                detail=f"position snaps to no road node within {engine.snap_max_dist} m",
            )
        cfg = replace(engine.baseline_config(), relocations={index: pos})
        return _submit(state, cfg).to_json()

    return app

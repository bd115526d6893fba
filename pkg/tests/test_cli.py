import hashlib
import json
from pathlib import Path

import pytest

from fireplan.cli import main

from dataset import Dataset


@pytest.fixture(scope="module")
def cli_workspace(dataset, tmp_path_factory):
    """One ingest + compute-fields run shared by the read-only CLI tests."""
    data = tmp_path_factory.mktemp("cli-data")
    rc = main(
        [
            "ingest",
            "--data", str(data),
            "--highways", str(dataset.highways),
            "--coastline", str(dataset.coastline),
            "--region", str(dataset.region),
            "--stations", str(dataset.stations),
            "--critical", str(dataset.critical),
            "--incidents", str(dataset.incidents),
        ]
    )
    assert rc == 0
    assert main(["compute-fields", "--data", str(data), "--jobs", "1"]) == 0
    return data


def _ingest_and_fields(dataset: Dataset, data: Path) -> None:
    assert main(
        [
            "ingest",
            "--data", str(data),
            "--highways", str(dataset.highways),
            "--coastline", str(dataset.coastline),
            "--region", str(dataset.region),
            "--stations", str(dataset.stations),
            "--critical", str(dataset.critical),
            "--incidents", str(dataset.incidents),
        ]
    ) == 0
    assert main(["compute-fields", "--data", str(data), "--jobs", "1"]) == 0


class TestIngest:
    def test_artifacts_created(self, cli_workspace):
        for name in ("graph.bin", "fields.bin", "landmask.json", "stations.json", "critical.json"):
            assert (cli_workspace / name).exists(), name

    def test_missing_file_exits_2(self, dataset, tmp_path):
        rc = main(
            [
                "ingest",
                "--data", str(tmp_path / "d"),
                "--highways", str(tmp_path / "nope.json"),
                "--coastline", str(dataset.coastline),
                "--region", str(dataset.region),
                "--stations", str(dataset.stations),
                "--critical", str(dataset.critical),
            ]
        )
        assert rc == 2

    def test_compute_fields_without_ingest_exits_2(self, tmp_path):
        assert main(["compute-fields", "--data", str(tmp_path / "missing")]) == 2


class TestScenarioRun:
    def test_baseline_artifacts(self, cli_workspace, tmp_path):
        out = tmp_path / "baseline"
        rc = main(["scenario", "run", "--baseline", "--data", str(cli_workspace), "--out", str(out)])
        assert rc == 0
        for name in (
            "config.json",
            "bands.geojson",
            "diff.geojson",
            "bands.csv",
            "compliance.txt",
            "summary.json",
            "bands.png",
            "diff.png",
        ):
            assert (out / name).exists(), name
        doc = json.loads((out / "bands.geojson").read_text())
        bands_seen = {f["properties"]["band"] for f in doc["features"]}
        assert bands_seen <= {"green", "amber", "red", "blue", "brown", "black"}

    def test_config_file_scenario(self, cli_workspace, tmp_path):
        stations = json.loads((cli_workspace / "stations.json").read_text())
        cfg = {
            "open": [True] * len(stations),
            "mode": [s["mode"] for s in stations],
            "speed_factor": 1.2,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "scen"
        rc = main(
            [
                "scenario", "run",
                "--data", str(cli_workspace),
                "--config", str(cfg_path),
                "--out", str(out),
                "--no-figures",
            ]
        )
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["speed_factor"] == 1.2

    def test_bad_config_exits_2(self, cli_workspace, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text("{not json")
        rc = main(
            [
                "scenario", "run",
                "--data", str(cli_workspace),
                "--config", str(cfg_path),
                "--out", str(tmp_path / "x"),
            ]
        )
        assert rc == 2


class TestSweep:
    def test_part_time_delay_sweep_writes_nine_pairs(self, cli_workspace, tmp_path):
        out = tmp_path / "sweep"
        rc = main(
            [
                "scenario", "sweep",
                "--data", str(cli_workspace),
                "--family", "part-time-delay",
                "--from", "1",
                "--to", "9",
                "--out", str(out),
                "--no-figures",
            ]
        )
        assert rc == 0
        assert len(list(out.glob("bands_*.geojson"))) == 9
        assert len(list(out.glob("diff_*.geojson"))) == 9

    def test_speed_factor_sweep(self, cli_workspace, tmp_path):
        out = tmp_path / "factor"
        rc = main(
            [
                "scenario", "sweep",
                "--data", str(cli_workspace),
                "--family", "speed-factor",
                "--from", "1.0",
                "--to", "1.5",
                "--step", "0.1",
                "--out", str(out),
                "--no-figures",
            ]
        )
        assert rc == 0
        assert len(list(out.glob("bands_*.geojson"))) == 6


class TestCompareIncidents:
    def test_reports_written(self, cli_workspace, tmp_path, dataset):
        out = tmp_path / "calib"
        rc = main(["compare-incidents", "--data", str(cli_workspace), "--out", str(out)])
        assert rc == 0
        text = (out / "calibration.txt").read_text()
        matched = dataset.incident_total - dataset.incident_offroad
        assert f"incidents matched: {matched}" in text
        assert (out / "incidents.csv").exists()
        assert (out / "histogram.csv").exists()
        assert (out / "histogram.png").exists()

    def test_missing_incidents_exits_2(self, dataset, tmp_path):
        data = tmp_path / "no-incidents"
        assert main(
            [
                "ingest",
                "--data", str(data),
                "--highways", str(dataset.highways),
                "--coastline", str(dataset.coastline),
                "--region", str(dataset.region),
                "--stations", str(dataset.stations),
                "--critical", str(dataset.critical),
            ]
        ) == 0
        assert main(["compute-fields", "--data", str(data), "--jobs", "1"]) == 0
        assert main(["compare-incidents", "--data", str(data), "--out", str(tmp_path / "c")]) == 2


class TestExport:
    def test_geojson_csv_report(self, cli_workspace, tmp_path):
        for fmt, name in (("geojson", "b.geojson"), ("csv", "b.csv"), ("report", "b.txt")):
            rc = main(
                ["export", fmt, "--data", str(cli_workspace), "--out", str(tmp_path / name)]
            )
            assert rc == 0
            assert (tmp_path / name).exists()
        report = (tmp_path / "b.txt").read_text()
        assert "compliance" in report

    def test_diff_layer(self, cli_workspace, tmp_path):
        rc = main(
            [
                "export", "geojson",
                "--data", str(cli_workspace),
                "--layer", "diff",
                "--out", str(tmp_path / "d.geojson"),
            ]
        )
        assert rc == 0
        doc = json.loads((tmp_path / "d.geojson").read_text())
        assert {f["properties"]["diff"] for f in doc["features"]} == {"unchanged"}


def _tree_hashes(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestDeterminism:
    def test_pipeline_runs_are_byte_identical(self, dataset, tmp_path):
        hashes = []
        for run in ("one", "two"):
            data = tmp_path / f"data-{run}"
            out = tmp_path / f"out-{run}"
            _ingest_and_fields(dataset, data)
            assert main(
                ["scenario", "run", "--baseline", "--data", str(data), "--out", str(out)]
            ) == 0
            assert main(
                ["compare-incidents", "--data", str(data), "--out", str(out / "calib")]
            ) == 0
            combined = {**_tree_hashes(data), **{f"out/{k}": v for k, v in _tree_hashes(out).items()}}
            hashes.append(combined)
        assert hashes[0] == hashes[1]

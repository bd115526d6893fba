import json
from dataclasses import replace

import numpy as np
import pytest

from fireplan.geo import LonLat
from fireplan.graph import build_graph, scale_speeds
from fireplan.osm import CriticalLocation, StationRecord
from fireplan.routing import CombinedField, combine_fields, compute_station_fields, dijkstra_one_to_all
from fireplan.scenario import (
    DiffClass,
    ScenarioConfig,
    ScenarioEngine,
    ScenarioError,
    TimeBand,
    band_map,
    compliance_report,
    diff_map,
)

from conftest import grid_network
from dataset import SEA_POINT_FAR


def make_config(n: int = 3, **kwargs) -> ScenarioConfig:
    defaults = dict(open=tuple([True] * n), mode=tuple(["part_time"] * n))
    defaults.update(kwargs)
    return ScenarioConfig(**defaults)


def combined_from_times(times: list[float]) -> CombinedField:
    arr = np.array(times, dtype=float)
    station = np.zeros(len(times), dtype=np.int32)
    station[~np.isfinite(arr)] = -1
    return CombinedField(
        best_time=arr,
        best_station=station,
        station_indices=np.array([0], dtype=np.int32),
        delays_s=np.array([0.0]),
        travel_s=arr[None, :].copy(),
    )


class TestScenarioConfig:
    def test_roundtrip(self):
        cfg = make_config(
            open=(True, False, True),
            mode=("full_time", "part_time", "part_time"),
            callout_delay_override={"part_time": 7.0},
            speed_factor=1.2,
            time_scale=2.8,
            relocations={1: LonLat(6.2, 62.4)},
        )
        again = ScenarioConfig.from_json(json.loads(json.dumps(cfg.to_json())))
        assert again == cfg

    def test_digest_stable_and_config_sensitive(self):
        a = make_config()
        b = make_config(speed_factor=1.1)
        assert a.digest("abc") == a.digest("abc")
        assert a.digest("abc") != b.digest("abc")
        assert a.digest("abc") != a.digest("other-graph")

    def test_validation(self):
        with pytest.raises(ScenarioError):
            make_config(speed_factor=0.0)
        with pytest.raises(ScenarioError):
            make_config(mode=("full_time", "weekend", "part_time"))
        with pytest.raises(ScenarioError):
            make_config(callout_delay_override={"part_time": -1.0})
        with pytest.raises(ScenarioError):
            make_config(relocations={9: LonLat(6.0, 62.0)})

    def test_delay_defaults_and_override(self):
        cfg = make_config(mode=("full_time", "part_time", "part_time"))
        assert cfg.delay_minutes(0) == 0.0
        assert cfg.delay_minutes(1) == 5.0
        cfg = replace(cfg, callout_delay_override={"part_time": 8.0})
        assert cfg.delay_minutes(1) == 8.0
        assert cfg.delay_minutes(0) == 0.0


class TestBandMap:
    def test_boundary_ten_minutes_is_amber(self):
        field = combined_from_times([599.4, 600.0])
        bands = band_map(field, np.zeros(2, dtype=bool))
        assert bands.bands[0] == TimeBand.GREEN  # 9.99 min
        assert bands.bands[1] == TimeBand.AMBER  # 10.0 min

    def test_hand_classified_six_node_field(self):
        times = [300.0, 599.999, 600.0, 1200.0, 1800.0, np.inf, np.inf]
        baseline_unreachable = np.array([False, False, False, False, False, True, False])
        bands = band_map(combined_from_times(times), baseline_unreachable)
        expected = [
            TimeBand.GREEN,
            TimeBand.GREEN,
            TimeBand.AMBER,
            TimeBand.RED,
            TimeBand.BLUE,
            TimeBand.BROWN,
            TimeBand.BLACK,
        ]
        assert list(bands.bands) == expected
        assert bands.counts == {
            "green": 2,
            "amber": 1,
            "red": 1,
            "blue": 1,
            "brown": 1,
            "black": 1,
        }

    def test_brown_wins_regardless_of_scenario(self):
        # Even a node with a finite time is brown if the baseline could
        # never reach it (it must have become reachable only via an edit we
        # do not model); baseline-unreachable is authoritative.
        field = combined_from_times([100.0])
        bands = band_map(field, np.array([True]))
        assert bands.bands[0] == TimeBand.BROWN

    def test_equal_fields_give_equal_maps(self):
        t = [10.0, 700.0, 1500.0, np.inf]
        m1 = band_map(combined_from_times(t), np.zeros(4, dtype=bool))
        m2 = band_map(combined_from_times(list(t)), np.zeros(4, dtype=bool))
        assert np.array_equal(m1.bands, m2.bands)


class TestDiffMap:
    def test_identity_is_unchanged(self):
        f = combined_from_times([1.0, 2.0, np.inf])
        d = diff_map(f, f)
        assert (d.classes == DiffClass.UNCHANGED).all()

    def test_transitions(self):
        base = combined_from_times([100.0, 100.0, 100.0, np.inf, np.inf])
        scen = combined_from_times([50.0, 100.0, 150.0, 80.0, np.inf])
        d = diff_map(scen, base)
        assert d.classes[0] == DiffClass.IMPROVED
        assert d.classes[1] == DiffClass.UNCHANGED
        assert d.classes[2] == DiffClass.WORSENED
        assert d.classes[3] == DiffClass.NEWLY_REACHABLE
        assert d.classes[4] == DiffClass.UNCHANGED  # unreachable in both

    def test_newly_unreachable(self):
        base = combined_from_times([100.0])
        scen = combined_from_times([np.inf])
        assert diff_map(scen, base).classes[0] == DiffClass.NEWLY_UNREACHABLE

    def test_mismatched_graphs_rejected(self):
        with pytest.raises(ValueError):
            diff_map(combined_from_times([1.0]), combined_from_times([1.0, 2.0]))


def tiny_engine(n_stations: int = 2) -> ScenarioEngine:
    nodes, ways = grid_network(6, 5)
    g = build_graph(nodes, ways)
    corners = [0, g.n_nodes - 1, 3]
    stations = [
        StationRecord(
            f"S{k}",
            LonLat(float(g.lon[corners[k]]), float(g.lat[corners[k]])),
            "full_time" if k == 0 else "part_time",
        )
        for k in range(n_stations)
    ]
    cache = compute_station_fields(g, stations)
    critical = [CriticalLocation("at-station", stations[0].pos)]
    return ScenarioEngine(g, cache, critical=critical)


class TestEvaluate:
    def test_baseline_equals_direct_combination(self, dataset_engine):
        engine = dataset_engine
        combined = engine.evaluate(engine.baseline_config())
        delays = [0.0 if s.mode == "full_time" else 300.0 for s in engine.stations]
        direct = combine_fields(engine.cache.fields, delays, [True] * len(engine.stations))
        assert np.array_equal(combined.best_time, direct.best_time)
        assert np.array_equal(combined.best_station, direct.best_station)

    def test_closing_island_station_blacks_out_island(self, dataset_engine):
        engine = dataset_engine
        island_b = np.flatnonzero(
            (engine.graph.osm_ids >= 3000) & (engine.graph.osm_ids < 3100)
        )
        island_c = np.flatnonzero(
            (engine.graph.osm_ids >= 4000) & (engine.graph.osm_ids < 4100)
        )
        assert len(island_b) == 6 and len(island_c) == 3

        baseline_bands = engine.band_map(engine.baseline_config())
        assert (baseline_bands.bands[island_c] == TimeBand.BROWN).all()
        assert (baseline_bands.bands[island_b] != TimeBand.BROWN).all()

        cfg = replace(engine.baseline_config(), open=(True, True, False))
        bands = engine.band_map(cfg)
        assert (bands.bands[island_b] == TimeBand.BLACK).all()
        assert (bands.bands[island_c] == TimeBand.BROWN).all()

    def test_all_closed_rejected(self, dataset_engine):
        cfg = replace(dataset_engine.baseline_config(), open=(False, False, False))
        with pytest.raises(ScenarioError, match="closed"):
            dataset_engine.evaluate(cfg)

    def test_wrong_station_count_rejected(self, dataset_engine):
        cfg = make_config(n=2, mode=("full_time", "part_time"), open=(True, True))
        with pytest.raises(ScenarioError, match="stations"):
            dataset_engine.evaluate(cfg)

    def test_speed_factor_equals_scratch_recompute(self, dataset_engine):
        engine = dataset_engine
        cfg = replace(engine.baseline_config(), speed_factor=1.3)
        cached = engine.evaluate(cfg)

        scaled_graph = scale_speeds(engine.graph, 1.3)
        fields = [dijkstra_one_to_all(scaled_graph, n) for n in engine.cache.station_nodes]
        delays = [cfg.delay_minutes(i) * 60.0 for i in range(len(engine.stations))]
        scratch = combine_fields(fields, delays, list(cfg.open))

        finite = np.isfinite(scratch.best_time)
        assert np.array_equal(finite, np.isfinite(cached.best_time))
        assert np.allclose(cached.best_time[finite], scratch.best_time[finite], rtol=1e-12)

    def test_time_scale_multiplies_travel_not_delay(self, dataset_engine):
        engine = dataset_engine
        base = engine.evaluate(engine.baseline_config())
        scaled = engine.evaluate(replace(engine.baseline_config(), time_scale=2.0))
        # A node served by the full-time station (delay 0) scales exactly.
        node = engine.cache.station_nodes[0]
        assert scaled.best_time[node] == base.best_time[node] * 2.0
        # The part-time station's own node keeps its 300 s delay unscaled.
        node_b = engine.cache.station_nodes[2]
        assert base.best_time[node_b] == 300.0
        assert scaled.best_time[node_b] == 300.0

    def test_relocation_changes_field(self, dataset_engine):
        engine = dataset_engine
        cfg = replace(engine.baseline_config(), relocations={0: LonLat(6.03, 62.10)})
        combined = engine.evaluate(cfg)
        west_home_node = engine.graph.nearest_node(LonLat(6.03, 62.10))
        base = engine.baseline()
        assert combined.best_time[west_home_node] < base.best_time[west_home_node]

    def test_relocation_to_open_sea_rejected(self, dataset_engine):
        cfg = replace(
            dataset_engine.baseline_config(),
            relocations={0: LonLat(*SEA_POINT_FAR)},
        )
        with pytest.raises(ScenarioError, match="snaps to no road node"):
            dataset_engine.evaluate(cfg)

    def test_relocation_to_current_position_is_identity(self, dataset_engine):
        engine = dataset_engine
        pos = engine.stations[0].pos
        cfg = replace(engine.baseline_config(), relocations={0: pos})
        combined = engine.evaluate(cfg)
        assert np.array_equal(combined.best_time, engine.baseline().best_time)


class TestMonotonicity:
    def test_uniform_delay_increase_worsens_everywhere(self, dataset_engine):
        engine = dataset_engine
        cfg = replace(
            engine.baseline_config(),
            callout_delay_override={"full_time": 1.0, "part_time": 6.0},
        )
        d = engine.diff_map(cfg)
        reachable = ~engine.baseline().unreachable
        assert (d.classes[reachable] == DiffClass.WORSENED).all()

    @pytest.mark.parametrize("family_cfg", [
        {"open": (True, False, True)},
        {"callout_delay_override": {"part_time": 9.0}},
        {"speed_factor": 1.5},
    ])
    def test_degradation_families_never_improve(self, dataset_engine, family_cfg):
        cfg = replace(dataset_engine.baseline_config(), **family_cfg)
        d = dataset_engine.diff_map(cfg)
        assert d.counts["improved"] == 0
        assert d.counts["newly_reachable"] == 0


class TestCompliance:
    def test_dataset_baseline_violations(self, dataset_engine):
        engine = dataset_engine
        report = engine.compliance(engine.baseline_config())
        by_name = {e.name: e for e in report.entries}
        assert not by_name["Town clinic"].violation
        assert by_name["Town clinic"].response_minutes == 0.0
        assert by_name["West shore home"].violation
        assert by_name["West shore home"].response_minutes > 10.0
        assert not by_name["Island B hall"].violation
        assert by_name["Island B hall"].response_minutes == pytest.approx(5.0)
        assert report.violation_count == 1
        assert report.max_excess_minutes == pytest.approx(
            by_name["West shore home"].response_minutes - 10.0
        )

    def test_colocated_fulltime_station_never_violates(self):
        engine = tiny_engine(1)
        report = engine.compliance(engine.baseline_config())
        assert report.violation_count == 0
        assert report.entries[0].response_minutes == 0.0

    def test_unmatched_location_reported(self, dataset_engine):
        report = compliance_report(
            dataset_engine.baseline(),
            [CriticalLocation("lighthouse", LonLat(*SEA_POINT_FAR))],
            dataset_engine.graph,
        )
        assert report.unmatched == ["lighthouse"]
        assert report.entries[0].node is None


class TestSweeps:
    def test_part_time_delay_sweep_has_nine_maps(self, dataset_engine):
        results = dataset_engine.sweep("part-time-delay", list(range(1, 10)))
        assert len(results) == 9
        # Delay 5 is the baseline; its diff map is all unchanged.
        cfg5, _, diff5 = results[4]
        assert cfg5.callout_delay_override == {"part_time": 5.0}
        assert diff5.counts["unchanged"] == dataset_engine.graph.n_nodes

    def test_full_time_delay_sweep_has_six_maps(self, dataset_engine):
        results = dataset_engine.sweep("full-time-delay", list(range(0, 6)))
        assert len(results) == 6
        assert results[0][2].counts["unchanged"] == dataset_engine.graph.n_nodes

    def test_speed_factor_sweep_has_six_maps(self, dataset_engine):
        values = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5]
        results = dataset_engine.sweep("speed-factor", values)
        assert len(results) == 6
        assert results[0][2].counts["unchanged"] == dataset_engine.graph.n_nodes
        # Worsening is monotone in the factor.
        worsened = [r[2].counts["worsened"] for r in results]
        assert worsened == sorted(worsened)

    def test_empty_range_rejected(self, dataset_engine):
        with pytest.raises(ScenarioError, match="empty"):
            dataset_engine.sweep("speed-factor", [])


class TestPlacement:
    def test_single_candidate_is_current_objective(self, dataset_engine):
        engine = dataset_engine
        node = engine.cache.station_nodes[0]
        ranked = engine.optimize_placement(0, [node])
        assert len(ranked) == 1
        assert ranked[0][0] == node
        assert ranked[0][1] == pytest.approx(engine.baseline().max_finite_minutes())

    def test_matches_exhaustive_evaluation(self):
        engine = tiny_engine(2)
        candidates = [2, 7, 12]
        ranked = engine.optimize_placement(1, candidates)
        expected = []
        for node in candidates:
            cfg = replace(
                engine.baseline_config(),
                relocations={1: engine.graph.node_pos(node)},
            )
            expected.append((engine.evaluate(cfg).max_finite_minutes(), node))
        expected.sort()
        assert ranked == [(n, v) for v, n in expected]

    def test_invariant_under_permutation(self):
        engine = tiny_engine(2)
        a = engine.optimize_placement(1, [2, 7, 12])
        b = engine.optimize_placement(1, [12, 2, 7])
        assert a == b

    def test_empty_candidates_rejected(self, dataset_engine):
        with pytest.raises(ScenarioError, match="empty"):
            dataset_engine.optimize_placement(0, [])

    def test_violation_count_objective(self):
        engine = tiny_engine(2)
        ranked = engine.optimize_placement(1, [2, 7], objective="violation_count")
        assert all(v == 0.0 for _, v in ranked)

import numpy as np
import pytest

from fireplan.geo import LonLat
from fireplan.graph import RoadGraph, build_graph
from fireplan.osm import OsmNode, OsmWay, StationRecord
from fireplan.routing import (
    FieldCache,
    TravelTimeField,
    combine_fields,
    compute_station_fields,
    dijkstra_one_to_all,
    station_areas,
)

from conftest import grid_network
from oracles import floyd_warshall


def graph_from_edges(n: int, edges: list[tuple[int, int, float]]) -> RoadGraph:
    """Synthetic RoadGraph straight from directed weighted edges; node
    positions are irrelevant for pure shortest-path tests."""
    order = sorted(range(len(edges)), key=lambda k: (edges[k][0], edges[k][1]))
    e_from = np.array([edges[k][0] for k in order], dtype=np.int32)
    e_to = np.array([edges[k][1] for k in order], dtype=np.int32)
    w = np.array([edges[k][2] for k in order], dtype=np.float64)
    lon = np.linspace(6.0, 6.1, n)
    lat = np.full(n, 62.0)
    return RoadGraph(
        osm_ids=np.arange(n, dtype=np.int64),
        lon=lon,
        lat=lat,
        local_x=np.zeros(n),
        local_y=np.zeros(n),
        local_origin=LonLat(6.05, 62.0),
        edge_from=e_from,
        edge_to=e_to,
        edge_length=w.copy(),
        edge_speed=np.full(len(edges), 3.6),  # 1 m/s so time == length
        edge_time=w.copy(),
        edge_tunnel=np.zeros(len(edges), dtype=bool),
        edge_bridge=np.zeros(len(edges), dtype=bool),
    )


def random_digraph(rng: np.random.Generator, max_nodes: int = 200) -> tuple[int, list]:
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(n, 4 * n))
    edges = []
    for _ in range(m):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        edges.append((u, v, float(rng.integers(1, 11))))
    return n, edges


class TestDijkstra:
    def test_source_value_zero(self, small_grid_graph):
        field = dijkstra_one_to_all(small_grid_graph, 3)
        assert field.values[3] == 0.0

    def test_five_node_graph_matches_floyd_warshall(self):
        edges = [(0, 1, 2.0), (1, 2, 2.0), (0, 2, 5.0), (2, 3, 1.0), (3, 0, 1.0), (1, 4, 9.0), (2, 4, 3.0)]
        g = graph_from_edges(5, edges)
        expected = floyd_warshall(5, edges)
        for src in range(5):
            field = dijkstra_one_to_all(g, src)
            assert np.array_equal(field.values, expected[src])

    def test_unreachable_marked_infinite(self):
        g = graph_from_edges(3, [(0, 1, 1.0)])
        field = dijkstra_one_to_all(g, 0)
        assert field.values[1] == 1.0
        assert np.isinf(field.values[2])
        assert not field.reachable[2]

    def test_deterministic_repeat_runs(self, small_grid_graph):
        a = dijkstra_one_to_all(small_grid_graph, 0).values
        b = dijkstra_one_to_all(small_grid_graph, 0).values
        assert np.array_equal(a, b)

    def test_distance_mode_uses_lengths(self, small_grid_graph):
        t = dijkstra_one_to_all(small_grid_graph, 0, weight="time")
        d = dijkstra_one_to_all(small_grid_graph, 0, weight="distance")
        # Residential 20 km/h: time = length / (20/3.6).
        assert np.allclose(t.values, d.values / (20.0 / 3.6), rtol=1e-9)

    def test_invalid_source_rejected(self, small_grid_graph):
        with pytest.raises(ValueError):
            dijkstra_one_to_all(small_grid_graph, -1)
        with pytest.raises(ValueError):
            dijkstra_one_to_all(small_grid_graph, small_grid_graph.n_nodes)

    def test_edge_addition_never_increases_values(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            n, edges = random_digraph(rng, max_nodes=30)
            if not edges:
                continue
            g1 = graph_from_edges(n, edges)
            base = dijkstra_one_to_all(g1, 0).values
            u = int(rng.integers(0, n))
            v = int(rng.integers(0, n))
            if u == v:
                continue
            g2 = graph_from_edges(n, edges + [(u, v, float(rng.integers(1, 11)))])
            more = dijkstra_one_to_all(g2, 0).values
            assert (more <= base + 1e-12).all()

    def test_edge_removal_never_decreases_values(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, edges = random_digraph(rng, max_nodes=30)
            if len(edges) < 2:
                continue
            g1 = graph_from_edges(n, edges)
            base = dijkstra_one_to_all(g1, 0).values
            g2 = graph_from_edges(n, edges[:-1])
            fewer = dijkstra_one_to_all(g2, 0).values
            finite = np.isfinite(fewer)
            assert (fewer[finite] >= base[finite] - 1e-12).all()
            assert (~np.isfinite(base) <= ~np.isfinite(fewer)).all()


class TestCombineFields:
    def _fields(self, values: list[list[float]]) -> list[TravelTimeField]:
        return [TravelTimeField(source=0, values=np.array(v, dtype=float)) for v in values]

    def test_single_station_zero_delay_is_identity(self):
        fields = self._fields([[0.0, 10.0, 20.0]])
        combined = combine_fields(fields, [0.0], [True])
        assert np.array_equal(combined.best_time, fields[0].values)
        assert (combined.best_station == 0).all()

    def test_dominating_station_wins_everywhere(self):
        fields = self._fields([[0.0, 10.0, 20.0], [100.0, 110.0, 120.0]])
        combined = combine_fields(fields, [0.0, 0.0], [True, True])
        assert (combined.best_station == 0).all()

    def test_delay_added_per_station(self):
        fields = self._fields([[0.0, 100.0], [50.0, 0.0]])
        combined = combine_fields(fields, [0.0, 300.0], [True, True])
        assert combined.best_time[0] == 0.0
        # Station 1 with 300 s delay: 300 beats 100? No: min(100, 300).
        assert combined.best_time[1] == 100.0
        assert combined.best_station[1] == 0

    def test_ties_go_to_lowest_station_index(self):
        fields = self._fields([[5.0], [5.0]])
        combined = combine_fields(fields, [0.0, 0.0], [True, True])
        assert combined.best_station[0] == 0

    def test_closed_stations_ignored(self):
        fields = self._fields([[0.0, 10.0], [20.0, 0.0]])
        combined = combine_fields(fields, [0.0, 0.0], [False, True])
        assert np.array_equal(combined.best_time, fields[1].values)
        assert (combined.best_station == 1).all()

    def test_unreachable_only_when_unreachable_from_all(self):
        inf = np.inf
        fields = self._fields([[0.0, inf, inf], [inf, 0.0, inf]])
        combined = combine_fields(fields, [0.0, 0.0], [True, True])
        assert combined.best_time[0] == 0.0
        assert combined.best_time[1] == 0.0
        assert np.isinf(combined.best_time[2])
        assert combined.best_station[2] == -1

    def test_no_open_stations_is_error(self):
        fields = self._fields([[0.0]])
        with pytest.raises(ValueError, match="no stations"):
            combine_fields(fields, [0.0], [False])

    def test_combined_leq_each_component(self):
        rng = np.random.default_rng(3)
        values = rng.uniform(0, 1000, size=(4, 50))
        fields = self._fields([list(v) for v in values])
        delays = [0.0, 60.0, 120.0, 300.0]
        combined = combine_fields(fields, delays, [True] * 4)
        for k in range(4):
            assert (combined.best_time <= values[k] + delays[k] + 1e-12).all()
        # Equality attained at the arg-min station.
        for node in range(50):
            k = combined.best_station[node]
            assert combined.best_time[node] == values[k][node] + delays[k]


class TestStationAreas:
    def test_single_station_owns_everything(self):
        fields = [TravelTimeField(0, np.array([0.0, 1.0, 2.0]))]
        combined = combine_fields(fields, [0.0], [True])
        assert (station_areas(combined) == 0).all()

    def test_symmetric_line_splits_at_midpoint(self):
        # Line of 7 nodes with unit two-way edges, stations at both ends;
        # the midpoint is an exact tie and goes to the lower station index.
        edges = []
        for i in range(6):
            edges.append((i, i + 1, 1.0))
            edges.append((i + 1, i, 1.0))
        g = graph_from_edges(7, edges)
        f0 = dijkstra_one_to_all(g, 0)
        f6 = dijkstra_one_to_all(g, 6)
        combined = combine_fields([f0, f6], [0.0, 0.0], [True, True])
        areas = station_areas(combined)
        assert list(areas[:4]) == [0, 0, 0, 0]
        assert list(areas[4:]) == [1, 1, 1]

    def test_matches_bruteforce_scan(self):
        rng = np.random.default_rng(8)
        values = rng.uniform(0, 500, size=(3, 40))
        fields = [TravelTimeField(0, values[k]) for k in range(3)]
        delays = [0.0, 30.0, 60.0]
        combined = combine_fields(fields, delays, [True, True, True])
        areas = station_areas(combined)
        for node in range(40):
            totals = [values[k][node] + delays[k] for k in range(3)]
            assert areas[node] == int(np.argmin(totals))


class TestFieldCache:
    def test_roundtrip(self, small_grid_graph, tmp_path):
        stations = [
            StationRecord("A", LonLat(float(small_grid_graph.lon[0]), float(small_grid_graph.lat[0])), "full_time"),
            StationRecord("B", LonLat(float(small_grid_graph.lon[-1]), float(small_grid_graph.lat[-1])), "part_time"),
        ]
        cache = compute_station_fields(small_grid_graph, stations)
        path = tmp_path / "fields.bin"
        cache.save(path)
        loaded = FieldCache.load(path, expect_checksum=small_grid_graph.checksum())
        assert loaded.station_nodes == cache.station_nodes
        for a, b in zip(loaded.fields, cache.fields):
            assert np.array_equal(a.values, b.values)
        assert [s.name for s in loaded.stations] == ["A", "B"]

    def test_checksum_mismatch_rejected(self, small_grid_graph, tmp_path):
        from fireplan.binio import CacheFormatError

        stations = [
            StationRecord("A", LonLat(float(small_grid_graph.lon[0]), float(small_grid_graph.lat[0])), "full_time")
        ]
        cache = compute_station_fields(small_grid_graph, stations)
        path = tmp_path / "fields.bin"
        cache.save(path)
        with pytest.raises(CacheFormatError, match="different graph"):
            FieldCache.load(path, expect_checksum="deadbeef")

    def test_station_beyond_match_distance_rejected(self, small_grid_graph):
        stations = [StationRecord("Far", LonLat(7.0, 62.9), "full_time")]
        with pytest.raises(ValueError, match="from any road node"):
            compute_station_fields(small_grid_graph, stations)

    def test_source_node_value_zero(self, dataset_engine):
        for node, fld in zip(dataset_engine.cache.station_nodes, dataset_engine.cache.fields):
            assert fld.values[node] == 0.0

    def test_parallel_matches_sequential(self, small_grid_graph):
        stations = [
            StationRecord("A", LonLat(float(small_grid_graph.lon[0]), float(small_grid_graph.lat[0])), "full_time"),
            StationRecord("B", LonLat(float(small_grid_graph.lon[-1]), float(small_grid_graph.lat[-1])), "part_time"),
        ]
        seq = compute_station_fields(small_grid_graph, stations, jobs=1)
        par = compute_station_fields(small_grid_graph, stations, jobs=2)
        for a, b in zip(seq.fields, par.fields):
            assert np.array_equal(a.values, b.values)

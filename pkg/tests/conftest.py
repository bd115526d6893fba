from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dataset import Dataset, make_dataset  # noqa: E402

from fireplan.geo import LonLat  # noqa: E402
from fireplan.graph import RoadGraph, build_graph  # noqa: E402
from fireplan.osm import OsmNode, OsmWay  # noqa: E402


@pytest.fixture(scope="session")
def dataset(tmp_path_factory) -> Dataset:
    return make_dataset(tmp_path_factory.mktemp("archipelago"))


@pytest.fixture(scope="session")
def dataset_engine(dataset):
    from fireplan.workspace import Workspace

    return Workspace(dataset.workspace).build_engine()


def grid_network(cols: int, rows: int, lon0: float = 6.0, lat0: float = 62.0,
                 step_lon: float = 0.01, step_lat: float = 0.005,
                 tags: dict | None = None) -> tuple[list[OsmNode], list[OsmWay]]:
    """Rectangular grid of two-way residential ways (or custom tags)."""
    tags = tags or {"highway": "residential"}
    nodes = []
    nid = lambda i, j: 1 + j * cols + i  # noqa: E731
    for j in range(rows):
        for i in range(cols):
            nodes.append(OsmNode(nid(i, j), LonLat(lon0 + i * step_lon, lat0 + j * step_lat)))
    ways = []
    wid = 1
    for j in range(rows):
        ways.append(OsmWay(wid, tuple(nid(i, j) for i in range(cols)), dict(tags)))
        wid += 1
    for i in range(cols):
        ways.append(OsmWay(wid, tuple(nid(i, j) for j in range(rows)), dict(tags)))
        wid += 1
    return nodes, ways


@pytest.fixture
def small_grid_graph() -> RoadGraph:
    nodes, ways = grid_network(4, 3)
    return build_graph(nodes, ways)

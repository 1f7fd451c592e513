import io
import os

import networkx as nx
import numpy as np
import pytest

from conftest import make_lon
from lon_lab.basins import extract_basins
from lon_lab.errors import ParseError
from lon_lab.export import atomic_write, edge_csv, export_lon, parse_edge_csv, to_networkx
from lon_lab.landscape import generate_instance
from lon_lab.network import build_lon


@pytest.fixture(scope="module")
def lon():
    inst = generate_instance(8, 3, seed=2)
    return build_lon(inst, extract_basins(inst, "first"))


def test_edge_csv_round_trip(lon):
    data = edge_csv(lon)
    lines = data.decode().splitlines()
    assert lines[0] == "from_lo,to_lo,weight"
    assert len(lines) - 1 == lon.edges.sum()
    w = parse_edge_csv(data)
    np.testing.assert_allclose(w, lon.weights, rtol=1e-11, atol=0)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-10)
    # reparsing the printed values and printing again is exact
    again = make_lon(w)
    assert edge_csv(again) == data


def test_edges_are_ordered(lon):
    rows = [tuple(map(int, line.split(",")[:2]))
            for line in edge_csv(lon).decode().splitlines()[1:]]
    assert rows == sorted(rows)


def test_single_node_every_format():
    single = make_lon([[1.0]])
    assert edge_csv(single).decode() == "from_lo,to_lo,weight\n0,0,1\n"
    assert "0 -> 0 [weight=1]" in export_lon(single, "dot").decode()
    g = nx.read_graphml(io.BytesIO(export_lon(single, "graphml")))
    assert list(g.edges(data="weight")) == [("0", "0", 1.0)]


def test_dot_node_count():
    inst = generate_instance(6, 2, seed=1)
    lon = build_lon(inst, extract_basins(inst, "best"))
    dot = export_lon(lon, "dot").decode()
    nodes = [line for line in dot.splitlines() if "is_global_optimum" in line]
    assert len(nodes) == lon.n_nodes
    assert dot.count("is_global_optimum=true") == 1
    assert dot.count("->") == lon.edges.sum()


def test_graphml_attributes(lon):
    g = nx.read_graphml(io.BytesIO(export_lon(lon, "graphml")))
    assert g.number_of_nodes() == lon.n_nodes
    assert g.number_of_edges() == lon.edges.sum()
    assert g.nodes["0"]["is_global_optimum"] is True
    assert g.nodes["1"]["basin_size"] == pytest.approx(lon.basin_sizes[1])
    assert g.edges["0", "1"]["weight"] == pytest.approx(lon.weights[0, 1])
    assert to_networkx(lon).has_edge(0, 0)


def test_exports_are_deterministic(lon):
    for fmt in ("edge-csv", "dot", "graphml"):
        assert export_lon(lon, fmt) == export_lon(lon, fmt)


def test_unsupported_format(lon):
    with pytest.raises(ValueError):
        export_lon(lon, "gexf")


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_edge_csv("a,b,c\n0,0,1\n")
    with pytest.raises(ParseError):
        parse_edge_csv("from_lo,to_lo,weight\n0,x,1\n")
    with pytest.raises(ParseError):
        parse_edge_csv("from_lo,to_lo,weight\n0,5,1\n", n_nodes=2)


def test_atomic_write(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    atomic_write(target, b"first")
    atomic_write(target, b"second")
    assert target.read_bytes() == b"second"
    assert os.listdir(target.parent) == ["out.txt"]


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"
    atomic_write(target, b"old")

    def boom(*args):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        atomic_write(target, b"new")
    assert target.read_bytes() == b"old"
    assert os.listdir(tmp_path) == ["out.txt"]

"""File output: atomic writes and LON exporters (edge-list CSV, DOT, GraphML).

Every exporter returns bytes, lists nodes by local-optimum id and edges by
``(from, to)``, so identical networks always give identical files.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import ParameterError, ParseError
from .network import Lon

FORMATS = ("edge-csv", "dot", "graphml")
EDGE_HEADER = ["from_lo", "to_lo", "weight"]


def atomic_write(path: str | os.PathLike, data: bytes) -> Path:
    """Write ``data`` to a temporary file in the target directory, then rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def edge_list(lon: Lon) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Structural edges (self-loops included) in ``(from, to)`` order."""
    src, dst = np.nonzero(lon.edges)
    return src, dst, lon.weights[src, dst]


def edge_csv(lon: Lon) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for i, j, w in zip(*edge_list(lon)):
        writer.writerow([int(i), int(j), f"{w:.12g}"])
    return buf.getvalue().encode("utf-8")


def parse_edge_csv(data: bytes | str, n_nodes: int | None = None) -> np.ndarray:
    """Dense weight matrix from an edge-list CSV.

    The node count defaults to one more than the largest id in the file.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != EDGE_HEADER:
        raise ParseError("header", f"expected {','.join(EDGE_HEADER)}")
    edges = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ParseError(f"line {line}", "expected 3 columns")
        try:
            edges.append((int(row[0]), int(row[1]), float(row[2])))
        except ValueError:
            raise ParseError(f"line {line}", f"malformed row {row!r}") from None
    p = n_nodes if n_nodes is not None else 1 + max((max(i, j) for i, j, _ in edges), default=-1)
    w = np.zeros((p, p))
    for i, j, x in edges:
        if not (0 <= i < p and 0 <= j < p):
            raise ParseError("from_lo/to_lo", f"node id outside [0, {p})")
        w[i, j] = x
    return w


def to_networkx(lon: Lon) -> nx.DiGraph:
    g = nx.DiGraph(pivot_rule=lon.pivot_rule, n=lon.n, k=lon.k, instance_id=lon.instance_id)
    go = lon.global_optimum
    for i in range(lon.n_nodes):
        g.add_node(i, genotype=int(lon.genotypes[i]), fitness=float(lon.fitness[i]),
                   basin_size=float(lon.basin_sizes[i]), is_global_optimum=bool(i == go))
    for i, j, w in zip(*edge_list(lon)):
        g.add_edge(int(i), int(j), weight=float(w))
    return g


def to_graphml(lon: Lon) -> bytes:
    buf = io.BytesIO()
    nx.write_graphml(to_networkx(lon), buf)
    return buf.getvalue()


def to_dot(lon: Lon) -> bytes:
    lines = [f'digraph "{lon.instance_id}-{lon.pivot_rule}" {{']
    go = lon.global_optimum
    for i in range(lon.n_nodes):
        flag = "true" if i == go else "false"
        lines.append(f"  {i} [genotype={int(lon.genotypes[i])}, fitness={lon.fitness[i]:.12g}, "
                     f"basin_size={lon.basin_sizes[i]:.12g}, is_global_optimum={flag}];")
    for i, j, w in zip(*edge_list(lon)):
        lines.append(f"  {i} -> {j} [weight={w:.12g}];")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_lon(lon: Lon, fmt: str = "edge-csv") -> bytes:
    if fmt == "edge-csv":
        return edge_csv(lon)
    if fmt == "dot":
        return to_dot(lon)
    if fmt == "graphml":
        return to_graphml(lon)
    raise ParameterError(f"unsupported format {fmt!r}; choose from {', '.join(FORMATS)}")

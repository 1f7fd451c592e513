"""Network statistics of local optima networks.

Edge density, clustering and disparity count self-loops by default, as the
published tables do; each also has an off-diagonal variant.  Shortest paths
and the weight histogram always use the off-diagonal structural edges.  The
clustering coefficient is Barrat's weighted coefficient evaluated on the
directed out-edge structure:

    c(i) = 1 / (s_i (k_i - 1)) * sum_{j != h} (w_ij + w_ih) / 2 * a_ij a_ih a_jh

where ``a`` is the structural adjacency, ``s_i`` the out-strength and
``k_i`` the out-degree, all with or without the diagonal.  Nodes with fewer
than two out-neighbors get ``c(i) = 0`` and are counted in ``n_cw_flagged``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.sparse as sp
from scipy import stats
from scipy.sparse.csgraph import dijkstra

from . import _kernels
from .basins import BasinMap
from .errors import ParameterError
from .landscape import NkInstance
from .network import Lon, self_loop_summary

FITNESS_BINS = 50


def off_diagonal(lon: Lon) -> np.ndarray:
    """Structural adjacency without self-loops."""
    return lon.edges & ~np.eye(lon.n_nodes, dtype=bool)


def edge_density(lon: Lon, self_loops: bool = True) -> float:
    """``n_e / n_v**2``, counting self-loops as edges unless told otherwise."""
    adj = lon.edges if self_loops else off_diagonal(lon)
    return float(adj.sum()) / lon.n_nodes ** 2


def weighted_clustering(lon: Lon, self_loops: bool = True) -> tuple[np.ndarray, float, int]:
    """Per-node weighted clustering, its mean, and the number of flagged nodes."""
    adj = lon.edges if self_loops else off_diagonal(lon)
    a = adj.astype(np.float32)  # exact for counts below 2**24
    w = np.where(adj, lon.weights, 0.0)
    closing = (a @ a.T).astype(np.float64) + (a @ a).astype(np.float64)
    # the matrix products include j == h, which contributes w_ij a_ij a_jj
    num = 0.5 * (w * closing).sum(axis=1) - w @ np.diag(adj).astype(np.float64)
    deg = adj.sum(axis=1)
    s = w.sum(axis=1)
    ok = (deg >= 2) & (s > 0)
    c = np.zeros(lon.n_nodes)
    c[ok] = num[ok] / (s[ok] * (deg[ok] - 1))
    return c, float(c.mean()), int((~ok).sum())


def disparity(lon: Lon, self_loops: bool = True) -> tuple[np.ndarray, float | None]:
    """Per-node disparity ``Y(i) = sum_j (w_ij / s_i)**2``.

    With ``self_loops`` the sum includes ``j = i`` and ``s_i = 1``.  Nodes with
    zero strength get NaN and are left out of the mean, which is ``None``
    when no node has an out-edge.
    """
    adj = lon.edges if self_loops else off_diagonal(lon)
    w = np.where(adj, lon.weights, 0.0)
    s = w.sum(axis=1)
    y = np.full(lon.n_nodes, np.nan)
    ok = s > 0
    y[ok] = ((w[ok] / s[ok, None]) ** 2).sum(axis=1)
    return y, (float(y[ok].mean()) if ok.any() else None)


def distance_graph(lon: Lon) -> sp.csr_array:
    """CSR graph of edge lengths ``1 / w_ij`` with each row sorted by length."""
    adj = off_diagonal(lon)
    rows, cols = np.nonzero(adj)
    lengths = 1.0 / lon.weights[rows, cols]
    cols = cols.astype(np.int64)
    indptr = np.concatenate(([0], np.cumsum(adj.sum(axis=1)))).astype(np.int64)
    _kernels.sort_rows(indptr, lengths, cols)
    return sp.csr_array((lengths, cols, indptr), shape=adj.shape)


@dataclass(frozen=True)
class PathSummary:
    """Shortest-path statistics; the means are ``None`` when nothing is reachable."""

    d_mean: float | None
    d_best_mean: float | None
    unreachable_pairs: int
    unreachable_to_best: int


def path_bounds(graph: sp.csr_array, hubs: np.ndarray) -> np.ndarray:
    """Upper bound on the farthest finite distance from every node.

    ``max_t d(s, t) <= max_t min_h (d(s, h) + d(h, t))`` for any hub set.
    The bound is infinite wherever some node is unreachable through every hub.
    """
    p = graph.shape[0]
    fr = dijkstra(graph, indices=hubs)
    to = dijkstra(graph.T.tocsr(), indices=hubs)
    bounds = np.empty(p)
    step = max(1, (1 << 22) // (len(hubs) * p))
    for a in range(0, p, step):
        via = to[:, a:a + step, None] + fr[:, None, :]
        bounds[a:a + step] = via.min(axis=0).max(axis=1)
    return bounds


def shortest_paths(lon: Lon, n_hubs: int = 4) -> PathSummary:
    """Mean shortest path over ordered reachable pairs, and mean path to the optimum.

    Each source runs Dijkstra under an upper bound obtained through a few
    hub nodes (the global optimum and the largest basins).  Arcs that would
    exceed the bound are never relaxed, which is exact and skips most of the
    arcs of dense networks.
    """
    p = lon.n_nodes
    g = lon.global_optimum
    graph = distance_graph(lon)
    to_g = dijkstra(graph.T.tocsr(), indices=g)
    totals = np.zeros(p)
    reached = np.zeros(p, dtype=np.int64)
    if p > 1:
        big = np.argsort(-lon.basin_sizes, kind="stable")[:n_hubs - 1]
        hubs = np.unique(np.append(big, g))
        bounds = path_bounds(graph, hubs) * (1 + 1e-9)
        _kernels.bounded_dijkstra(graph.indptr, graph.indices, graph.data,
                                  bounds, totals, reached)
    pairs = int(reached.sum())
    others = np.arange(p) != g
    finite = np.isfinite(to_g) & others
    return PathSummary(
        d_mean=float(totals.sum() / pairs) if pairs else None,
        d_best_mean=float(to_g[finite].mean()) if finite.any() else None,
        unreachable_pairs=p * (p - 1) - pairs,
        unreachable_to_best=int((others & ~finite).sum()),
    )


def distance_matrix(lon: Lon) -> np.ndarray:
    """All-pairs shortest distances (plain Dijkstra, for small networks)."""
    return dijkstra(distance_graph(lon))


def weight_distribution(lon: Lon, bins: int = 50,
                        range: tuple[float, float] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Normalized histogram of off-diagonal weights over log-spaced bins.

    Returns ``(edges, masses)`` with ``len(edges) == len(masses) + 1``.  With
    a single distinct weight the histogram collapses to one bin.  Without
    any off-diagonal edge both arrays are empty.
    """
    if bins < 1:
        raise ParameterError(f"bins must be >= 1, got {bins}")
    w = lon.weights[off_diagonal(lon)]
    if w.size == 0:
        return np.empty(0), np.empty(0)
    lo, hi = (w.min(), w.max()) if range is None else range
    if lo == hi:
        return np.array([lo, hi]), np.array([1.0])
    counts, edges = np.histogram(np.log10(w), bins=bins, range=(np.log10(lo), np.log10(hi)))
    return 10.0 ** edges, counts / w.size


def fitness_basin_correlation(lon: Lon, method: str = "pearson") -> float | None:
    """Correlation between node fitness and basin size; ``None`` when undefined."""
    if method not in ("pearson", "spearman"):
        raise ParameterError(f"method must be 'pearson' or 'spearman', got {method!r}")
    f, b = lon.fitness, lon.basin_sizes
    if lon.n_nodes < 2 or np.ptp(f) == 0 or np.ptp(b) == 0:
        return None
    test = stats.pearsonr if method == "pearson" else stats.spearmanr
    return float(test(f, b)[0])


@dataclass(frozen=True)
class BasinsPerSolution:
    """How many basins each solution belongs to.

    ``profile`` has one row ``(bin_low, bin_high, mean_count, n_solutions)``
    per non-empty fitness bin.
    """

    counts: np.ndarray
    mean: float
    fraction: float
    top_decile_mean: float
    bottom_decile_mean: float
    profile: np.ndarray


def basins_per_solution(bmap: BasinMap, fitness: np.ndarray,
                        fitness_bins: int = FITNESS_BINS) -> BasinsPerSolution:
    """Support cardinality ``#{i : p_i(s) > 0}`` for every solution ``s``.

    ``fitness`` is the fitness of every genotype, indexed by genotype.
    """
    if fitness_bins < 1:
        raise ParameterError(f"fitness_bins must be >= 1, got {fitness_bins}")
    counts = bmap.support_counts()
    mean = float(counts.mean())
    lo, hi = fitness.min(), fitness.max()
    if hi > lo:
        idx = np.minimum(((fitness - lo) / (hi - lo) * fitness_bins).astype(np.int64),
                         fitness_bins - 1)
    else:
        idx = np.zeros(fitness.size, dtype=np.int64)
    n_in = np.bincount(idx, minlength=fitness_bins)
    total = np.bincount(idx, weights=counts, minlength=fitness_bins)
    edges = np.linspace(lo, hi, fitness_bins + 1)
    keep = n_in > 0
    profile = np.column_stack((edges[:-1][keep], edges[1:][keep],
                               total[keep] / n_in[keep], n_in[keep]))
    top = fitness >= np.quantile(fitness, 0.9)
    bottom = fitness <= np.quantile(fitness, 0.1)
    return BasinsPerSolution(counts, mean, mean / bmap.n_optima,
                             float(counts[top].mean()), float(counts[bottom].mean()),
                             profile)


@dataclass(frozen=True)
class MetricsReport:
    """Scalar statistics of one LON.  Undefined values are ``None``.

    ``edge_density``, ``cw_mean`` and ``y_mean`` count self-loops; the
    ``*_offdiag`` columns do not.
    """

    instance_id: str
    n: int
    k: int
    model: str
    pivot_rule: str
    n_v: int
    edge_density: float
    cw_mean: float
    y_mean: float | None
    d_mean: float | None
    d_best_mean: float | None
    wii_mean: float
    wij_mean: float | None
    rho_fitness_size: float | None
    basins_per_solution_mean: float
    go_basin_fraction: float
    unreachable_pairs: int
    edge_density_offdiag: float
    cw_mean_offdiag: float
    y_mean_offdiag: float | None
    bps_fraction: float
    bps_top_decile: float
    bps_bottom_decile: float
    n_cw_flagged: int
    row_sum_error: float

    def as_row(self) -> dict:
        return asdict(self)


METRIC_COLUMNS = [f.name for f in fields(MetricsReport)]


def compute_metrics(inst: NkInstance, bmap: BasinMap, lon: Lon,
                    correlation: str = "pearson") -> tuple[MetricsReport, BasinsPerSolution]:
    """All scalar statistics of ``lon``, plus the per-solution basin counts."""
    _, cw, flagged = weighted_clustering(lon)
    _, y = disparity(lon)
    paths = shortest_paths(lon)
    wii, wij = self_loop_summary(lon)
    bps = basins_per_solution(bmap, inst.fitness_values)
    report = MetricsReport(
        instance_id=lon.instance_id, n=lon.n, k=lon.k, model=inst.model,
        pivot_rule=lon.pivot_rule, n_v=lon.n_nodes,
        edge_density=edge_density(lon), cw_mean=cw, y_mean=y,
        d_mean=paths.d_mean, d_best_mean=paths.d_best_mean,
        wii_mean=wii, wij_mean=wij,
        rho_fitness_size=fitness_basin_correlation(lon, correlation),
        basins_per_solution_mean=bps.mean,
        go_basin_fraction=float(lon.basin_sizes[lon.global_optimum] / inst.size),
        unreachable_pairs=paths.unreachable_pairs,
        edge_density_offdiag=edge_density(lon, self_loops=False),
        cw_mean_offdiag=weighted_clustering(lon, self_loops=False)[1],
        y_mean_offdiag=disparity(lon, self_loops=False)[1],
        bps_fraction=bps.fraction, bps_top_decile=bps.top_decile_mean,
        bps_bottom_decile=bps.bottom_decile_mean, n_cw_flagged=flagged,
        row_sum_error=lon.row_sum_error(),
    )
    return report, bps


def format_value(v) -> str:
    """CSV cell text: 12 significant digits for floats, empty for ``None``."""
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else f"{v:.12g}"
    return str(v)


def metrics_csv(reports: list[MetricsReport]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for r in reports:
        writer.writerow([format_value(v) for v in r.as_row().values()])
    return buf.getvalue().encode("utf-8")

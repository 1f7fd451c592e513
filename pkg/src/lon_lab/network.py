"""Weighted, oriented local optima networks.

The weight of edge ``i -> j`` is the probability that a uniform random bit
flip applied to a genotype drawn from basin ``i`` (with weight ``p_i(s)``)
lands in basin ``j`` (with weight ``p_j(s')``):

    w_ij = sum_s p_i(s) * (1/n) sum_{s' in V(s)} p_j(s')  /  sum_s p_i(s)

Written with the ``(2**n, p)`` membership matrix ``P`` and the hypercube
adjacency ``A`` this is ``P^T A P`` with rows scaled by ``1 / (n |b_i|)``.
The direct product costs ``2**n * p**2``.  Since ``P = (I - M)^{-1} E``, with
``M`` the pivot rule's move matrix and ``E`` selecting the optima,
``P^T X = E^T (I - M)^{-T} X`` for any ``X``.  The right-hand side is one
backward sweep over the move DAG, from high levels to low, costing
``nnz(M) * p``.  The same sweep run over bitsets with OR in place of
addition gives the exact edge set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .basins import (
    BasinMap,
    ImprovementDag,
    column_block,
    improvement_dag,
)
from .climbing import enumerate_local_optima, improvement_structure
from .errors import ConsistencyError
from .landscape import NkInstance


@dataclass(frozen=True, eq=False)
class Lon:
    """A local optima network.

    Node ``i`` is the local optimum with canonical id ``i``.  Node 0 is the
    global optimum, since ids are ordered by descending fitness.
    ``weights[i, j]`` is ``p(b_i -> b_j)`` including the diagonal, and
    ``edges`` is the exact structural edge set ``w_ij > 0``.
    """

    pivot_rule: str
    n: int
    k: int
    instance_id: str
    genotypes: np.ndarray
    fitness: np.ndarray
    basin_sizes: np.ndarray
    weights: np.ndarray
    edges: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.genotypes)

    @property
    def global_optimum(self) -> int:
        return int(np.argmax(self.fitness))

    @property
    def is_global_optimum(self) -> np.ndarray:
        flags = np.zeros(self.n_nodes, dtype=bool)
        flags[self.global_optimum] = True
        return flags

    def row_sum_error(self) -> float:
        return float(np.abs(self.weights.sum(axis=1) - 1.0).max())


def hypercube_or(bits: np.ndarray, n: int) -> np.ndarray:
    """Bitwise OR of the rows of every bit-flip neighbor."""
    out = np.zeros_like(bits)
    for b in range(n):
        view = bits.reshape((1 << (n - b - 1), 2, 1 << b) + bits.shape[1:])
        out.reshape(view.shape)[...] |= view[:, ::-1]
    return out


def adjoint_sweep(dag: ImprovementDag, x: np.ndarray) -> np.ndarray:
    """Solve ``Y = X + M^T Y`` in place, deepest level first."""
    _kernels.adjoint_sweep(dag.descending_order, dag.indptr, dag.indices, dag.weights, x)
    return x


def adjoint_sweep_bits(dag: ImprovementDag, bits: np.ndarray) -> np.ndarray:
    """Boolean counterpart of :func:`adjoint_sweep` on packed bitsets."""
    y = bits.copy()
    for lvl in range(dag.depth, 0, -1):
        r = dag.rows[lvl]
        for b in range(dag.n):
            src = r[dag.arcs[r, b]]
            y[src ^ (1 << b)] |= y[src]
    return y


def check_consistency(inst: NkInstance, bmap: BasinMap) -> np.ndarray:
    if bmap.n != inst.n or bmap.instance_id != inst.id:
        raise ConsistencyError(
            f"basin map of {bmap.instance_id!r} (n={bmap.n}) does not belong to "
            f"{inst.id!r} (n={inst.n})")
    lo = enumerate_local_optima(inst)
    if not np.array_equal(lo, bmap.local_optima):
        raise ConsistencyError(f"local optima of the basin map differ from {inst.id!r}")
    return lo


def transition_mass(inst: NkInstance, bmap: BasinMap,
                    dag: ImprovementDag | None = None) -> np.ndarray:
    """Unnormalized weights ``sum_s p_i(s) sum_{s' in V(s)} p_j(s')`` for all ``i, j``."""
    if dag is None:
        dag = improvement_dag(improvement_structure(inst), bmap.pivot_rule)
    lo = bmap.local_optima
    p, n = bmap.n_optima, inst.n
    probs = bmap.probability_matrix()
    cursor = probs.indptr[:-1].astype(np.int64)
    mass = np.zeros((p, p))
    width = column_block(n, p)
    for start in range(0, p, width):
        stop = min(start + width, p)
        block = np.zeros((inst.size, stop - start))
        _kernels.csr_column_block(probs.indptr, probs.indices, probs.data, cursor, stop, block)
        y = adjoint_sweep(dag, _kernels.hypercube_sum(block, n))
        mass[:, start:stop] = y[lo]
    return mass


def structural_edges(inst: NkInstance, bmap: BasinMap,
                     dag: ImprovementDag | None = None) -> np.ndarray:
    """Exact ``p x p`` edge set computed from supports, independent of float weights."""
    if dag is None:
        dag = improvement_dag(improvement_structure(inst), bmap.pivot_rule)
    bits = adjoint_sweep_bits(dag, hypercube_or(bmap.packed_support(), inst.n))
    rows = np.unpackbits(bits[bmap.local_optima], axis=1, bitorder="little")
    return rows[:, :bmap.n_optima].astype(bool)


def build_lon(inst: NkInstance, bmap: BasinMap) -> Lon:
    """Assemble the LON of ``inst`` from its basin map."""
    lo = check_consistency(inst, bmap)
    dag = improvement_dag(improvement_structure(inst), bmap.pivot_rule)
    mass = transition_mass(inst, bmap, dag)
    edges = structural_edges(inst, bmap, dag)
    sizes = bmap.sizes
    weights = mass / (inst.n * sizes[:, None])
    if (weights[~edges] != 0).any():
        raise AssertionError("positive weight on a pair with no structural edge")
    fit = inst.fitness_values[lo]
    for arr in (lo, fit, sizes, weights, edges):
        arr.setflags(write=False)
    return Lon(bmap.pivot_rule, inst.n, inst.k, inst.id, lo, fit, sizes, weights, edges)


def solution_to_basin_flow(inst: NkInstance, bmap: BasinMap, s: int) -> dict[int, float]:
    """``{j: p(s -> b_j)}``: basin mass reached by one uniform bit flip from ``s``."""
    flow: dict[int, float] = {}
    for b in range(inst.n):
        for j, prob in bmap.membership(s ^ (1 << b)):
            flow[j] = flow.get(j, 0.0) + prob / inst.n
    return dict(sorted(flow.items()))


def self_loop_summary(lon: Lon) -> tuple[float, float | None]:
    """Mean self-loop weight over nodes, and mean weight over off-diagonal edges.

    The second value is ``None`` when the network has no off-diagonal edge.
    """
    diag = np.diag(lon.weights)
    off = lon.edges & ~np.eye(lon.n_nodes, dtype=bool)
    wij = float(lon.weights[off].mean()) if off.any() else None
    return float(diag.mean()), wij

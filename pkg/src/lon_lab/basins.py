"""Exact basins of attraction for both pivot rules.

For best improvement every genotype drains to a single local optimum, found
by pointer jumping on the best-successor map.

For first improvement the climb is a random walk on the improvement DAG:
from a genotype that is not a local optimum the next state is uniform over its
strictly improving neighbors.  The probability ``p_i(s)`` of ending at local
optimum ``i`` therefore obeys

    p_i(s) = [s is LO_i]                           if s is a local optimum
    p_i(s) = mean of p_i(s') over improving s'     otherwise

which is evaluated level by level, where the level of a genotype is the
length of the longest improving path leaving it.  Every improving neighbor
sits on a strictly lower level, so each level only reads finished rows.
Supports are tracked separately as packed bitsets propagated with bitwise
OR, so the set ``{i : p_i(s) > 0}`` is exact and never depends on a float
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import IO

import numpy as np
import scipy.sparse as sp

from .climbing import (
    ImprovementStructure,
    enumerate_local_optima,
    improvement_structure,
)
from . import _kernels
from .errors import ParameterError
from .landscape import NkInstance, check_capacity

PIVOT_RULES = ("best", "first")

# Target size in float64 entries of one dense (2**n, block) column block.
BLOCK_ENTRIES = 1 << 24


def column_block(n: int, p: int) -> int:
    """Column block width for dense sweeps over ``2**n`` rows; a multiple of 8."""
    width = max(8, (BLOCK_ENTRIES >> n) // 8 * 8)
    return min(width, max(8, -(-p // 8) * 8))


@dataclass
class ImprovementDag:
    """The move graph of one pivot rule.

    ``arcs[s, b]`` is true when the rule may move from ``s`` to ``s ^ (1 << b)``;
    every arc strictly improves fitness, so the graph is acyclic.  The arcs
    are also held in CSR form (``indptr``, ``indices``, ``weights``) with
    weight ``1/outdegree``.  ``levels[s]`` is the longest arc path from ``s``
    to a sink, ``order`` lists genotypes by ascending level and ``rows[L]``
    holds level ``L`` (level 0 is the set of local optima).
    """

    n: int
    arcs: np.ndarray
    levels: np.ndarray
    order: np.ndarray
    rows: list[np.ndarray]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def depth(self) -> int:
        return len(self.rows) - 1

    @property
    def climbing_order(self) -> np.ndarray:
        """Non-sink genotypes, shallowest level first."""
        return self.order[len(self.rows[0]):]

    @property
    def descending_order(self) -> np.ndarray:
        return self.climbing_order[::-1]


def rule_arcs(struct: ImprovementStructure, pivot_rule: str) -> np.ndarray:
    """Boolean ``(2**n, n)`` move mask of a pivot rule."""
    if pivot_rule == "first":
        return struct.improving
    if pivot_rule == "best":
        return struct.neighbors == struct.best_successor[:, None]
    raise ParameterError(f"pivot rule must be one of {PIVOT_RULES}, got {pivot_rule!r}")


def longest_path_levels(arcs: np.ndarray) -> np.ndarray:
    """Length of the longest arc path from each genotype to a sink."""
    size, n = arcs.shape
    levels = np.zeros(size, dtype=np.int64)
    pending = arcs.sum(axis=1)
    frontier = np.flatnonzero(pending == 0)
    lvl = 0
    while frontier.size:
        levels[frontier] = lvl
        # genotypes with an arc into the frontier lose one pending arc each
        touched = []
        for b in range(n):
            pred = frontier ^ (1 << b)
            pred = pred[arcs[pred, b]]
            pending[pred] -= 1
            touched.append(pred)
        lvl += 1
        touched = np.unique(np.concatenate(touched))
        frontier = touched[pending[touched] == 0]
    return levels


def improvement_dag(struct: ImprovementStructure, pivot_rule: str = "first") -> ImprovementDag:
    arcs = rule_arcs(struct, pivot_rule)
    size, n = arcs.shape
    levels = longest_path_levels(arcs)
    order = np.argsort(levels, kind="stable")
    bounds = np.searchsorted(levels[order], np.arange(levels.max() + 2))
    rows = [order[bounds[i]:bounds[i + 1]] for i in range(levels.max() + 1)]
    # neighbor genotype order within each row: bit order sorted by target value
    targets = np.where(arcs, struct.neighbors, size)
    targets.sort(axis=1)
    outdeg = arcs.sum(axis=1)
    indptr = np.concatenate(([0], np.cumsum(outdeg)))
    indices = targets[targets < size]
    weights = np.repeat(1.0 / np.maximum(outdeg, 1), outdeg)
    return ImprovementDag(n, arcs, levels, order, rows, indptr, indices, weights)


@dataclass
class BasinMap:
    """Local-optimum membership of every genotype.

    Attributes:
        pivot_rule: ``"best"`` or ``"first"``.
        n: gene count of the source instance.
        instance_id: id of the source instance.
        local_optima: canonical local-optimum genotypes (position = id).
        lo_of: best rule only; id of the basin owning each genotype.
        probabilities: first rule only; ``(2**n, p)`` CSR matrix of ``p_i(s)``
            whose sparsity pattern is the exact support.
        support_bits: first rule only; ``(2**n, ceil(p/8))`` packed support
            bitsets, little-endian bit order within each byte.
    """

    pivot_rule: str
    n: int
    instance_id: str
    local_optima: np.ndarray
    lo_of: np.ndarray | None = None
    probabilities: sp.csr_array | None = None
    support_bits: np.ndarray | None = None

    @property
    def n_optima(self) -> int:
        return len(self.local_optima)

    @property
    def size(self) -> int:
        return 1 << self.n

    @cached_property
    def sizes(self) -> np.ndarray:
        """Probabilistic basin sizes ``sum_s p_i(s)`` for every local optimum."""
        if self.pivot_rule == "best":
            return np.bincount(self.lo_of, minlength=self.n_optima).astype(np.float64)
        return np.asarray(self.probabilities.sum(axis=0)).ravel()

    def probability_matrix(self) -> sp.csr_array:
        """``p_i(s)`` as a ``(2**n, p)`` CSR matrix for either rule."""
        if self.pivot_rule == "first":
            return self.probabilities
        return sp.csr_array((np.ones(self.size), self.lo_of, np.arange(self.size + 1)),
                            shape=(self.size, self.n_optima))

    def membership(self, s: int) -> list[tuple[int, float]]:
        """``(lo_id, p_i(s))`` pairs of the support of ``s``, by id."""
        if self.pivot_rule == "best":
            return [(int(self.lo_of[s]), 1.0)]
        rows = self.probabilities
        lo, hi = rows.indptr[s], rows.indptr[s + 1]
        return [(int(i), float(v)) for i, v in zip(rows.indices[lo:hi], rows.data[lo:hi])]

    def support_counts(self) -> np.ndarray:
        """Number of basins each genotype belongs to."""
        if self.pivot_rule == "best":
            return np.ones(self.size, dtype=np.int64)
        return np.bitwise_count(self.support_bits).sum(axis=1, dtype=np.int64)

    def packed_support(self) -> np.ndarray:
        """Support bitsets for either rule (see ``support_bits``)."""
        if self.pivot_rule == "first":
            return self.support_bits
        return pack_ids(self.size, np.arange(self.size), self.lo_of, self.n_optima)

    def support_mask(self, cols: slice | None = None) -> np.ndarray:
        """Dense boolean support matrix, optionally for a byte-aligned column slice."""
        if self.pivot_rule == "best":
            mask = np.zeros((self.size, self.n_optima), dtype=bool)
            mask[np.arange(self.size), self.lo_of] = True
            return mask if cols is None else mask[:, cols]
        cols = cols or slice(0, self.n_optima)
        start, stop = cols.start, min(cols.stop, self.n_optima)
        if start % 8:
            raise ParameterError("column slice must start on a multiple of 8")
        packed = self.support_bits[:, start // 8: -(-stop // 8)]
        bits = np.unpackbits(packed, axis=1, bitorder="little")
        return bits[:, : stop - start].astype(bool)


def _lo_index(size: int, lo: np.ndarray) -> np.ndarray:
    index = np.full(size, -1, dtype=np.int64)
    index[lo] = np.arange(len(lo))
    return index


def extract_best_basins(inst: NkInstance) -> BasinMap:
    """Deterministic basins: every genotype follows best successors to its optimum."""
    check_capacity(inst.n)
    struct = improvement_structure(inst)
    lo = enumerate_local_optima(inst)
    size = inst.size
    succ = np.where(struct.best_successor >= 0, struct.best_successor, np.arange(size))
    while True:
        jumped = succ[succ]
        if np.array_equal(jumped, succ):
            break
        succ = jumped
    lo_of = _lo_index(size, lo)[succ]
    return BasinMap("best", inst.n, inst.id, lo, lo_of=lo_of)


def pack_ids(size: int, rows: np.ndarray, ids: np.ndarray, p: int) -> np.ndarray:
    """Packed bitsets with bit ``ids[j]`` set in row ``rows[j]``."""
    bits = np.zeros((size, -(-p // 8)), dtype=np.uint8)
    np.bitwise_or.at(bits, (rows, ids // 8), (1 << (ids % 8)).astype(np.uint8))
    return bits


def support_bitsets(dag: ImprovementDag, lo: np.ndarray) -> np.ndarray:
    """Exact reachability of every local optimum, as packed bitsets."""
    size, n = dag.arcs.shape
    bits = pack_ids(size, lo, np.arange(len(lo)), len(lo))
    for r in dag.rows[1:]:
        for b in range(n):
            src = r[dag.arcs[r, b]]
            bits[src] |= bits[src ^ (1 << b)]
    return bits


def first_probability_block(dag: ImprovementDag, lo: np.ndarray, start: int,
                            stop: int) -> np.ndarray:
    """Dense ``p_i(s)`` for local optima ``start..stop-1`` over all genotypes."""
    block = np.zeros((1 << dag.n, stop - start))
    block[lo[start:stop], np.arange(stop - start)] = 1.0
    _kernels.forward_sweep(dag.climbing_order, dag.indptr, dag.indices, dag.weights, block)
    return block


def extract_first_basins(inst: NkInstance) -> BasinMap:
    """Exact first-improvement basin probabilities for every genotype."""
    check_capacity(inst.n)
    struct = improvement_structure(inst)
    lo = enumerate_local_optima(inst)
    dag = improvement_dag(struct, "first")
    bits = support_bitsets(dag, lo)
    bmap = BasinMap("first", inst.n, inst.id, lo, support_bits=bits)
    p, size = len(lo), inst.size
    # row lengths are known from the supports, so blocks scatter straight into CSR
    counts = bmap.support_counts()
    idx = np.int32 if counts.sum() < np.iinfo(np.int32).max else np.int64
    indptr = np.concatenate(([0], np.cumsum(counts))).astype(idx)
    data = np.empty(indptr[-1])
    indices = np.empty(indptr[-1], dtype=idx)
    filled = indptr[:-1].copy()
    width = column_block(inst.n, p)
    for start in range(0, p, width):
        stop = min(start + width, p)
        block = first_probability_block(dag, lo, start, stop)
        if _kernels.scatter_block(block, start, bits, filled, data, indices):
            raise AssertionError("probability mass outside the reachable support")
    bmap.probabilities = sp.csr_array((data, indices, indptr), shape=(size, p))
    return bmap


def extract_basins(inst: NkInstance, pivot_rule: str) -> BasinMap:
    if pivot_rule == "best":
        return extract_best_basins(inst)
    if pivot_rule == "first":
        return extract_first_basins(inst)
    raise ParameterError(f"pivot rule must be one of {PIVOT_RULES}, got {pivot_rule!r}")


def basin_size(bmap: BasinMap, lo_id: int) -> float:
    """``sum_s p_i(s)``; the plain basin cardinality under best improvement."""
    if not 0 <= lo_id < bmap.n_optima:
        raise ParameterError(f"unknown local optimum id {lo_id} (have {bmap.n_optima})")
    return float(bmap.sizes[lo_id])


def simulate_first_improvement(inst: NkInstance, start: int, runs: int,
                               rng: int | np.random.Generator | None = None) -> np.ndarray:
    """End points of ``runs`` independent first-improvement climbs from ``start``.

    Same law as :func:`~lon_lab.climbing.run_first_improvement` (a uniform
    random bit flip per proposal, accepted only when strictly improving),
    with all climbs advanced together.
    """
    if runs < 1:
        raise ParameterError(f"runs must be >= 1, got {runs}")
    rng = np.random.default_rng(rng)
    f = inst.fitness_values
    stuck = improvement_structure(inst).is_local_optimum
    state = np.full(runs, int(start), dtype=np.int64)
    active = np.flatnonzero(~stuck[state])
    while active.size:
        cur = state[active]
        prop = cur ^ (np.int64(1) << rng.integers(inst.n, size=active.size))
        up = f[prop] > f[cur]
        state[active[up]] = prop[up]
        active = active[~stuck[state[active]]]
    return state


def monte_carlo_basin_frequencies(inst: NkInstance, start: int, runs: int,
                                  seed: int | None = None) -> dict[int, float]:
    """Empirical ``{lo_id: frequency}`` of ``runs`` independent first-improvement climbs."""
    lo = enumerate_local_optima(inst)
    ends = simulate_first_improvement(inst, start, runs, seed)
    ids = np.searchsorted(lo, ends, sorter=np.argsort(lo))
    ids = np.argsort(lo)[ids]
    hits = np.bincount(ids, minlength=len(lo))
    return {int(i): hits[i] / runs for i in np.flatnonzero(hits)}


def write_basin_dump(bmap: BasinMap, fh: IO[str]) -> None:
    """Text table ``genotype,lo_id,probability``, one row per support pair."""
    fh.write("genotype,lo_id,probability\n")
    if bmap.pivot_rule == "best":
        for s, i in enumerate(bmap.lo_of):
            fh.write(f"{s},{i},1\n")
        return
    rows = bmap.probabilities
    for s in range(bmap.size):
        for j in range(rows.indptr[s], rows.indptr[s + 1]):
            fh.write(f"{s},{rows.indices[j]},{rows.data[j]:.12g}\n")


@dataclass(frozen=True)
class MonteCarloCheck:
    """Exact versus simulated basin membership of one start genotype.

    ``rows`` holds ``(lo_id, exact, empirical, sigma)`` for every optimum
    that either side gives positive probability; ``sigma`` is the binomial
    standard deviation ``sqrt(p (1 - p) / runs)`` of the exact value.
    """

    start: int
    runs: int
    rows: list[tuple[int, float, float, float]]

    @property
    def total_variation(self) -> float:
        return 0.5 * sum(abs(e - x) for _, x, e, _ in self.rows)

    @property
    def violations(self) -> list[int]:
        """Optima whose empirical frequency lies more than 3 sigma from the exact value."""
        bad = []
        for i, exact, emp, sigma in self.rows:
            if (sigma == 0 and emp != exact) or abs(emp - exact) > 3 * sigma:
                bad.append(i)
        return bad


def monte_carlo_check(inst: NkInstance, bmap: BasinMap, start: int, runs: int,
                      seed: int | None = None) -> MonteCarloCheck:
    if bmap.pivot_rule != "first":
        raise ParameterError("Monte Carlo check needs a first-improvement basin map")
    if not 0 <= start < inst.size:
        raise ParameterError(f"start {start} outside [0, 2**{inst.n})")
    exact = dict(bmap.membership(start))
    emp = monte_carlo_basin_frequencies(inst, start, runs, seed)
    rows = []
    for i in sorted(set(exact) | set(emp)):
        p = exact.get(i, 0.0)
        rows.append((i, p, emp.get(i, 0.0), float(np.sqrt(p * (1 - p) / runs))))
    return MonteCarloCheck(start, runs, rows)

"""Bit-flip hill climbing under the best- and first-improvement pivot rules.

A move is accepted only when it strictly increases fitness, so equal-fitness
neighbors never count as improvements.  Best improvement steps to the fittest
neighbor (lowest genotype integer on ties).  First improvement draws
neighbors uniformly at random and takes the first strictly improving one.
Whether the random order is a fresh permutation per step or an independent
draw per proposal, the accepted move is uniform over the improving
neighbors.  The exact basin computations in :mod:`lon_lab.basins` rely on
that law, and the stochastic runner here draws proposals with replacement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .landscape import NkInstance, check_capacity, neighbor_matrix, neighbors

NO_SUCCESSOR = -1


def improving_neighbors(inst: NkInstance, g: int) -> list[int]:
    """Neighbors of ``g`` with strictly greater fitness, in bit order."""
    f = inst.fitness_values
    fg = f[g]
    return [s for s in neighbors(g, inst.n) if f[s] > fg]


def is_local_optimum(inst: NkInstance, g: int) -> bool:
    return not improving_neighbors(inst, g)


def best_improvement_successor(inst: NkInstance, g: int) -> int | None:
    """Fittest improving neighbor of ``g``, or ``None`` at a local optimum."""
    better = improving_neighbors(inst, g)
    if not better:
        return None
    f = inst.fitness_values
    top = max(f[s] for s in better)
    return min(s for s in better if f[s] == top)


@dataclass(frozen=True)
class ImprovementStructure:
    """One-step improvement data for every genotype of an instance.

    ``improving[s, b]`` is true when flipping bit ``b`` of ``s`` strictly
    improves fitness; ``best_successor[s]`` is ``NO_SUCCESSOR`` at local optima.
    """

    fitness: np.ndarray
    neighbors: np.ndarray
    improving: np.ndarray
    n_improving: np.ndarray
    best_successor: np.ndarray

    @property
    def is_local_optimum(self) -> np.ndarray:
        return self.n_improving == 0


def improvement_structure(inst: NkInstance) -> ImprovementStructure:
    check_capacity(inst.n)
    f = inst.fitness_values
    nb = neighbor_matrix(inst.n)
    nf = f[nb]
    improving = nf > f[:, None]
    n_improving = improving.sum(axis=1)
    top = nf.max(axis=1)
    # lowest genotype among the fittest neighbors
    cand = np.where(nf == top[:, None], nb, np.iinfo(np.int64).max)
    best = cand.min(axis=1)
    best = np.where(n_improving > 0, best, NO_SUCCESSOR)
    return ImprovementStructure(f, nb, improving, n_improving, best)


def enumerate_local_optima(inst: NkInstance) -> np.ndarray:
    """All local optima, by descending fitness then ascending genotype.

    Position in the returned array is the canonical local-optimum id.
    """
    check_capacity(inst.n)
    f = inst.fitness_values
    nb = neighbor_matrix(inst.n)
    lo = np.flatnonzero((f[nb] <= f[:, None]).all(axis=1))
    return lo[np.lexsort((lo, -f[lo]))]


def climb_best(inst: NkInstance, start: int) -> list[int]:
    """Best-improvement trajectory from ``start`` to its local optimum."""
    path = [start]
    nxt = best_improvement_successor(inst, start)
    while nxt is not None:
        path.append(nxt)
        nxt = best_improvement_successor(inst, nxt)
    return path


def run_first_improvement(inst: NkInstance, start: int,
                          rng: int | np.random.Generator | None = None) -> int:
    """Simulate one first-improvement climb and return the local optimum reached.

    Each proposal is a uniformly random bit flip, accepted only when it
    strictly improves fitness.  The climb stops at the first genotype without
    improving neighbors.
    """
    rng = np.random.default_rng(rng)
    f = inst.fitness_values
    n = inst.n
    s = int(start)
    better = [t for t in neighbors(s, n) if f[t] > f[s]]
    while better:
        t = s ^ (1 << int(rng.integers(n)))
        if f[t] > f[s]:
            s = t
            better = [u for u in neighbors(s, n) if f[u] > f[s]]
    return s

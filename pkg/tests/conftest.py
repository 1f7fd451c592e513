"""Shared fixtures and independent reference implementations.

The oracles here are deliberately naive: plain loops over genotypes in
descending fitness order, direct double sums and exhaustive path
enumeration.  They share no code with the package beyond fitness lookup.
"""

import itertools

import numpy as np
import pytest

from lon_lab.landscape import generate_instance
from lon_lab.network import Lon

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_instances():
    return [generate_instance(n, k, seed=s) for n, k, s in
            [(6, 1, 0), (6, 2, 1), (8, 2, 2), (8, 5, 3), (10, 3, 4)]]


def oracle_local_optima(f, n):
    """Local optima by descending fitness then ascending genotype."""
    lo = [s for s in range(len(f)) if all(f[s ^ (1 << b)] <= f[s] for b in range(n))]
    return sorted(lo, key=lambda s: (-f[s], s))


def oracle_memberships(inst, rule):
    """Dense ``(2**n, p)`` matrix of ``p_i(s)`` by a descending-fitness DP.

    Improving neighbors are strictly fitter, so visiting genotypes from the
    fittest down guarantees every successor is already resolved.
    """
    f = inst.fitness_values
    n = inst.n
    lo = oracle_local_optima(f, n)
    col = {g: i for i, g in enumerate(lo)}
    probs = np.zeros((len(f), len(lo)))
    for s in sorted(range(len(f)), key=lambda s: -f[s]):
        better = [s ^ (1 << b) for b in range(n) if f[s ^ (1 << b)] > f[s]]
        if not better:
            probs[s, col[s]] = 1.0
        elif rule == "best":
            top = max(f[t] for t in better)
            probs[s] = probs[min(t for t in better if f[t] == top)]
        else:
            probs[s] = sum(probs[t] for t in better) / len(better)
    return np.array(lo), probs


def oracle_weights(inst, rule):
    """``w_ij`` by direct summation over every solution and each of its neighbors."""
    _, probs = oracle_memberships(inst, rule)
    n = inst.n
    p = probs.shape[1]
    mass = np.zeros((p, p))
    for s in range(inst.size):
        for b in range(n):
            mass += np.outer(probs[s], probs[s ^ (1 << b)]) / n
    return mass / probs.sum(axis=0)[:, None]


def oracle_distances(weights):
    """All-pairs shortest paths by enumerating every simple path (tiny graphs)."""
    p = len(weights)
    dist = np.full((p, p), np.inf)
    np.fill_diagonal(dist, 0.0)
    for i, j in itertools.permutations(range(p), 2):
        others = [v for v in range(p) if v not in (i, j)]
        for r in range(len(others) + 1):
            for mid in itertools.permutations(others, r):
                path = (i, *mid, j)
                steps = [weights[a, b] for a, b in zip(path, path[1:])]
                if all(w > 0 for w in steps):
                    dist[i, j] = min(dist[i, j], sum(1.0 / w for w in steps))
    return dist


def make_lon(weights, fitness=None, basin_sizes=None, rule="first"):
    """A ``Lon`` from a hand-written weight matrix (diagonal included)."""
    w = np.asarray(weights, dtype=float)
    p = len(w)
    fitness = np.linspace(1.0, 0.5, p) if fitness is None else np.asarray(fitness, float)
    sizes = np.ones(p) if basin_sizes is None else np.asarray(basin_sizes, float)
    return Lon(rule, 4, 1, "hand", np.arange(p), fitness, sizes, w, w > 0)

import numpy as np
import pytest

from conftest import oracle_local_optima
from lon_lab.climbing import (
    NO_SUCCESSOR,
    best_improvement_successor,
    climb_best,
    enumerate_local_optima,
    improvement_structure,
    improving_neighbors,
    is_local_optimum,
    run_first_improvement,
)
from lon_lab.landscape import NkInstance, generate_instance


def separable(tables):
    """k = 0 instance from per-gene ``[value if 0, value if 1]`` pairs."""
    t = np.array(tables, dtype=float)
    return NkInstance(n=len(t), k=0, model="random", links=np.empty((len(t), 0)),
                      tables=t, seed=0)


def test_plateau_moves_are_not_improvements():
    inst = separable([[0.3, 0.3], [0.1, 0.6]])
    # flipping gene 0 never changes fitness
    assert improving_neighbors(inst, 0b00) == [0b10]
    assert is_local_optimum(inst, 0b10)
    assert is_local_optimum(inst, 0b11)
    assert list(enumerate_local_optima(inst)) == [2, 3]


def test_best_successor_breaks_ties_by_lowest_genotype():
    inst = separable([[0.0, 0.5], [0.0, 0.5], [0.0, 0.2]])
    assert best_improvement_successor(inst, 0b000) == 0b001
    assert best_improvement_successor(inst, 0b011) == 0b111
    assert best_improvement_successor(inst, 0b111) is None


def test_structure_matches_scalar_functions(small_instances):
    for inst in small_instances:
        st = improvement_structure(inst)
        for s in range(0, inst.size, 7):
            better = improving_neighbors(inst, s)
            assert st.n_improving[s] == len(better)
            assert sorted(st.neighbors[s][st.improving[s]].tolist()) == sorted(better)
            nxt = best_improvement_successor(inst, s)
            assert st.best_successor[s] == (NO_SUCCESSOR if nxt is None else nxt)


def test_local_optima_against_brute_force(small_instances):
    for inst in small_instances:
        lo = enumerate_local_optima(inst)
        assert lo.tolist() == oracle_local_optima(inst.fitness_values, inst.n)
        assert lo[0] == np.argmax(inst.fitness_values)


def test_k_zero_has_a_single_optimum():
    inst = generate_instance(8, 0, seed=5)
    lo = enumerate_local_optima(inst)
    assert len(lo) == 1
    assert lo[0] == np.argmax(inst.fitness_values)


def test_best_climb_is_strictly_increasing():
    inst = generate_instance(10, 4, seed=2)
    f = inst.fitness_values
    for start in range(0, inst.size, 37):
        path = climb_best(inst, start)
        assert all(f[b] > f[a] for a, b in zip(path, path[1:]))
        assert is_local_optimum(inst, path[-1])


def test_first_improvement_ends_at_a_local_optimum():
    inst = generate_instance(10, 4, seed=2)
    rng = np.random.default_rng(0)
    lo = set(enumerate_local_optima(inst).tolist())
    for start in range(0, inst.size, 53):
        assert run_first_improvement(inst, start, rng) in lo


def test_first_improvement_from_an_optimum_stays():
    inst = generate_instance(8, 3, seed=1)
    g = int(enumerate_local_optima(inst)[0])
    assert run_first_improvement(inst, g, 1) == g


@pytest.mark.parametrize("seed", [0, 1])
def test_first_improvement_accepts_uniformly(seed):
    # each gene pays 0.5 when it is the only 1 and 0.1 when all are 0, so
    # from 000 all three flips improve and each lands on its own optimum
    table = [0.1, 0.5, 0, 0, 0, 0, 0, 0]
    inst = NkInstance(n=3, k=2, model="random", links=[[1, 2], [0, 2], [0, 1]],
                      tables=np.tile(table, (3, 1)), seed=0)
    # 111 is a zero plateau, an optimum under strict improvement
    assert sorted(enumerate_local_optima(inst).tolist()) == [1, 2, 4, 7]
    rng = np.random.default_rng(seed)
    ends = [run_first_improvement(inst, 0, rng) for _ in range(3000)]
    counts = np.bincount(ends, minlength=8)[[1, 2, 4]]
    assert counts.sum() == 3000
    assert np.all(np.abs(counts - 1000) < 4 * np.sqrt(3000 * (1 / 3) * (2 / 3)))

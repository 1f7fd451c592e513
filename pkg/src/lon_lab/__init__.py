"""Exhaustive local optima networks of NK landscapes.

Typical use::

    inst = generate_instance(14, 4, seed=1)
    bmap = extract_basins(inst, "first")
    lon = build_lon(inst, bmap)
    report, _ = compute_metrics(inst, bmap, lon)
"""

__version__ = "0.1.0"

from .basins import BasinMap, basin_size, extract_basins, monte_carlo_check
from .climbing import (
    best_improvement_successor,
    enumerate_local_optima,
    improving_neighbors,
    is_local_optimum,
    run_first_improvement,
)
from .errors import CapacityError, ConsistencyError, LonLabError, ParameterError, ParseError
from .experiments import EnsembleConfig, EnsembleReport, reproduce_table, run_ensemble
from .export import export_lon
from .landscape import NkInstance, fitness, generate_instance, parse_instance, serialize_instance
from .metrics import (
    MetricsReport,
    basins_per_solution,
    compute_metrics,
    disparity,
    fitness_basin_correlation,
    shortest_paths,
    weight_distribution,
    weighted_clustering,
)
from .network import Lon, build_lon, self_loop_summary, solution_to_basin_flow

__all__ = [
    "BasinMap", "CapacityError", "ConsistencyError", "EnsembleConfig", "EnsembleReport",
    "Lon", "LonLabError", "MetricsReport", "NkInstance", "ParameterError", "ParseError",
    "basin_size", "basins_per_solution", "best_improvement_successor", "build_lon",
    "compute_metrics", "disparity", "enumerate_local_optima", "export_lon", "extract_basins",
    "fitness", "fitness_basin_correlation", "generate_instance", "improving_neighbors",
    "is_local_optimum", "monte_carlo_check", "parse_instance", "reproduce_table",
    "run_ensemble", "run_first_improvement", "self_loop_summary", "serialize_instance",
    "shortest_paths", "solution_to_basin_flow", "weight_distribution", "weighted_clustering",
]

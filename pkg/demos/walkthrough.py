"""One NK landscape from generation to network metrics.

Run with ``python demos/walkthrough.py [n] [k] [seed]``; defaults to a
12-gene landscape with K=4, which takes a second or two.
"""

import sys

import numpy as np

from lon_lab import (
    build_lon,
    compute_metrics,
    extract_basins,
    generate_instance,
    monte_carlo_check,
    self_loop_summary,
)


def main(n=12, k=4, seed=1):
    inst = generate_instance(n, k, seed=seed)
    print(f"landscape {inst.id}: {inst.size} genotypes")

    for rule in ("best", "first"):
        bmap = extract_basins(inst, rule)
        lon = build_lon(inst, bmap)
        report, bps = compute_metrics(inst, bmap, lon)
        wii, wij = self_loop_summary(lon)
        print(f"\n{rule}-improvement network")
        print(f"  local optima          {lon.n_nodes}")
        print(f"  edge density          {report.edge_density:.3f}")
        print(f"  mean clustering       {report.cw_mean:.3f}")
        print(f"  mean disparity        {report.y_mean:.4f}")
        print(f"  mean path length      {report.d_mean:.1f}")
        print(f"  path to global opt.   {report.d_best_mean:.1f}")
        print(f"  mean w_ii / w_ij      {wii:.3f} / {wij:.5f}")
        print(f"  rho(fitness, size)    {report.rho_fitness_size:.3f}")
        print(f"  basins per solution   {bps.mean:.2f} ({bps.fraction:.1%} of all basins)")
        top = np.argsort(lon.basin_sizes)[::-1][:3]
        print("  largest basins        " + ", ".join(
            f"LO {i} (f={lon.fitness[i]:.3f}, size {lon.basin_sizes[i]:.1f})" for i in top))

    # the exact first-improvement probabilities agree with simulated climbs
    bmap = extract_basins(inst, "first")
    start = int(np.argmin(inst.fitness_values))
    check = monte_carlo_check(inst, bmap, start, runs=10_000, seed=seed)
    print(f"\nfrom the worst genotype {start}: {len(check.rows)} reachable optima, "
          f"total variation {check.total_variation:.4f}, "
          f"{len(check.violations)} outside 3 sigma")


if __name__ == "__main__":
    main(*map(int, sys.argv[1:]))

"""How the networks change as epistasis grows.

Runs a small ensemble (a few instances per K at N=12), writes the table and
figure series to ``demos/out`` and prints the table.  The full-size grid is
in ``full_grid.json``; run it with ``lon-lab ensemble --config``.
"""

import sys
from pathlib import Path

from lon_lab import EnsembleConfig, reproduce_table, run_ensemble


def main(replicates=5):
    out = Path(__file__).parent / "out"
    config = EnsembleConfig(n_list=[12], k_list=[2, 4, 6, 8, 10, 11],
                            instances_per_cell=replicates, out_dir=str(out))
    report = run_ensemble(config)
    md, _ = reproduce_table(report)
    print(md)

    print("K   w_ii b    w_ii f    rho b   rho f   basins/solution f")
    for n, k in config.cells:
        b, f = report.cell(n, k, "best"), report.cell(n, k, "first")
        print(f"{k:<3} {b['wii_mean_mean']:.3f}     {f['wii_mean_mean']:.3f}     "
              f"{b['rho_fitness_size_mean']:.2f}    {f['rho_fitness_size_mean']:.2f}    "
              f"{f['bps_fraction_mean']:.1%}")
    print(f"\nCSV outputs in {out}")


if __name__ == "__main__":
    main(*map(int, sys.argv[1:]))

"""``lon-lab`` command line.

Exit status: 0 on success, 2 on usage errors, 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .basins import PIVOT_RULES, extract_basins, monte_carlo_check, write_basin_dump
from .errors import LonLabError
from .experiments import SEED_FORMULA, EnsembleConfig, load_config, run_ensemble
from .export import FORMATS, atomic_write, export_lon
from .landscape import MODELS, generate_instance, parse_instance, serialize_instance
from .metrics import compute_metrics, metrics_csv, weight_distribution
from .network import build_lon

log = logging.getLogger("lon_lab")

OUT_DIR_ENV = "LON_LAB_OUT_DIR"
EXTENSIONS = {"edge-csv": "csv", "dot": "dot", "graphml": "graphml"}

EPILOG = f"""\
Seeds: generate writes instances with seeds --seed, --seed+1, ...; ensemble
replicates use "{SEED_FORMULA}".

Files:
  instance  JSON: format_version, id, n, k, model, seed, links (n x k),
            tables (n x 2^(k+1), 17 significant digits)
  edge-csv  from_lo,to_lo,weight (12 significant digits, self-loops included,
            rows ordered by from_lo then to_lo)
  dot, graphml  nodes carry genotype, fitness, basin_size, is_global_optimum;
            edges carry weight
  metrics   one row per pivot rule: instance_id, n, k, model, pivot_rule, n_v,
            edge_density, cw_mean, y_mean, d_mean, d_best_mean, wii_mean,
            wij_mean, rho_fitness_size, basins_per_solution_mean,
            go_basin_fraction, unreachable_pairs, then extra columns
  ensemble  ensemble_report.csv, replicate_metrics.csv, table1.md, table1.csv,
            fig2_weights.csv, fig3_wii.csv, fig4_rho.csv, fig5_basins.csv,
            fig5_profile.csv, metadata.json

Output directories default to ${OUT_DIR_ENV} when set, else the current directory.
Local optimum ids order optima by descending fitness; id 0 is the global optimum.
"""


def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


def _add_format_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--csv", dest="fmt", action="store_const", const="edge-csv",
                       help="edge-list CSV (default)")
    group.add_argument("--dot", dest="fmt", action="store_const", const="dot")
    group.add_argument("--graphml", dest="fmt", action="store_const", const="graphml")
    group.add_argument("--format", dest="fmt", choices=FORMATS)
    p.set_defaults(fmt="edge-csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lon-lab", description="Exhaustive local optima networks of NK landscapes.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="write NK instance documents")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--model", choices=MODELS, default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("extract", help="build the LON of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--rule", choices=PIVOT_RULES, default="first")
    p.add_argument("--out", required=True, help="LON output file")
    p.add_argument("--basins", help="also write genotype,lo_id,probability rows here")
    _add_format_flags(p)

    p = sub.add_parser("metrics", help="network statistics of an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--rules", nargs="+", choices=PIVOT_RULES, default=list(PIVOT_RULES))
    p.add_argument("--out", required=True, help="metrics CSV")
    p.add_argument("--weights", help="also write the log-binned weight histogram here")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--spearman", action="store_true",
                   help="rank correlation for rho_fitness_size")

    p = sub.add_parser("ensemble", help="run an ensemble and write tables and figure data")
    p.add_argument("--config", help="JSON file with EnsembleConfig fields")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--k-list", type=int, nargs="+")
    p.add_argument("--rules", nargs="+", choices=PIVOT_RULES)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("export", help="write the LON of an instance in one or more formats")
    p.add_argument("--instance", required=True)
    p.add_argument("--rules", nargs="+", choices=PIVOT_RULES, default=list(PIVOT_RULES))
    p.add_argument("--out-dir", default=None)
    _add_format_flags(p)

    p = sub.add_parser("mc-check", help="compare simulated first-improvement climbs with exact basins")
    p.add_argument("--instance", required=True)
    p.add_argument("--start", type=int, nargs="+", required=True)
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit 1 on any 3-sigma violation")
    return parser


def _load_instance(path: str):
    return parse_instance(Path(path).read_bytes())


def cmd_generate(args) -> int:
    out = Path(args.out_dir or _default_out_dir())
    for c in range(args.count):
        inst = generate_instance(args.n, args.k, args.model, args.seed + c)
        path = atomic_write(out / f"{inst.id}.json", serialize_instance(inst))
        print(path)
    return 0


def cmd_extract(args) -> int:
    inst = _load_instance(args.instance)
    bmap = extract_basins(inst, args.rule)
    lon = build_lon(inst, bmap)
    atomic_write(args.out, export_lon(lon, args.fmt))
    if args.basins:
        buf = io.StringIO()
        write_basin_dump(bmap, buf)
        atomic_write(args.basins, buf.getvalue().encode("utf-8"))
    print(f"{inst.id} {args.rule}: {lon.n_nodes} optima, {int(lon.edges.sum())} edges -> {args.out}")
    return 0


def cmd_metrics(args) -> int:
    inst = _load_instance(args.instance)
    reports, hist_lines = [], ["pivot_rule,bin_low,bin_high,mass"]
    for rule in args.rules:
        bmap = extract_basins(inst, rule)
        lon = build_lon(inst, bmap)
        report, _ = compute_metrics(inst, bmap, lon, "spearman" if args.spearman else "pearson")
        reports.append(report)
        edges, masses = weight_distribution(lon, args.bins)
        for b, m in enumerate(masses):
            hist_lines.append(f"{rule},{edges[b]:.12g},{edges[b + 1]:.12g},{m:.12g}")
    atomic_write(args.out, metrics_csv(reports))
    if args.weights:
        atomic_write(args.weights, ("\n".join(hist_lines) + "\n").encode("utf-8"))
    print(args.out)
    return 0


def cmd_ensemble(args) -> int:
    overrides = dict(instances_per_cell=args.replicates, base_seed=args.seed, jobs=args.jobs,
                     model=args.model, pivot_rules=args.rules,
                     out_dir=args.out_dir or _default_out_dir())
    if args.config:
        if args.n is not None:
            overrides["n_list"] = args.n
        if args.k_list is not None:
            overrides["k_list"] = args.k_list
        config = load_config(args.config, **overrides)
    else:
        if args.n is None or args.k_list is None:
            raise UsageError("ensemble needs --config or both --n and --k-list")
        config = EnsembleConfig.from_dict({"n_list": args.n, "k_list": args.k_list}, **overrides)
    report = run_ensemble(config)
    print(f"{len(report.replicates)} replicates -> {config.out_dir}")
    return 0


def cmd_export(args) -> int:
    inst = _load_instance(args.instance)
    out = Path(args.out_dir or _default_out_dir())
    for rule in args.rules:
        lon = build_lon(inst, extract_basins(inst, rule))
        path = atomic_write(out / f"{inst.id}-{rule}.{EXTENSIONS[args.fmt]}",
                            export_lon(lon, args.fmt))
        print(path)
    return 0


def cmd_mc_check(args) -> int:
    inst = _load_instance(args.instance)
    bmap = extract_basins(inst, "first")
    failed = False
    print("start,lo_id,exact,empirical,sigma,flag")
    for start in args.start:
        check = monte_carlo_check(inst, bmap, start, args.runs, args.seed)
        bad = set(check.violations)
        for i, exact, emp, sigma in check.rows:
            flag = "VIOLATION" if i in bad else "ok"
            print(f"{start},{i},{exact:.6g},{emp:.6g},{sigma:.3g},{flag}")
        print(f"# start {start}: total variation {check.total_variation:.4f}, "
              f"{len(bad)} violation(s) over {len(check.rows)} optima")
        failed |= bool(bad)
    return 1 if failed and args.strict else 0


class UsageError(Exception):
    pass


COMMANDS = {
    "generate": cmd_generate,
    "extract": cmd_extract,
    "metrics": cmd_metrics,
    "ensemble": cmd_ensemble,
    "export": cmd_export,
    "mc-check": cmd_mc_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"lon-lab: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"lon-lab: error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (LonLabError, OSError) as exc:
        print(f"lon-lab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

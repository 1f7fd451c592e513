"""Ensembles of random NK instances: run, aggregate, tabulate.

Replicate ``r`` of cell ``(n, k)`` uses the instance seed

    base_seed + (100 * n + k) * instances_per_cell + r

so a replicate never changes when cells are added to or removed from a
configuration.  Standard deviations are sample deviations (``ddof=1``); a
cell with a single replicate reports 0.
"""

from __future__ import annotations

import csv
import io
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basins import PIVOT_RULES, extract_basins
from .errors import LonLabError, ParameterError
from .export import atomic_write
from .landscape import MODELS, check_capacity, generate_instance
from .metrics import (
    FITNESS_BINS,
    METRIC_COLUMNS,
    MetricsReport,
    compute_metrics,
    format_value,
    off_diagonal,
    weight_distribution,
)
from .network import build_lon

SEED_FORMULA = "seed = base_seed + (100 * n + k) * instances_per_cell + replicate"
ID_COLUMNS = ("instance_id", "n", "k", "model", "pivot_rule")
SCALAR_COLUMNS = tuple(c for c in METRIC_COLUMNS if c not in ID_COLUMNS)
WEIGHT_BINS = 50


class ReplicateError(LonLabError):
    def __init__(self, n, k, replicate, cause):
        super().__init__(f"n={n} k={k} replicate={replicate}: {cause}")
        self.n, self.k, self.replicate = n, k, replicate


@dataclass(frozen=True)
class EnsembleConfig:
    """What to run.

    ``k_list`` is either one list used for every ``n`` or a mapping from
    ``n`` to its own list.
    """

    n_list: tuple
    k_list: tuple | dict
    model: str = "random"
    instances_per_cell: int = 30
    base_seed: int = 0
    pivot_rules: tuple = PIVOT_RULES
    out_dir: str | None = None
    jobs: int = 1
    weight_bins: int = WEIGHT_BINS
    fitness_bins: int = FITNESS_BINS

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if isinstance(self.k_list, dict):
            grid = {int(n): tuple(int(k) for k in ks) for n, ks in self.k_list.items()}
            object.__setattr__(self, "k_list", grid)
        else:
            object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))
        object.__setattr__(self, "pivot_rules", tuple(self.pivot_rules))
        if self.instances_per_cell < 1:
            raise ParameterError("instances_per_cell must be >= 1")
        if self.jobs < 1:
            raise ParameterError("jobs must be >= 1")
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}")
        if not self.pivot_rules or set(self.pivot_rules) - set(PIVOT_RULES):
            raise ParameterError(f"pivot_rules must be a non-empty subset of {PIVOT_RULES}")
        for n, k in self.cells:
            if n < 2 or not 0 <= k <= n - 1 or k >= 100:
                raise ParameterError(f"invalid cell n={n}, k={k}")

    @property
    def cells(self) -> list[tuple[int, int]]:
        if isinstance(self.k_list, dict):
            return [(n, k) for n in self.n_list for k in self.k_list.get(n, ())]
        return [(n, k) for n in self.n_list for k in self.k_list]

    def seed(self, n: int, k: int, replicate: int) -> int:
        return self.base_seed + (100 * n + k) * self.instances_per_cell + replicate

    def to_dict(self) -> dict:
        k_list = ({str(n): list(ks) for n, ks in self.k_list.items()}
                  if isinstance(self.k_list, dict) else list(self.k_list))
        return {
            "n_list": list(self.n_list), "k_list": k_list, "model": self.model,
            "instances_per_cell": self.instances_per_cell, "base_seed": self.base_seed,
            "pivot_rules": list(self.pivot_rules), "weight_bins": self.weight_bins,
            "fitness_bins": self.fitness_bins,
        }

    @classmethod
    def from_dict(cls, doc: dict, **overrides) -> EnsembleConfig:
        known = {"n_list", "k_list", "model", "instances_per_cell", "base_seed",
                 "pivot_rules", "out_dir", "jobs", "weight_bins", "fitness_bins"}
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        args = dict(doc)
        args.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**args)


@dataclass
class ReplicateResult:
    n: int
    k: int
    replicate: int
    seed: int
    metrics: dict[str, MetricsReport]
    weight_hist: dict[str, tuple[np.ndarray, np.ndarray]]
    profile: dict[str, np.ndarray]


def run_replicate(config: EnsembleConfig, n: int, k: int, replicate: int) -> ReplicateResult:
    """One instance, every requested pivot rule."""
    seed = config.seed(n, k, replicate)
    try:
        inst = generate_instance(n, k, config.model, seed)
        metrics, lons, profile = {}, {}, {}
        for rule in config.pivot_rules:
            bmap = extract_basins(inst, rule)
            lon = build_lon(inst, bmap)
            metrics[rule], bps = compute_metrics(inst, bmap, lon)
            profile[rule] = bps.profile
            lons[rule] = lon
            del bmap
        # both rules share one set of log bins so their histograms compare directly
        ws = [lon.weights[off_diagonal(lon)] for lon in lons.values()]
        ws = [w for w in ws if w.size]
        rng = (min(w.min() for w in ws), max(w.max() for w in ws)) if ws else None
        hist = {rule: weight_distribution(lon, config.weight_bins, rng)
                for rule, lon in lons.items()}
    except LonLabError as exc:
        raise ReplicateError(n, k, replicate, exc) from exc
    return ReplicateResult(n, k, replicate, seed, metrics, hist, profile)


def _run_task(args):
    return run_replicate(*args)


def aggregate(values: list) -> tuple[float | None, float | None, int]:
    """Mean, sample std and count of the defined values (std 0 for one value)."""
    xs = np.array([v for v in values if v is not None and not np.isnan(v)], dtype=float)
    if xs.size == 0:
        return None, None, 0
    std = float(xs.std(ddof=1)) if xs.size > 1 else 0.0
    return float(xs.mean()), std, int(xs.size)


@dataclass
class EnsembleReport:
    config: EnsembleConfig
    replicates: list[ReplicateResult] = field(default_factory=list)

    def rows(self) -> list[MetricsReport]:
        return [r.metrics[rule] for r in self.replicates for rule in self.config.pivot_rules]

    def summary(self) -> list[dict]:
        """One row per ``(n, k, pivot_rule)`` with ``<metric>_mean`` / ``<metric>_std``."""
        out = []
        for n, k in self.config.cells:
            reps = [r for r in self.replicates if (r.n, r.k) == (n, k)]
            for rule in self.config.pivot_rules:
                row = {"n": n, "k": k, "pivot_rule": rule, "replicates": len(reps)}
                for col in SCALAR_COLUMNS:
                    mean, std, _ = aggregate([getattr(r.metrics[rule], col) for r in reps])
                    row[f"{col}_mean"], row[f"{col}_std"] = mean, std
                out.append(row)
        return out

    def cell(self, n: int, k: int, rule: str) -> dict:
        for row in self.summary():
            if (row["n"], row["k"], row["pivot_rule"]) == (n, k, rule):
                return row
        raise KeyError((n, k, rule))


def run_ensemble(config: EnsembleConfig, write: bool = True) -> EnsembleReport:
    """Run every replicate of every cell and, if ``config.out_dir`` is set, write outputs.

    Results are ordered by ``(n, k, replicate)`` whatever the parallelism degree.
    """
    if not config.cells:
        warnings.warn("empty k_list: nothing to run", stacklevel=2)
    for n, _ in config.cells:
        check_capacity(n)
    tasks = [(config, n, k, r) for n, k in config.cells
             for r in range(config.instances_per_cell)]
    if config.jobs == 1 or len(tasks) <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    results.sort(key=lambda r: (r.n, r.k, r.replicate))
    report = EnsembleReport(config, results)
    if write and config.out_dir is not None:
        write_outputs(report, config.out_dir)
    return report


# -- output files --------------------------------------------------------------

def _csv(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _summary_csv(report: EnsembleReport) -> bytes:
    rows = report.summary()
    header = ["n", "k", "pivot_rule", "replicates"]
    header += [f"{c}_{s}" for c in SCALAR_COLUMNS for s in ("mean", "std")]
    return _csv(header, ([row[h] for h in header] for row in rows))


def _replicate_csv(report: EnsembleReport) -> bytes:
    header = ["replicate", "seed"] + METRIC_COLUMNS
    rows = []
    for r in report.replicates:
        for rule in report.config.pivot_rules:
            rows.append([r.replicate, r.seed] + list(r.metrics[rule].as_row().values()))
    return _csv(header, rows)


def _figure_csv(report: EnsembleReport, cols: list[str]) -> bytes:
    header = ["n", "k", "pivot_rule", "replicates"]
    header += [f"{c}_{s}" for c in cols for s in ("mean", "std")]
    return _csv(header, ([row[h] for h in header] for row in report.summary()))


def _fig2_csv(report: EnsembleReport) -> bytes:
    header = ["n", "k", "replicate", "instance_id", "pivot_rule", "bin_low", "bin_high", "mass"]
    rows = []
    for r in report.replicates:
        for rule in report.config.pivot_rules:
            edges, masses = r.weight_hist[rule]
            iid = r.metrics[rule].instance_id
            for b, m in enumerate(masses):
                rows.append([r.n, r.k, r.replicate, iid, rule, edges[b], edges[b + 1], m])
    return _csv(header, rows)


def _profile_csv(report: EnsembleReport) -> bytes:
    header = ["n", "k", "replicate", "instance_id", "pivot_rule",
              "fitness_low", "fitness_high", "mean_basins", "n_solutions"]
    rows = []
    for r in report.replicates:
        for rule in report.config.pivot_rules:
            iid = r.metrics[rule].instance_id
            for lo, hi, mean, count in r.profile[rule]:
                rows.append([r.n, r.k, r.replicate, iid, rule, lo, hi, mean, int(count)])
    return _csv(header, rows)


TABLE_COLUMNS = [
    # (label, metric, rule, decimals)
    ("n_v", "n_v", None, 0),
    ("density b-LON", "edge_density", "best", 2),
    ("density f-LON", "edge_density", "first", 2),
    ("C^w b-LON", "cw_mean", "best", 2),
    ("Y b-LON", "y_mean", "best", 3),
    ("Y f-LON", "y_mean", "first", 3),
    ("d b-LON", "d_mean", "best", 0),
    ("d f-LON", "d_mean", "first", 0),
    ("d_best b-LON", "d_best_mean", "best", 0),
    ("d_best f-LON", "d_best_mean", "first", 0),
]


def table_rows(report: EnsembleReport) -> list[dict]:
    """Table cells ``{label: (mean, std)}`` per ``(n, k)``; missing rules give ``None``."""
    summary = {(r["n"], r["k"], r["pivot_rule"]): r for r in report.summary()}
    out = []
    for n, k in report.config.cells:
        row = {"n": n, "k": k}
        for label, metric, rule, _ in TABLE_COLUMNS:
            rules = [rule] if rule else list(report.config.pivot_rules)
            src = next((summary[(n, k, r)] for r in rules if (n, k, r) in summary), None)
            row[label] = None if src is None else (src[f"{metric}_mean"], src[f"{metric}_std"])
        out.append(row)
    return out


def reproduce_table(report: EnsembleReport) -> tuple[str, bytes]:
    """Markdown and CSV renderings of the network-properties table."""
    rows = table_rows(report)

    def cell(value, decimals):
        if value is None or value[0] is None:
            return "-"
        mean, std = value
        return f"{mean:.{decimals}f} ({std:.{decimals + 1 if decimals else 0}f})"

    labels = [c[0] for c in TABLE_COLUMNS]
    md = ["| N | K | " + " | ".join(labels) + " |",
          "|" + "---|" * (len(labels) + 2)]
    for row in rows:
        cells = [cell(row[label], dec) for label, _, _, dec in TABLE_COLUMNS]
        md.append(f"| {row['n']} | {row['k']} | " + " | ".join(cells) + " |")
    md.append("")
    md.append("Values are means over instances with sample standard deviations in parentheses.")
    header = ["n", "k"] + [f"{label} {s}" for label in labels for s in ("mean", "std")]
    csv_rows = []
    for row in rows:
        vals = [row["n"], row["k"]]
        for label in labels:
            vals += list(row[label]) if row[label] is not None else [None, None]
        csv_rows.append(vals)
    return "\n".join(md) + "\n", _csv(header, csv_rows)


def write_outputs(report: EnsembleReport, out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    md, table_csv = reproduce_table(report)
    meta = {
        "config": report.config.to_dict(),
        "seed_formula": SEED_FORMULA,
        "std": "sample (ddof=1); 0 for a single replicate",
        "seeds": [[r.n, r.k, r.replicate, r.seed] for r in report.replicates],
    }
    files = {
        "ensemble_report.csv": _summary_csv(report),
        "replicate_metrics.csv": _replicate_csv(report),
        "table1.md": md.encode("utf-8"),
        "table1.csv": table_csv,
        "fig2_weights.csv": _fig2_csv(report),
        "fig3_wii.csv": _figure_csv(report, ["wii_mean", "wij_mean"]),
        "fig4_rho.csv": _figure_csv(report, ["rho_fitness_size"]),
        "fig5_basins.csv": _figure_csv(report, ["basins_per_solution_mean", "bps_fraction",
                                                "bps_top_decile", "bps_bottom_decile"]),
        "fig5_profile.csv": _profile_csv(report),
        "metadata.json": (json.dumps(meta, indent=2) + "\n").encode("utf-8"),
    }
    return [atomic_write(out / name, data) for name, data in files.items()]


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_report(out_dir: str | os.PathLike) -> EnsembleReport:
    """Rebuild a report from the files written by :func:`write_outputs`.

    Floats come back at the 12 significant digits of the CSV files.
    """
    out = Path(out_dir)
    meta = json.loads((out / "metadata.json").read_text())
    config = EnsembleConfig.from_dict(meta["config"], out_dir=str(out))
    by_key: dict[tuple, ReplicateResult] = {}
    with open(out / "replicate_metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {c: _parse_cell(row[c]) for c in METRIC_COLUMNS}
            for c in ("instance_id", "model", "pivot_rule"):
                vals[c] = row[c]
            key = (vals["n"], vals["k"], int(row["replicate"]))
            res = by_key.setdefault(key, ReplicateResult(*key, int(row["seed"]), {}, {}, {}))
            res.metrics[vals["pivot_rule"]] = MetricsReport(**vals)
    hists: dict[tuple, list] = {}
    with open(out / "fig2_weights.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["n"]), int(row["k"]), int(row["replicate"]), row["pivot_rule"])
            hists.setdefault(key, []).append(
                (float(row["bin_low"]), float(row["bin_high"]), float(row["mass"])))
    profiles: dict[tuple, list] = {}
    with open(out / "fig5_profile.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["n"]), int(row["k"]), int(row["replicate"]), row["pivot_rule"])
            profiles.setdefault(key, []).append(
                [float(row[c]) for c in ("fitness_low", "fitness_high", "mean_basins", "n_solutions")])
    for (n, k, r), res in by_key.items():
        for rule in config.pivot_rules:
            h = hists.get((n, k, r, rule), [])
            edges = np.array([b[0] for b in h] + [h[-1][1]]) if h else np.empty(0)
            res.weight_hist[rule] = (edges, np.array([b[2] for b in h]))
            res.profile[rule] = np.array(profiles.get((n, k, r, rule), np.empty((0, 4))))
    results = sorted(by_key.values(), key=lambda r: (r.n, r.k, r.replicate))
    return EnsembleReport(config, results)


def load_config(path: str | os.PathLike, **overrides) -> EnsembleConfig:
    with open(path, "rb") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: not valid JSON ({exc})") from None
    return EnsembleConfig.from_dict(doc, **overrides)

"""Shared ensemble for the acceptance suite, cached on disk.

The cache is keyed by the ensemble configuration and by a hash of the code
(not the docstrings or comments) of every module that produces numbers, so
it is rebuilt whenever the computation could change.  Build it ahead of a
test run with ``python tests/acceptance_data.py``.
"""

from __future__ import annotations

import ast
import hashlib
import json
import os
import sys
from pathlib import Path

import lon_lab
from lon_lab.experiments import EnsembleConfig, load_report, run_ensemble

ROOT = Path(__file__).resolve().parents[1]
CACHE = Path(os.environ.get("LON_LAB_ACCEPTANCE_DIR", ROOT / ".acceptance"))
NUMERIC_MODULES = ("landscape", "climbing", "basins", "network", "metrics",
                   "_kernels", "experiments")

GRID = {
    14: [2, 4, 6, 8, 10, 12, 13],
    16: [2, 4, 6, 8, 10, 12, 14, 15],
}


def config(out_dir: Path | None = None) -> EnsembleConfig:
    return EnsembleConfig(n_list=list(GRID), k_list=GRID, instances_per_cell=30,
                          base_seed=0, out_dir=str(out_dir) if out_dir else None)


def _code_hash() -> str:
    h = hashlib.sha256()
    pkg = Path(lon_lab.__file__).parent
    for name in NUMERIC_MODULES:
        tree = ast.parse((pkg / f"{name}.py").read_text())
        for node in ast.walk(tree):
            body = getattr(node, "body", None)
            if (isinstance(body, list) and body and isinstance(body[0], ast.Expr)
                    and isinstance(body[0].value, ast.Constant)
                    and isinstance(body[0].value.value, str)):
                node.body = body[1:] or [ast.Pass()]
        h.update(ast.dump(tree).encode())
    return h.hexdigest()


def cache_key() -> str:
    doc = json.dumps(config().to_dict(), sort_keys=True)
    return hashlib.sha256((doc + _code_hash()).encode()).hexdigest()[:16]


def ensemble(build: bool = True):
    """The cached acceptance ensemble, or ``None`` when absent and ``build`` is false."""
    out = CACHE / cache_key()
    if (out / "metadata.json").exists():
        return load_report(out)
    if not build:
        return None
    run_ensemble(config(out))
    return load_report(out)


if __name__ == "__main__":
    report = ensemble()
    print(f"{len(report.replicates)} replicates cached in {CACHE / cache_key()}", file=sys.stderr)

"""NK landscapes: generation, evaluation and the instance document format.

Genotypes are plain integers in ``[0, 2**n)``; bit ``i`` of the integer is
gene ``i``.  The fitness of a genotype is the mean of ``n`` component
contributions, each looked up in a table addressed by the gene's own value
(address bit 0) followed by the values of its linked genes in ascending
gene order (address bits 1..k).

Random numbers come from numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence(seed)``; the draw order is: the link sets of genes
0..n-1 (random model only), then one ``(n, 2**(k+1))`` block of uniform
``[0, 1)`` table values.  The stream is platform independent, so
``(n, k, model, seed)`` identifies an instance everywhere.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CapacityError, ParameterError, ParseError

FORMAT_VERSION = 1
MODELS = ("random", "adjacent")
DEFAULT_MAX_N = 24


def max_n() -> int:
    """Exhaustive-enumeration cap, overridable with ``LON_LAB_MAX_N``."""
    return int(os.environ.get("LON_LAB_MAX_N", DEFAULT_MAX_N))


def check_capacity(n: int, cap: int | None = None) -> None:
    cap = max_n() if cap is None else cap
    if n > cap:
        raise CapacityError(
            f"n={n} exceeds the exhaustive cap of {cap} (set LON_LAB_MAX_N to raise it)"
        )


def adjacent_links(n: int, k: int) -> list[list[int]]:
    """Links of the adjacent model: i+1, i-1, i+2, i-2, ... (mod n), first k kept."""
    links = []
    for i in range(n):
        chosen: list[int] = []
        step = 1
        while len(chosen) < k:
            for j in ((i + step) % n, (i - step) % n):
                if len(chosen) < k and j != i and j not in chosen:
                    chosen.append(j)
            step += 1
        links.append(sorted(chosen))
    return links


@dataclass(frozen=True, eq=False)
class NkInstance:
    """An immutable NK landscape.

    Attributes:
        n: number of genes.
        k: number of linked genes per gene.
        model: ``"random"`` or ``"adjacent"`` link layout.
        links: ``(n, k)`` int array; row ``i`` holds the sorted genes linked to gene ``i``.
        tables: ``(n, 2**(k+1))`` float array of component contributions in ``[0, 1)``.
        seed: generator seed the instance was drawn from.
        id: instance label.
    """

    n: int
    k: int
    model: str
    links: np.ndarray
    tables: np.ndarray
    seed: int
    id: str = field(default="")

    def __post_init__(self):
        links = np.array(self.links, dtype=np.int64).reshape(self.n, self.k)
        tables = np.array(self.tables, dtype=np.float64)
        links.setflags(write=False)
        tables.setflags(write=False)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "tables", tables)
        if not self.id:
            object.__setattr__(self, "id", default_id(self.n, self.k, self.model, self.seed))
        validate(self)

    def __eq__(self, other):
        if not isinstance(other, NkInstance):
            return NotImplemented
        return (
            (self.n, self.k, self.model, self.seed, self.id)
            == (other.n, other.k, other.model, other.seed, other.id)
            and np.array_equal(self.links, other.links)
            and np.array_equal(self.tables, other.tables)
        )

    __hash__ = None

    @property
    def size(self) -> int:
        return 1 << self.n

    @cached_property
    def fitness_values(self) -> np.ndarray:
        """Fitness of every genotype, indexed by the genotype integer."""
        check_capacity(self.n)
        return fitness_all(self)

    def __repr__(self):
        return f"NkInstance(id={self.id!r}, n={self.n}, k={self.k}, model={self.model!r})"


def default_id(n: int, k: int, model: str, seed: int) -> str:
    return f"nk-{model}-n{n}-k{k}-s{seed}"


def validate(inst: NkInstance) -> None:
    """Raise ``ParseError`` naming the first field that breaks an invariant."""
    n, k = inst.n, inst.k
    if n < 1:
        raise ParseError("n", f"must be >= 1, got {n}")
    if not 0 <= k <= n - 1:
        raise ParseError("k", f"must satisfy 0 <= k <= n-1, got k={k}, n={n}")
    if inst.model not in MODELS:
        raise ParseError("model", f"unknown model {inst.model!r}")
    for i, row in enumerate(inst.links):
        if len(set(row.tolist())) != k:
            raise ParseError(f"links[{i}]", "entries must be distinct")
        if i in row:
            raise ParseError(f"links[{i}]", "gene may not link to itself")
        if ((row < 0) | (row >= n)).any():
            raise ParseError(f"links[{i}]", "entries must lie in [0, n)")
        if (np.diff(row) <= 0).any():
            raise ParseError(f"links[{i}]", "entries must be sorted ascending")
    if inst.tables.shape != (n, 1 << (k + 1)):
        raise ParseError("tables", f"expected shape {(n, 1 << (k + 1))}, got {inst.tables.shape}")
    bad = ~((inst.tables >= 0.0) & (inst.tables < 1.0))
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise ParseError(f"tables[{i}][{j}]", f"value {inst.tables[i, j]!r} outside [0, 1)")


def generate_instance(n: int, k: int, model: str = "random", seed: int = 0,
                      id: str | None = None, cap: int | None = None) -> NkInstance:
    """Draw an NK instance; a deterministic function of ``(n, k, model, seed)``."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0 <= k <= n - 1:
        raise ParameterError(f"k must satisfy 0 <= k <= n-1, got k={k}, n={n}")
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    check_capacity(n, cap)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if model == "random":
        links = []
        for i in range(n):
            others = np.array([j for j in range(n) if j != i])
            links.append(np.sort(rng.choice(others, size=k, replace=False)))
    else:
        links = adjacent_links(n, k)
    tables = rng.random((n, 1 << (k + 1)))
    return NkInstance(n=n, k=k, model=model, links=np.array(links).reshape(n, k),
                      tables=tables, seed=int(seed), id=id or "")


def fitness_all(inst: NkInstance) -> np.ndarray:
    g = np.arange(inst.size, dtype=np.int64)
    total = np.zeros(inst.size)
    for i in range(inst.n):
        addr = (g >> i) & 1
        for m, j in enumerate(inst.links[i]):
            addr |= ((g >> int(j)) & 1) << (m + 1)
        total += inst.tables[i][addr]
    return total / inst.n


def fitness(inst: NkInstance, g: int) -> float:
    """Mean component contribution of genotype ``g``."""
    if not 0 <= g < inst.size:
        raise ParameterError(f"genotype {g} outside [0, 2**{inst.n})")
    total = 0.0
    for i in range(inst.n):
        addr = (g >> i) & 1
        for m, j in enumerate(inst.links[i]):
            addr |= ((g >> int(j)) & 1) << (m + 1)
        total += inst.tables[i, addr]
    return total / inst.n


def neighbors(g: int, n: int) -> list[int]:
    """Single-bit-flip neighbors of ``g`` in bit order 0..n-1."""
    return [g ^ (1 << b) for b in range(n)]


def neighbor_matrix(n: int) -> np.ndarray:
    """``(2**n, n)`` array whose row ``s`` lists ``neighbors(s, n)``."""
    s = np.arange(1 << n, dtype=np.int64)
    return s[:, None] ^ (np.int64(1) << np.arange(n, dtype=np.int64))[None, :]


# -- instance documents -------------------------------------------------------

def serialize_instance(inst: NkInstance) -> bytes:
    """Versioned JSON document; table values carry 17 significant digits."""
    head = {
        "format_version": FORMAT_VERSION,
        "id": inst.id,
        "n": inst.n,
        "k": inst.k,
        "model": inst.model,
        "seed": inst.seed,
    }
    lines = ["{"]
    for key, value in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value)},")
    lines.append('  "links": [')
    rows = [json.dumps(row.tolist()) for row in inst.links]
    lines.append(",\n".join(f"    {r}" for r in rows))
    lines.append("  ],")
    lines.append('  "tables": [')
    rows = ["[" + ", ".join(f"{v:.17g}" for v in row) + "]" for row in inst.tables]
    lines.append(",\n".join(f"    {r}" for r in rows))
    lines.append("  ]")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_instance(data: bytes | str) -> NkInstance:
    """Inverse of :func:`serialize_instance`; raises ``ParseError`` on bad input."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError("document", f"not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ParseError("document", "top level must be an object")
    for key in ("format_version", "id", "n", "k", "model", "seed", "links", "tables"):
        if key not in doc:
            raise ParseError(key, "missing")
    if doc["format_version"] != FORMAT_VERSION:
        raise ParseError("format_version",
                         f"unsupported version {doc['format_version']!r} (expected {FORMAT_VERSION})")
    for key in ("n", "k", "seed"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise ParseError(key, "must be an integer")
    n, k = doc["n"], doc["k"]
    if n < 1 or not 0 <= k <= n - 1:
        raise ParseError("k", f"must satisfy 0 <= k <= n-1, got k={k}, n={n}")
    links, tables = doc["links"], doc["tables"]
    if not isinstance(links, list) or len(links) != n:
        raise ParseError("links", f"expected {n} rows")
    for i, row in enumerate(links):
        if not isinstance(row, list) or len(row) != k or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in row):
            raise ParseError(f"links[{i}]", f"expected {k} integers")
    if not isinstance(tables, list) or len(tables) != n:
        raise ParseError("tables", f"expected {n} rows")
    for i, row in enumerate(tables):
        if not isinstance(row, list) or len(row) != 1 << (k + 1) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise ParseError(f"tables[{i}]", f"expected {1 << (k + 1)} numbers")
    return NkInstance(n=n, k=k, model=str(doc["model"]),
                      links=np.array(links, dtype=np.int64).reshape(n, k),
                      tables=np.array(tables, dtype=np.float64),
                      seed=doc["seed"], id=str(doc["id"]))

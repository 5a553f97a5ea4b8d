"""Seeded synthetic data with controlled NDV, distribution shape, sortedness,
and referential integrity.

Exact-coverage mode plants every domain value at least once before sampling
the remainder, so the realized distinct count equals the target exactly and
estimator claims can be checked against the data without slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .catalog import Catalog, ColumnStats, TableSchema
from .data import Dataset, INT64, STRING
from .errors import ConfigError, InfeasibleNDV

UNIFORM = "uniform"
ZIPF = "zipf"
SEQUENTIAL = "sequential"

EXACT_COVERAGE = "exact_coverage"
PURE_SAMPLING = "pure_sampling"

DEFAULT_SHUFFLE_WINDOW = 16


@dataclass(frozen=True)
class ColumnGen:
    distribution: str = UNIFORM
    zipf_s: float = 1.0
    ndv: int | None = None  # default: catalog stat
    sorted: bool | None = None  # default: catalog stat
    pseudo_sorted: bool = False
    shuffle_window: int = DEFAULT_SHUFFLE_WINDOW

    def __post_init__(self):
        if self.distribution not in (UNIFORM, ZIPF, SEQUENTIAL):
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        if self.zipf_s <= 0:
            raise ConfigError("zipf exponent must be positive")


@dataclass(frozen=True)
class TableGen:
    rows: int | None = None  # default: catalog row_count
    columns: dict[str, ColumnGen] = field(default_factory=dict)


@dataclass(frozen=True)
class GenSpec:
    seed: int = 0
    mode: str = EXACT_COVERAGE
    tables: dict[str, TableGen] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (EXACT_COVERAGE, PURE_SAMPLING):
            raise ConfigError(f"unknown generation mode {self.mode!r}")


def zipf_weights(ndv: int, s: float) -> np.ndarray:
    ranks = np.arange(1, ndv + 1, dtype=float)
    weights = ranks ** (-s)
    return weights / weights.sum()


def _column_domain(col_type: str, ndv: int, fk_domain: np.ndarray | None) -> np.ndarray:
    if fk_domain is not None:
        if ndv > len(fk_domain):
            raise InfeasibleNDV(
                f"foreign key needs {ndv} distinct values but the referenced key has "
                f"only {len(fk_domain)}"
            )
        return np.sort(fk_domain)[:ndv]
    if col_type == STRING:
        width = max(5, len(str(ndv)))
        return np.array([f"v{i:0{width}d}" for i in range(1, ndv + 1)])
    return np.arange(1, ndv + 1, dtype=np.int64)


def _generate_column(
    rng: np.random.Generator,
    rows: int,
    col_type: str,
    gen: ColumnGen,
    ndv: int,
    sorted_flag: bool,
    mode: str,
    fk_domain: np.ndarray | None,
) -> np.ndarray:
    if rows == 0:
        return np.empty(0, dtype=np.int64 if col_type == INT64 else object)
    if ndv > rows:
        raise InfeasibleNDV(f"target ndv {ndv} exceeds row count {rows}")
    if ndv < 1:
        raise ConfigError("target ndv must be at least 1 for a non-empty table")

    domain = _column_domain(col_type, ndv, fk_domain)
    if gen.distribution == SEQUENTIAL:
        # evenly repeated blocks; nondecreasing, exact coverage by construction
        values = domain[(np.arange(rows) * ndv) // rows]
    else:
        p = zipf_weights(ndv, gen.zipf_s) if gen.distribution == ZIPF else None
        if mode == EXACT_COVERAGE:
            sampled = rng.choice(domain, size=rows - ndv, p=p) if rows > ndv else domain[:0]
            values = rng.permutation(np.concatenate([domain, sampled]))
        else:
            values = rng.choice(domain, size=rows, p=p)

    if sorted_flag:
        values = np.sort(values)
        if gen.pseudo_sorted and gen.shuffle_window > 1:
            values = values.copy()
            w = gen.shuffle_window
            for start in range(0, rows, w):
                window = values[start : start + w]
                values[start : start + w] = rng.permutation(window)
    return values


def generate(
    genspec: GenSpec, catalog: Catalog
) -> tuple[dict[str, Dataset], dict[str, dict[str, ColumnStats]]]:
    """Produce one dataset per catalog table plus realized per-column stats.

    Deterministic under the seed. Declared foreign keys force the fact column
    to draw from the referenced key's actual values, so referential integrity
    holds on every output.
    """
    fk_targets = {str(fk.fact_column): fk.dim_pk for fk in catalog.foreign_keys}
    referenced_tables = {fk.dim_pk.table for fk in catalog.foreign_keys}
    order = [t for t in catalog.tables if t.name in referenced_tables]
    order += [t for t in catalog.tables if t.name not in referenced_tables]

    datasets: dict[str, Dataset] = {}
    realized: dict[str, dict[str, ColumnStats]] = {}
    for table in order:
        datasets[table.name], realized[table.name] = _generate_table(
            genspec, catalog, table, fk_targets, datasets
        )
    return datasets, realized


def _generate_table(
    genspec: GenSpec,
    catalog: Catalog,
    table: TableSchema,
    fk_targets: dict,
    done: dict[str, Dataset],
) -> tuple[Dataset, dict[str, ColumnStats]]:
    table_gen = genspec.tables.get(table.name, TableGen())
    rows = table_gen.rows if table_gen.rows is not None else table.row_count
    table_index = [t.name for t in catalog.tables].index(table.name)

    column_lists = []
    stats: dict[str, ColumnStats] = {}
    for col_index, col in enumerate(table.columns):
        gen = table_gen.columns.get(col.name, _default_gen(table, col.name))
        ndv = gen.ndv if gen.ndv is not None else col.stats.ndv_global
        sorted_flag = gen.sorted if gen.sorted is not None else col.stats.sorted
        fk_domain = None
        target = fk_targets.get(f"{table.name}.{col.name}")
        if target is not None:
            fk_domain = np.asarray(done[target.table].column_values(target.column))
        rng = np.random.default_rng([genspec.seed, table_index, col_index])
        values = _generate_column(
            rng, rows, col.type, gen, ndv, sorted_flag, genspec.mode, fk_domain
        )
        values_list = values.tolist()
        column_lists.append(values_list)
        stats[col.name] = _realized_stats(values_list, col.stats.width_bytes)

    if column_lists:
        dataset = Dataset.from_columns([c.name for c in table.columns], column_lists)
    else:
        dataset = Dataset(tuple(), [tuple()] * rows)
    return dataset, stats


def _default_gen(table: TableSchema, column: str) -> ColumnGen:
    if table.primary_key == column:
        return ColumnGen(distribution=SEQUENTIAL)
    return ColumnGen()


def _realized_stats(values: list, width: int) -> ColumnStats:
    if not values:
        return ColumnStats(ndv_global=0, sorted=False, width_bytes=width)
    distinct = len(set(values))
    nondecreasing = all(a <= b for a, b in zip(values, values[1:]))
    return ColumnStats(
        ndv_global=distinct,
        sorted=nondecreasing,
        width_bytes=width,
        min_value=min(values),
        max_value=max(values),
    )

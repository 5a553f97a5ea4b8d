"""The single-document JSON configuration.

One file carries everything a reproducible run needs: the catalog (tables,
stats, keys), the query, the cost/simulation parameters, and the data
generation recipe. See README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .catalog import Catalog, Column, ColumnRef, ColumnStats, ForeignKey, TableSchema
from .cost import CostParams, WidthModel
from .data import INT64, STRING
from .datagen import ColumnGen, GenSpec, TableGen
from .errors import ConfigError
from .plan import AggFunc, AggregateCall, JoinPredicate, QuerySpec

DEFAULT_COLUMN_WIDTHS = {INT64: 8, STRING: 16}


@dataclass
class RunConfig:
    catalog: Catalog
    query: QuerySpec
    params: CostParams
    genspec: GenSpec


def _take(section: dict, name: str, required: tuple[str, ...], optional: tuple[str, ...]) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{name} must be an object")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"{name} is missing {missing}")
    unknown = [k for k in section if k not in required + optional]
    if unknown:
        raise ConfigError(f"{name} has unknown keys {unknown}")


def _parse_column(raw: dict, table: str) -> Column:
    _take(raw, f"column of {table}", ("name", "type", "ndv"), ("sorted", "width_bytes", "min", "max"))
    col_type = raw["type"]
    if col_type not in (INT64, STRING):
        raise ConfigError(f"{table}.{raw['name']}: unsupported type {col_type!r}")
    stats = ColumnStats(
        ndv_global=int(raw["ndv"]),
        sorted=bool(raw.get("sorted", False)),
        width_bytes=int(raw.get("width_bytes", DEFAULT_COLUMN_WIDTHS[col_type])),
        min_value=raw.get("min"),
        max_value=raw.get("max"),
    )
    return Column(raw["name"], col_type, stats)


def _parse_catalog(raw: dict) -> Catalog:
    _take(raw, "catalog", ("tables",), ("foreign_keys",))
    tables = []
    for t in raw["tables"]:
        _take(t, "table", ("name", "row_count", "columns"), ("primary_key",))
        tables.append(
            TableSchema(
                name=t["name"],
                columns=tuple(_parse_column(c, t["name"]) for c in t["columns"]),
                row_count=int(t["row_count"]),
                primary_key=t.get("primary_key"),
            )
        )
    fks = []
    for fk in raw.get("foreign_keys", []):
        _take(fk, "foreign key", ("fact_column", "dim_pk"), ())
        fks.append(
            ForeignKey(ColumnRef.parse(fk["fact_column"]), ColumnRef.parse(fk["dim_pk"]))
        )
    return Catalog(tuple(tables), tuple(fks))


def _parse_query(raw: dict, catalog: Catalog) -> QuerySpec:
    _take(raw, "query", ("fact", "dim", "join", "aggregates"), ("group_by",))
    join_raw = raw["join"]
    _take(join_raw, "query.join", ("fact_column", "dim_column"), ())
    calls = []
    for agg in raw["aggregates"]:
        _take(agg, "aggregate", ("function",), ("input", "as"))
        try:
            func = AggFunc(agg["function"].upper())
        except ValueError:
            raise ConfigError(f"unknown aggregate function {agg['function']!r}") from None
        input_ref = ColumnRef.parse(agg["input"]) if "input" in agg else None
        default_name = (
            f"{func.value.lower()}_{input_ref.column}" if input_ref else "count_star"
        )
        calls.append(AggregateCall(func, input_ref, agg.get("as", default_name)))
    spec = QuerySpec(
        fact=raw["fact"],
        dim=raw["dim"],
        join=JoinPredicate(
            ColumnRef.parse(join_raw["fact_column"]), ColumnRef.parse(join_raw["dim_column"])
        ),
        grouping=tuple(ColumnRef.parse(g) for g in raw.get("group_by", [])),
        aggregates=tuple(calls),
    )
    spec.validate(catalog)
    return spec


_OVERRIDE_KEYS = ("partial_row", "final_row", "joined_row_raw", "joined_row_aggregated")


def _parse_params(raw: dict, catalog: Catalog) -> CostParams:
    _take(
        raw,
        "cost",
        (),
        (
            "nodes",
            "batch_size",
            "theta",
            "flush",
            "broadcast_threshold_bytes",
            "placement",
            "width_overrides",
        ),
    )
    overrides: dict[str, int] = {}
    raw_overrides = raw.get("width_overrides", {})
    _take(raw_overrides, "width_overrides", (), ("scan_row",) + _OVERRIDE_KEYS)
    for table, width in raw_overrides.get("scan_row", {}).items():
        overrides[f"scan:{table}"] = int(width)
    rename = {
        "partial_row": "partial",
        "final_row": "final",
        "joined_row_raw": "joined_raw",
        "joined_row_aggregated": "joined_agg",
    }
    for key in _OVERRIDE_KEYS:
        if key in raw_overrides:
            overrides[rename[key]] = int(raw_overrides[key])
    return CostParams(
        node_count=int(raw.get("nodes", 4)),
        batch_size=int(raw.get("batch_size", 1024)),
        theta=float(raw.get("theta", 0.5)),
        flush=raw.get("flush", "partition"),
        broadcast_threshold_bytes=int(raw.get("broadcast_threshold_bytes", 10_000_000)),
        widths=WidthModel.from_catalog(catalog, overrides),
        placement=raw.get("placement", "round_robin"),
    )


def _parse_genspec(raw: dict) -> GenSpec:
    _take(raw, "generate", (), ("seed", "mode", "tables"))
    tables: dict[str, TableGen] = {}
    for name, tg in raw.get("tables", {}).items():
        _take(tg, f"generate.tables.{name}", (), ("rows", "columns"))
        columns: dict[str, ColumnGen] = {}
        for col, cg in tg.get("columns", {}).items():
            _take(
                cg,
                f"generate column {name}.{col}",
                (),
                ("distribution", "zipf_s", "ndv", "sorted", "pseudo_sorted", "shuffle_window"),
            )
            columns[col] = ColumnGen(
                distribution=cg.get("distribution", "uniform"),
                zipf_s=float(cg.get("zipf_s", 1.0)),
                ndv=cg.get("ndv"),
                sorted=cg.get("sorted"),
                pseudo_sorted=bool(cg.get("pseudo_sorted", False)),
                shuffle_window=int(cg.get("shuffle_window", 16)),
            )
        rows = tg.get("rows")
        tables[name] = TableGen(rows=int(rows) if rows is not None else None, columns=columns)
    return GenSpec(seed=int(raw.get("seed", 0)), mode=raw.get("mode", "exact_coverage"), tables=tables)


def parse_config(doc: dict) -> RunConfig:
    _take(doc, "config", ("catalog", "query"), ("cost", "generate"))
    catalog = _parse_catalog(doc["catalog"])
    query = _parse_query(doc["query"], catalog)
    params = _parse_params(doc.get("cost", {}), catalog)
    genspec = _parse_genspec(doc.get("generate", {}))
    return RunConfig(catalog, query, params, genspec)


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)

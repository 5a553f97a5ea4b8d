"""Table schemas, key constraints, and column statistics.

The catalog is immutable after load and drives both key analysis and cost
estimation; the executor never consults it for anything but schemas and
configured byte widths.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .data import Dataset, INT64, STRING
from .errors import ConfigError, UnknownColumn, UnknownTable

DEFAULT_WIDTHS = {INT64: 8, STRING: 16}


@dataclass(frozen=True)
class ColumnRef:
    table: str
    column: str

    def __post_init__(self):
        if not self.table or not self.column:
            raise ConfigError("column reference needs both a table and a column name")

    def __str__(self) -> str:
        return f"{self.table}.{self.column}"

    @classmethod
    def parse(cls, text: str) -> "ColumnRef":
        parts = text.split(".")
        if len(parts) != 2:
            raise ConfigError(f"expected 'table.column', got {text!r}")
        return cls(parts[0], parts[1])


@dataclass(frozen=True)
class ColumnStats:
    ndv_global: int
    sorted: bool = False
    width_bytes: int = 8
    min_value: object = None
    max_value: object = None

    def __post_init__(self):
        if self.ndv_global < 0:
            raise ConfigError("ndv_global must be non-negative")
        if self.width_bytes <= 0:
            raise ConfigError("width_bytes must be positive")


@dataclass(frozen=True)
class Column:
    name: str
    type: str
    stats: ColumnStats

    def __post_init__(self):
        if self.type not in (INT64, STRING):
            raise ConfigError(f"unsupported column type {self.type!r}")


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]
    row_count: int
    primary_key: str | None = None

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise ConfigError(f"duplicate column names in table {self.name!r}")
        if self.row_count < 0:
            raise ConfigError("row_count must be non-negative")
        for col in self.columns:
            if col.stats.ndv_global > self.row_count:
                raise ConfigError(
                    f"{self.name}.{col.name}: ndv {col.stats.ndv_global} exceeds "
                    f"row count {self.row_count}"
                )
        if self.primary_key is not None:
            pk = self.column(self.primary_key)
            if pk.stats.ndv_global != self.row_count:
                raise ConfigError(
                    f"primary key {self.name}.{self.primary_key} must have "
                    f"ndv equal to the row count"
                )

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise UnknownColumn(f"table {self.name!r} has no column {name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)


@dataclass(frozen=True)
class ForeignKey:
    fact_column: ColumnRef
    dim_pk: ColumnRef


@dataclass(frozen=True)
class Catalog:
    tables: tuple[TableSchema, ...]
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        names = [t.name for t in self.tables]
        if len(names) != len(set(names)):
            raise ConfigError("duplicate table names in catalog")
        for fk in self.foreign_keys:
            fact_table, _ = resolve_column(self, fk.fact_column)
            dim_table, _ = resolve_column(self, fk.dim_pk)
            if dim_table.primary_key != fk.dim_pk.column:
                raise ConfigError(
                    f"foreign key target {fk.dim_pk} is not the declared "
                    f"primary key of {dim_table.name!r}"
                )
            del fact_table

    def table(self, name: str) -> TableSchema:
        for t in self.tables:
            if t.name == name:
                return t
        raise UnknownTable(f"catalog has no table {name!r}")

    def fk_between(self, fact_column: ColumnRef, dim_column: ColumnRef) -> ForeignKey | None:
        for fk in self.foreign_keys:
            if fk.fact_column == fact_column and fk.dim_pk == dim_column:
                return fk
        return None

    def with_table(self, table: TableSchema) -> "Catalog":
        tables = tuple(table if t.name == table.name else t for t in self.tables)
        return replace(self, tables=tables)


def resolve_column(catalog: Catalog, ref: ColumnRef) -> tuple[TableSchema, ColumnStats]:
    """Look up the schema and stats behind a column reference."""
    table = catalog.table(ref.table)
    return table, table.column(ref.column).stats


def validate_fk(catalog: Catalog, fk: ForeignKey, fact_rows: Dataset, dim_rows: Dataset) -> bool:
    """True iff every fact-side value exists in the dimension key column and
    that column holds no duplicates."""
    resolve_column(catalog, fk.fact_column)
    resolve_column(catalog, fk.dim_pk)
    dim_values = dim_rows.column_values(fk.dim_pk.column)
    if len(set(dim_values)) != len(dim_values):
        return False
    domain = set(dim_values)
    return all(v in domain for v in fact_rows.column_values(fk.fact_column.column))


def apply_realized_stats(catalog: Catalog, realized: dict[str, dict[str, ColumnStats]]) -> Catalog:
    """Return a catalog whose stats are replaced by measured values."""
    out = catalog
    for table_name, per_column in realized.items():
        table = out.table(table_name)
        columns = tuple(
            replace(col, stats=per_column.get(col.name, col.stats)) for col in table.columns
        )
        out = out.with_table(replace(table, columns=columns))
    return out

"""Row-set containers and the delimited dataset file format."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import UnknownColumn

INT64 = "int64"
STRING = "string"


@dataclass
class Dataset:
    """An in-memory table: column names plus a list of row tuples."""

    columns: tuple[str, ...]
    rows: list[tuple]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownColumn(f"dataset has no column {name!r}") from None

    def column_values(self, name: str) -> list:
        i = self.column_index(name)
        return [row[i] for row in self.rows]

    @classmethod
    def from_columns(cls, names: list[str], column_lists: list[list]) -> "Dataset":
        return cls(tuple(names), list(zip(*column_lists)) if column_lists else [])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ResultTable:
    """Final query output: grouping key columns followed by aggregate outputs,
    rows sorted by the key columns."""

    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    key_count: int = 0

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.columns).encode())
        for row in self.rows:
            h.update(repr(tuple(_canon(v) for v in row)).encode())
        return h.hexdigest()

    def same_rows(self, other: "ResultTable") -> bool:
        if len(self.rows) != len(other.rows):
            return False
        return all(a == b for a, b in zip(self.rows, other.rows))


def _canon(value):
    if isinstance(value, Fraction):
        return ("frac", value.numerator, value.denominator)
    return value


def sort_rows(rows: list[tuple], key_count: int) -> list[tuple]:
    if key_count:
        return sorted(rows, key=lambda r: r[:key_count])
    return sorted(rows)


def dump_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write header + delimited rows; integers bare, strings quoted."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(list(dataset.columns))
        writer.writerows(dataset.rows)


def load_dataset(path: str | Path, column_types: dict[str, str]) -> Dataset:
    """Read a dumped dataset, converting cells per the declared column types."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        converters = [
            (lambda v: int(v)) if column_types.get(name, INT64) == INT64 else (lambda v: v)
            for name in header
        ]
        rows = [tuple(conv(cell) for conv, cell in zip(converters, row)) for row in reader]
    return Dataset(tuple(header), rows)

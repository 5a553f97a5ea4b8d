"""Deterministic in-process simulator of an N-node engine.

Partitions are plain row lists, one per simulated node. All routing uses a
fixed FNV-1a hash over canonical key bytes, accumulation emits keys in
first-seen order, and stages run node by node in index order, so two runs
over the same data are byte-identical regardless of host hash randomization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .catalog import Catalog
from .cost import CostParams
from .data import Dataset, ResultTable, sort_rows
from .errors import ConfigError, MalformedPlan, NotCoLocated, TypeMismatch
from .plan import (
    AggFunc,
    NodeKind,
    PhysAgg,
    PhysicalNode,
    SHUFFLE_METHOD,
    assign_ids,
    validate_plan,
)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

ROUND_ROBIN = "round_robin"
HASH = "hash"
RANGE_SORTED = "range_sorted"


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def canonical_key_bytes(values: tuple) -> bytes:
    parts = []
    for v in values:
        if isinstance(v, bool):
            raise TypeMismatch("boolean keys are not supported")
        if isinstance(v, int):
            parts.append(b"i" + v.to_bytes(8, "little", signed=True))
        elif isinstance(v, str):
            parts.append(b"s" + v.encode("utf-8") + b"\x00")
        else:
            raise TypeMismatch(f"cannot route value of type {type(v).__name__}")
    return b"".join(parts)


def route(values: tuple, node_count: int) -> int:
    return fnv1a64(canonical_key_bytes(values)) % node_count


@dataclass
class Partition:
    """Rows held by one simulated node; batches are consecutive slices."""

    node_id: int
    rows: list[tuple]

    def batches(self, batch_size: int) -> list[list[tuple]]:
        if batch_size <= 0:
            raise ConfigError("batch size must be positive")
        return [self.rows[i : i + batch_size] for i in range(0, len(self.rows), batch_size)]


def partition_table(
    rows: list[tuple],
    node_count: int,
    scheme: str = ROUND_ROBIN,
    key_indices: tuple[int, ...] | None = None,
) -> list[Partition]:
    """Place rows on nodes. Hash routing uses FNV-1a over the key columns;
    range placement keeps global order across consecutive partitions."""
    if node_count < 1:
        raise ConfigError("node count must be at least 1")
    buckets: list[list[tuple]] = [[] for _ in range(node_count)]
    if scheme == ROUND_ROBIN:
        for i, row in enumerate(rows):
            buckets[i % node_count].append(row)
    elif scheme == HASH:
        if not key_indices:
            raise ConfigError("hash placement needs key columns")
        for row in rows:
            buckets[route(tuple(row[i] for i in key_indices), node_count)].append(row)
    elif scheme == RANGE_SORTED:
        base, extra = divmod(len(rows), node_count)
        start = 0
        for node in range(node_count):
            size = base + (1 if node < extra else 0)
            buckets[node] = list(rows[start : start + size])
            start += size
    else:
        raise ConfigError(f"unknown placement scheme {scheme!r}")
    return [Partition(i, bucket) for i, bucket in enumerate(buckets)]


class Accumulator:
    """Running state for one distributive aggregate.

    ``observe`` consumes raw input values; ``absorb`` merges an
    already-partial state (COUNT partials add, extrema take extrema).
    """

    __slots__ = ("kind", "value")

    def __init__(self, kind: AggFunc, value: int | None = None):
        self.kind = kind
        self.value = value

    def observe(self, value) -> None:
        if self.kind is AggFunc.COUNT:
            self.value = (self.value or 0) + 1
            return
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeMismatch(f"{self.kind.value} expects int64 input, got {value!r}")
        if self.value is None:
            self.value = value
        elif self.kind is AggFunc.SUM:
            self.value += value
        elif self.kind is AggFunc.MIN:
            if value < self.value:
                self.value = value
        elif self.kind is AggFunc.MAX:
            if value > self.value:
                self.value = value

    def absorb(self, partial) -> None:
        if isinstance(partial, bool) or not isinstance(partial, int):
            raise TypeMismatch(f"{self.kind.value} partial must be int64, got {partial!r}")
        if self.value is None:
            self.value = partial
        elif self.kind in (AggFunc.SUM, AggFunc.COUNT):
            self.value += partial
        elif self.kind is AggFunc.MIN:
            if partial < self.value:
                self.value = partial
        elif self.kind is AggFunc.MAX:
            if partial > self.value:
                self.value = partial

    @staticmethod
    def merge(a: "Accumulator", b: "Accumulator") -> "Accumulator":
        if a.kind is not b.kind:
            raise TypeMismatch("cannot merge accumulators of different kinds")
        out = Accumulator(a.kind, a.value)
        if b.value is not None:
            out.absorb(b.value)
        return out

    def __repr__(self) -> str:
        return f"Accumulator({self.kind.value}, {self.value})"


@dataclass(frozen=True)
class ShuffleEvent:
    label: str
    rows: int
    bytes: int


@dataclass(frozen=True)
class BroadcastEvent:
    label: str
    rows: int
    bytes: int


@dataclass
class ExecutionMetrics:
    operator_rows: dict[str, int] = field(default_factory=dict)
    operators: list[tuple[str, str, int]] = field(default_factory=list)  # (nid, kind, rows)
    shuffle_events: list[ShuffleEvent] = field(default_factory=list)
    broadcast_events: list[BroadcastEvent] = field(default_factory=list)

    @property
    def total_shuffles(self) -> int:
        return len(self.shuffle_events)

    @property
    def shuffled_rows(self) -> int:
        return sum(e.rows for e in self.shuffle_events)

    @property
    def shuffled_bytes(self) -> int:
        return sum(e.bytes for e in self.shuffle_events)

    def rows_for(self, node: PhysicalNode) -> int:
        return self.operator_rows[node.nid]


# -- stage operators ---------------------------------------------------------

_BoundAggs = list[tuple[PhysAgg, int | None]]


def op_compute(
    parts: list[list[tuple]],
    key_indices: tuple[int, ...],
    aggs: _BoundAggs,
    batch_size: int,
    flush: str = "partition",
) -> list[list[tuple]]:
    """Local hash aggregation per flush unit, emitting (key, accumulators)
    rows in first-seen key order."""
    out_parts: list[list[tuple]] = []
    for rows in parts:
        out: list[tuple] = []
        if flush == "batch":
            chunks = [rows[i : i + batch_size] for i in range(0, len(rows), batch_size)]
        else:
            chunks = [rows] if rows else []
        for chunk in chunks:
            table: dict[tuple, list[Accumulator]] = {}
            for row in chunk:
                key = tuple(row[i] for i in key_indices)
                accs = table.get(key)
                if accs is None:
                    accs = [Accumulator(agg.function) for agg, _ in aggs]
                    table[key] = accs
                for acc, (agg, idx) in zip(accs, aggs):
                    value = row[idx] if idx is not None else None
                    if agg.combine:
                        acc.absorb(value)
                    else:
                        acc.observe(value)
            for key, accs in table.items():
                out.append(key + tuple(acc.value for acc in accs))
        out_parts.append(out)
    return out_parts


def op_distribute(
    parts: list[list[tuple]], key_indices: tuple[int, ...], node_count: int
) -> list[list[tuple]]:
    """Route every row to the node owning its key hash; all rows with equal
    keys land together. Equal keys are never pre-merged here."""
    buckets: list[list[tuple]] = [[] for _ in range(node_count)]
    for rows in parts:
        for row in rows:
            buckets[route(tuple(row[i] for i in key_indices), node_count)].append(row)
    return buckets


def op_merge(
    parts: list[list[tuple]], key_indices: tuple[int, ...], aggs: _BoundAggs
) -> list[list[tuple]]:
    """Combine co-located partial rows into one row per key."""
    out_parts: list[list[tuple]] = []
    seen_global: set[tuple] = set()
    for rows in parts:
        table: dict[tuple, list[Accumulator]] = {}
        for row in rows:
            key = tuple(row[i] for i in key_indices)
            accs = table.get(key)
            if accs is None:
                accs = [Accumulator(agg.function) for agg, _ in aggs]
                table[key] = accs
            for acc, (_, idx) in zip(accs, aggs):
                acc.absorb(row[idx])
        out = []
        for key, accs in table.items():
            if key in seen_global:
                raise NotCoLocated(f"key {key!r} appeared on more than one node")
            seen_global.add(key)
            out.append(key + tuple(acc.value for acc in accs))
        out_parts.append(out)
    return out_parts


def op_join(
    left_parts: list[list[tuple]],
    right_parts: list[list[tuple]],
    left_key_index: int,
    right_key_index: int,
    build_side: str = "right",
) -> list[list[tuple]]:
    """Per-node inner equijoin; output rows are left columns then right
    columns, emitted in probe order with build matches in input order."""
    out: list[list[tuple]] = []
    for lrows, rrows in zip(left_parts, right_parts):
        part: list[tuple] = []
        if build_side == "right":
            index: dict = {}
            for r in rrows:
                index.setdefault(r[right_key_index], []).append(r)
            for l in lrows:
                for r in index.get(l[left_key_index], ()):
                    part.append(l + r)
        else:
            index = {}
            for l in lrows:
                index.setdefault(l[left_key_index], []).append(l)
            for r in rrows:
                for l in index.get(r[right_key_index], ()):
                    part.append(l + r)
        out.append(part)
    return out


# -- plan evaluation ----------------------------------------------------------


@dataclass
class _Relation:
    names: tuple[str, ...]
    parts: list[list[tuple]]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def total_rows(self) -> int:
        return sum(len(p) for p in self.parts)


class _Executor:
    def __init__(self, catalog: Catalog, datasets: dict[str, Dataset], params: CostParams):
        self.catalog = catalog
        self.datasets = datasets
        self.params = params
        self.n = params.node_count
        self.metrics = ExecutionMetrics()

    def run(self, root: PhysicalNode) -> tuple[ResultTable, ExecutionMetrics]:
        validate_plan(root)
        if not root.nid:
            assign_ids(root)
        rel = self._eval(root)
        rows = [row for part in rel.parts for row in part]
        key_count = root.key_count if root.kind is NodeKind.PROJECT else 0
        table = ResultTable(
            columns=rel.names, rows=tuple(sort_rows(rows, key_count)), key_count=key_count
        )
        return table, self.metrics

    def _record(self, node: PhysicalNode, rows: int) -> None:
        self.metrics.operator_rows[node.nid] = rows
        self.metrics.operators.append((node.nid, node.kind.value, rows))

    def _width(self, node: PhysicalNode) -> int:
        return self.params.widths.node_width(node)

    def _bind_aggs(self, node: PhysicalNode, names: tuple[str, ...]) -> _BoundAggs:
        bound: _BoundAggs = []
        for agg in node.aggregates:
            idx = names.index(agg.input_column) if agg.input_column is not None else None
            bound.append((agg, idx))
        return bound

    def _eval(self, node: PhysicalNode) -> _Relation:
        kind = node.kind
        if kind is NodeKind.SCAN:
            rel = self._eval_scan(node)
        elif kind is NodeKind.COMPUTE:
            rel = self._eval_compute(node)
        elif kind is NodeKind.DISTRIBUTE:
            rel = self._eval_distribute(node)
        elif kind is NodeKind.MERGE:
            rel = self._eval_merge(node)
        elif kind is NodeKind.JOIN:
            rel = self._eval_join(node)
        elif kind is NodeKind.PROJECT:
            rel = self._eval_project(node)
        else:
            raise MalformedPlan(f"{kind.value} cannot be evaluated outside a join")
        self._record(node, rel.total_rows())
        return rel

    def _eval_scan(self, node: PhysicalNode) -> _Relation:
        dataset = self.datasets.get(node.table)
        if dataset is None:
            raise ConfigError(f"no dataset loaded for table {node.table!r}")
        expected = self.catalog.table(node.table).column_names()
        if dataset.columns != expected:
            raise ConfigError(
                f"dataset columns {dataset.columns} do not match schema {expected}"
            )
        placed = partition_table(dataset.rows, self.n, self.params.placement)
        return _Relation(node.schema, [p.rows for p in placed])

    def _eval_compute(self, node: PhysicalNode) -> _Relation:
        child = self._eval(node.children[0])
        key_idx = tuple(child.index(k) for k in node.keys)
        parts = op_compute(
            child.parts,
            key_idx,
            self._bind_aggs(node, child.names),
            self.params.batch_size,
            self.params.flush,
        )
        return _Relation(node.schema, parts)

    def _eval_distribute(self, node: PhysicalNode) -> _Relation:
        child = self._eval(node.children[0])
        key_idx = tuple(child.index(k) for k in node.keys)
        rows = child.total_rows()
        self.metrics.shuffle_events.append(
            ShuffleEvent(_key_label(node), rows, rows * self._width(node))
        )
        return _Relation(node.schema, op_distribute(child.parts, key_idx, self.n))

    def _eval_merge(self, node: PhysicalNode) -> _Relation:
        child = self._eval(node.children[0])
        key_idx = tuple(child.index(k) for k in node.keys)
        parts = op_merge(child.parts, key_idx, self._bind_aggs(node, child.names))
        return _Relation(node.schema, parts)

    def _eval_join(self, node: PhysicalNode) -> _Relation:
        rels: list[_Relation] = []
        moved_rows = 0
        moved_bytes = 0
        for child in node.children:
            if child.kind is NodeKind.EXCHANGE:
                rel = self._eval(child.children[0])
                key_idx = tuple(rel.index(k) for k in child.keys)
                rows = rel.total_rows()
                moved_rows += rows
                moved_bytes += rows * self._width(child)
                self._record(child, rows)
                rel = _Relation(rel.names, op_distribute(rel.parts, key_idx, self.n))
            elif child.kind is NodeKind.BROADCAST:
                rel = self._eval(child.children[0])
                full = [row for part in rel.parts for row in part]
                replicated = len(full) * self.n
                self._record(child, replicated)
                self.metrics.broadcast_events.append(
                    BroadcastEvent(child.nid, replicated, replicated * self._width(child))
                )
                rel = _Relation(rel.names, [full] * self.n)
            else:
                rel = self._eval(child)
            rels.append(rel)
        if node.method == SHUFFLE_METHOD:
            self.metrics.shuffle_events.append(
                ShuffleEvent(f"join co-partition on {_base(node.left_key)}", moved_rows, moved_bytes)
            )
        left, right = rels
        parts = op_join(
            left.parts,
            right.parts,
            left.index(node.left_key),
            right.index(node.right_key),
            "left" if node.build_side == 0 else "right",
        )
        return _Relation(node.schema, parts)

    def _eval_project(self, node: PhysicalNode) -> _Relation:
        child = self._eval(node.children[0])
        getters = []
        for out in node.outputs:
            if out.ratio is not None:
                si, ci = child.index(out.ratio[0]), child.index(out.ratio[1])
                getters.append(lambda row, si=si, ci=ci: Fraction(row[si], row[ci]))
            else:
                idx = child.index(out.source)
                getters.append(lambda row, idx=idx: row[idx])
        parts = [[tuple(g(row) for g in getters) for row in part] for part in child.parts]
        return _Relation(node.schema, parts)


def _base(name: str) -> str:
    return name.split(".")[-1]


def _key_label(node: PhysicalNode) -> str:
    return f"distribute({', '.join(_base(k) for k in node.keys)})"


def execute(
    root: PhysicalNode,
    catalog: Catalog,
    datasets: dict[str, Dataset],
    params: CostParams,
) -> tuple[ResultTable, ExecutionMetrics]:
    """Evaluate a physical plan bottom-up over partitioned datasets.

    Results come back sorted by grouping key for canonical comparison; the
    metrics carry per-operator output rows plus every shuffle and broadcast.
    """
    return _Executor(catalog, datasets, params).run(root)

"""NDV-driven cost model: reduction ratio, push threshold, per-batch distinct
counts, composite-key NDV, and bottom-up plan estimation.

Estimation works entirely from declared catalog statistics; it never looks at
generated data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import Catalog, ColumnRef, ColumnStats, resolve_column
from .errors import ConfigError, MalformedPlan, ZeroInput
from .keys import KeyAnalysis
from .plan import (
    CostAnnotation,
    CostEstimate,
    NodeKind,
    PhysicalNode,
    SHUFFLE_METHOD,
    validate_plan,
)

PER_PARTITION = "partition"
PER_BATCH = "batch"

ACCUMULATOR_WIDTH = 8  # one running int64 state per SUM/COUNT/MIN/MAX
AVG_OUTPUT_WIDTH = 16  # a rewritten AVG carries a (sum, count) pair


def batch_ndv(ndv_global: int | float, batch_size: int, sorted: bool = False) -> float:
    """Expected distinct keys in a batch of ``batch_size`` rows drawn from a
    population of ``ndv_global`` values.

    Unsorted data follows the coupon-collector expectation
    ndv * (1 - e^(-B/ndv)). Sorted or pseudo-sorted data degenerates: each
    batch sees a localized value range, so the model returns B outright and
    predicts no volume reduction.
    """
    if ndv_global < 0 or batch_size < 0:
        raise ConfigError("batch_ndv arguments must be non-negative")
    if batch_size == 0:
        return 0.0
    if sorted:
        return float(batch_size)
    if ndv_global == 0:
        return 0.0
    return -float(ndv_global) * math.expm1(-batch_size / float(ndv_global))


def reduction_ratio(ndv_keys: int | float, input_rows: int) -> float:
    """Expected output/input ratio of a local aggregation: distinct grouping
    keys over input rows, clamped to [0, 1]."""
    if input_rows <= 0:
        raise ZeroInput("reduction ratio needs a positive input row count")
    return min(1.0, max(0.0, ndv_keys / input_rows))


def should_push_compute(ndv_keys: int | float, input_rows: int, theta: float) -> bool:
    """Push a local aggregation below the join iff ndv < rows * theta
    (strict), theta absorbing hash-table overhead."""
    if input_rows <= 0:
        raise ZeroInput("push decision needs a positive input row count")
    return ndv_keys < input_rows * theta


def composite_ndv(columns: list[ColumnStats], row_count: int) -> int:
    """Distinct count of a multi-column key: independence product capped by
    the row count. A single column returns its own NDV."""
    if not columns:
        raise ConfigError("composite_ndv needs at least one column")
    product = 1
    for stats in columns:
        product *= stats.ndv_global
    return min(product, row_count)


@dataclass
class BatchModel:
    """Per-batch distinct-count expectation for one column."""

    ndv_global: int
    batch_size: int
    sorted: bool = False

    @property
    def ndv_batch(self) -> float:
        return batch_ndv(self.ndv_global, self.batch_size, self.sorted)


def observed_batch_ndv(values: list, batch_size: int) -> list[int]:
    """Exact distinct counts over consecutive batches of a column."""
    if batch_size <= 0:
        raise ConfigError("batch size must be positive")
    return [
        len(set(values[i : i + batch_size])) for i in range(0, len(values), batch_size)
    ]


@dataclass
class WidthModel:
    """Per-row byte widths at each plan position.

    By default a row's width is the sum of its column widths (partial
    accumulator columns count ACCUMULATOR_WIDTH each). Shape-level overrides
    let a fixture pin the width of scan rows, partial rows, final rows, and
    the two joined-row shapes directly.
    """

    column_widths: dict[str, int] = field(default_factory=dict)
    overrides: dict[str, int] = field(default_factory=dict)

    def column_width(self, name: str) -> int:
        if name in self.column_widths:
            return self.column_widths[name]
        return ACCUMULATOR_WIDTH

    def node_width(self, node: PhysicalNode) -> int:
        shape = node.width_shape
        if not shape and node.children:
            return self.node_width(node.children[0])
        if shape in self.overrides:
            return self.overrides[shape]
        if shape.startswith("scan:") and "scan:*" in self.overrides:
            return self.overrides["scan:*"]
        if node.kind is NodeKind.PROJECT:
            total = 0
            for out in node.outputs:
                if out.ratio is not None:
                    total += AVG_OUTPUT_WIDTH
                elif out.source in self.column_widths:
                    total += self.column_widths[out.source]
                else:
                    total += ACCUMULATOR_WIDTH
            return max(total, 1)
        return max(sum(self.column_width(name) for name in node.schema), 1)

    @classmethod
    def from_catalog(cls, catalog: Catalog, overrides: dict[str, int] | None = None) -> "WidthModel":
        widths = {
            f"{table.name}.{col.name}": col.stats.width_bytes
            for table in catalog.tables
            for col in table.columns
        }
        return cls(widths, dict(overrides or {}))


@dataclass
class CostParams:
    """Simulation and estimation knobs shared by the planner and executor."""

    node_count: int = 4
    batch_size: int = 1024
    theta: float = 0.5
    flush: str = PER_PARTITION
    broadcast_threshold_bytes: int = 10_000_000
    widths: WidthModel = field(default_factory=WidthModel)
    placement: str = "round_robin"

    def __post_init__(self):
        if not (0 < self.theta <= 1):
            raise ConfigError("theta must lie in (0, 1]")
        if self.batch_size < 1:
            raise ConfigError("batch size must be at least 1")
        if self.node_count < 1:
            raise ConfigError("node count must be at least 1")
        if self.flush not in (PER_PARTITION, PER_BATCH):
            raise ConfigError(f"unknown flush mode {self.flush!r}")


class _Estimator:
    def __init__(self, catalog: Catalog, params: CostParams, analysis: KeyAnalysis | None):
        self.catalog = catalog
        self.params = params
        self.analysis = analysis
        self.shuffled_rows = 0
        self.shuffled_bytes = 0
        self.shuffle_count = 0
        self.broadcast_rows = 0
        self.broadcast_bytes = 0
        self.total_bytes = 0

    def annotate(self, node: PhysicalNode) -> CostAnnotation:
        for child in node.children:
            self.annotate(child)
        rows = self._rows(node)
        ann = CostAnnotation(rows=rows, width=self.params.widths.node_width(node))
        node.cost = ann
        self.total_bytes += ann.bytes
        self._record_movement(node, ann)
        return ann

    def _record_movement(self, node: PhysicalNode, ann: CostAnnotation) -> None:
        if node.kind is NodeKind.DISTRIBUTE:
            self.shuffle_count += 1
            self.shuffled_rows += ann.rows
            self.shuffled_bytes += ann.bytes
        elif node.kind is NodeKind.BROADCAST:
            self.broadcast_rows += ann.rows
            self.broadcast_bytes += ann.bytes
        elif node.kind is NodeKind.JOIN and node.method == SHUFFLE_METHOD:
            self.shuffle_count += 1
            for child in node.children:
                if child.kind is NodeKind.EXCHANGE:
                    self.shuffled_rows += child.cost.rows
                    self.shuffled_bytes += child.cost.bytes

    def _key_stats(self, node: PhysicalNode) -> list[ColumnStats]:
        stats = []
        for name in node.keys:
            if "." in name:
                try:
                    _, col_stats = resolve_column(self.catalog, ColumnRef.parse(name))
                    stats.append(col_stats)
                    continue
                except Exception:
                    pass
            stats.append(ColumnStats(ndv_global=10**18))  # unknown: no reduction assumed
        return stats

    def _keys_ndv(self, node: PhysicalNode, cap: int) -> int:
        if not node.keys:
            return min(1, cap) if cap else 0
        return composite_ndv(self._key_stats(node), cap)

    def _keys_sorted(self, node: PhysicalNode) -> bool:
        return any(s.sorted for s in self._key_stats(node))

    def _rows(self, node: PhysicalNode) -> int:
        kind = node.kind
        if kind is NodeKind.SCAN:
            return self.catalog.table(node.table).row_count
        if kind in (NodeKind.DISTRIBUTE, NodeKind.EXCHANGE, NodeKind.PROJECT):
            return node.children[0].cost.rows
        if kind is NodeKind.BROADCAST:
            return node.children[0].cost.rows * self.params.node_count
        if kind is NodeKind.MERGE:
            input_rows = node.children[0].cost.rows
            return self._keys_ndv(node, input_rows)
        if kind is NodeKind.COMPUTE:
            return self._compute_rows(node)
        if kind is NodeKind.JOIN:
            return self._join_rows(node)
        raise MalformedPlan(f"cannot estimate node kind {kind}")

    def _compute_rows(self, node: PhysicalNode) -> int:
        input_rows = node.children[0].cost.rows
        if input_rows == 0:
            return 0
        n = self.params.node_count
        ndv = self._keys_ndv(node, input_rows)
        if node.pushed and not should_push_compute(ndv, input_rows, self.params.theta):
            return input_rows  # poor reduction ratio: model no reduction at all
        if self.params.flush == PER_BATCH:
            per_node = input_rows / n
            batches = n * math.ceil(per_node / self.params.batch_size)
            expected = batches * batch_ndv(
                ndv, self.params.batch_size, self._keys_sorted(node)
            )
            return min(input_rows, round(expected))
        return min(input_rows, n * ndv)

    def _join_rows(self, node: PhysicalNode) -> int:
        fact_rows = self._unwrap(node.children[0]).cost.rows
        if node.fk_pk:
            return fact_rows  # each fact-side row matches exactly one dimension row
        dim_rows = self._unwrap(node.children[1]).cost.rows
        left_ndv = self._side_key_ndv(node.children[0], node.left_key, fact_rows)
        right_ndv = self._side_key_ndv(node.children[1], node.right_key, dim_rows)
        denom = max(left_ndv, right_ndv, 1)
        return min(fact_rows * dim_rows, round(fact_rows * dim_rows / denom))

    def _side_key_ndv(self, child: PhysicalNode, key: str, rows: int) -> int:
        try:
            _, stats = resolve_column(self.catalog, ColumnRef.parse(key))
            return min(stats.ndv_global, rows) if rows else stats.ndv_global
        except Exception:
            return max(rows, 1)

    @staticmethod
    def _unwrap(node: PhysicalNode) -> PhysicalNode:
        while node.kind in (NodeKind.BROADCAST, NodeKind.EXCHANGE):
            node = node.children[0]
        return node


def annotate_subtree(
    node: PhysicalNode, catalog: Catalog, params: CostParams, analysis: KeyAnalysis | None = None
) -> CostAnnotation:
    """Annotate a subtree bottom-up and return its root annotation."""
    return _Estimator(catalog, params, analysis).annotate(node)


def estimate_plan(
    root: PhysicalNode, catalog: Catalog, params: CostParams, analysis: KeyAnalysis | None = None
) -> CostEstimate:
    """Annotate every node bottom-up and roll the plan up into a CostEstimate."""
    validate_plan(root)
    est = _Estimator(catalog, params, analysis)
    top = est.annotate(root)
    return CostEstimate(
        rows=top.rows,
        bytes=top.bytes,
        total_bytes=est.total_bytes,
        shuffled_rows=est.shuffled_rows,
        shuffled_bytes=est.shuffled_bytes,
        shuffle_count=est.shuffle_count,
        broadcast_rows=est.broadcast_rows,
        broadcast_bytes=est.broadcast_bytes,
    )

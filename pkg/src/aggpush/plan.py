"""Query specification and the physical operator tree.

A logical aggregate lowers to the three-phase form COMPUTE -> DISTRIBUTE ->
MERGE: local accumulation, a key-routed shuffle, and a cross-node combine.
A COMPUTE sitting below a join with no DISTRIBUTE/MERGE above it (before the
join) is a partial partial aggregate: local accumulation only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator

from .catalog import Catalog, ColumnRef, resolve_column
from .data import INT64
from .errors import ConfigError, MalformedPlan, TypeMismatch


class AggFunc(str, enum.Enum):
    SUM = "SUM"
    COUNT = "COUNT"
    MIN = "MIN"
    MAX = "MAX"
    AVG = "AVG"


#: Functions whose partial states combine associatively and commutatively.
DISTRIBUTIVE = (AggFunc.SUM, AggFunc.COUNT, AggFunc.MIN, AggFunc.MAX)


@dataclass(frozen=True)
class AggregateCall:
    function: AggFunc
    input: ColumnRef | None  # None only for COUNT(*)
    output_name: str

    def __post_init__(self):
        if self.input is None and self.function is not AggFunc.COUNT:
            raise ConfigError(f"{self.function.value} requires an input column")

    def display(self) -> str:
        arg = self.input.column if self.input is not None else "*"
        return f"{self.function.value}({arg})"


@dataclass(frozen=True)
class JoinPredicate:
    fact_column: ColumnRef
    dim_column: ColumnRef


@dataclass(frozen=True)
class QuerySpec:
    """One equijoin between a fact and a dimension table, a grouping set, and
    a list of aggregate calls."""

    fact: str
    dim: str
    join: JoinPredicate
    grouping: tuple[ColumnRef, ...]
    aggregates: tuple[AggregateCall, ...]

    def validate(self, catalog: Catalog) -> None:
        if self.fact == self.dim:
            raise ConfigError("self joins are not supported")
        if self.join.fact_column.table != self.fact or self.join.dim_column.table != self.dim:
            raise ConfigError("join predicate must reference one column per joined table")
        fact_table, _ = resolve_column(catalog, self.join.fact_column)
        dim_table, _ = resolve_column(catalog, self.join.dim_column)
        if fact_table.column(self.join.fact_column.column).type != dim_table.column(
            self.join.dim_column.column
        ).type:
            raise ConfigError("join columns must share a type")
        if not self.aggregates:
            raise ConfigError("query needs at least one aggregate call")
        seen_outputs = set()
        for call in self.aggregates:
            if call.output_name in seen_outputs:
                raise ConfigError(f"duplicate aggregate output name {call.output_name!r}")
            seen_outputs.add(call.output_name)
            if call.input is not None:
                if call.input.table != self.fact:
                    raise ConfigError(
                        f"aggregate input {call.input} must come from the fact table"
                    )
                table, _ = resolve_column(catalog, call.input)
                if call.function is not AggFunc.COUNT and table.column(call.input.column).type != INT64:
                    raise TypeMismatch(f"{call.display()} needs an int64 input")
        for ref in self.grouping:
            if ref.table not in (self.fact, self.dim):
                raise ConfigError(f"grouping column {ref} is not part of the query")
            resolve_column(catalog, ref)


@dataclass(frozen=True)
class OutputColumn:
    """Final-projection recipe entry: pass a column through or divide a
    rewritten AVG's sum column by its count column."""

    name: str
    source: str | None = None
    ratio: tuple[str, str] | None = None


@dataclass(frozen=True)
class RewrittenQuery:
    spec: QuerySpec  # AVG-free
    physical_calls: tuple[AggregateCall, ...]
    projection: tuple[OutputColumn, ...]


def partial_column(function: AggFunc, input_ref: ColumnRef | None) -> str:
    arg = str(input_ref) if input_ref is not None else "*"
    return f"{function.value.lower()}({arg})"


def rewrite_avg(spec: QuerySpec) -> RewrittenQuery:
    """Replace every AVG with a SUM/COUNT pair plus a final-projection recipe.

    Physical calls are deduplicated by (function, input); non-AVG calls pass
    through untouched.
    """
    physical: list[AggregateCall] = []
    seen: dict[tuple[AggFunc, ColumnRef | None], str] = {}
    projection: list[OutputColumn] = []

    def intern(function: AggFunc, input_ref: ColumnRef | None) -> str:
        key = (function, input_ref)
        if key not in seen:
            name = partial_column(function, input_ref)
            seen[key] = name
            physical.append(AggregateCall(function, input_ref, name))
        return seen[key]

    for call in spec.aggregates:
        if call.function is AggFunc.AVG:
            sum_col = intern(AggFunc.SUM, call.input)
            count_col = intern(AggFunc.COUNT, call.input)
            projection.append(OutputColumn(call.output_name, ratio=(sum_col, count_col)))
        else:
            col = intern(call.function, call.input)
            projection.append(OutputColumn(call.output_name, source=col))

    rewritten = replace(spec, aggregates=tuple(physical))
    return RewrittenQuery(rewritten, tuple(physical), tuple(projection))


def final_key_names(grouping: tuple[ColumnRef, ...]) -> tuple[str, ...]:
    """Output names for grouping keys: base name, qualified on collision."""
    bases = [ref.column for ref in grouping]
    return tuple(
        ref.column if bases.count(ref.column) == 1 else str(ref) for ref in grouping
    )


class NodeKind(enum.Enum):
    SCAN = "SCAN"
    COMPUTE = "COMPUTE"
    DISTRIBUTE = "DISTRIBUTE"
    MERGE = "MERGE"
    BROADCAST = "BROADCAST"
    EXCHANGE = "EXCHANGE"
    JOIN = "JOIN"
    PROJECT = "PROJECT"


BROADCAST_METHOD = "broadcast"
SHUFFLE_METHOD = "shuffle"


@dataclass(frozen=True)
class PhysAgg:
    """One accumulator slot inside a COMPUTE or MERGE node.

    ``combine`` distinguishes first-touch accumulation of raw values from the
    merge of already-partial states (COUNT partials are summed, not counted).
    """

    function: AggFunc
    input_column: str | None
    output_column: str
    combine: bool
    display: str = ""


@dataclass(frozen=True)
class CostAnnotation:
    rows: int
    width: int

    @property
    def bytes(self) -> int:
        return self.rows * self.width


@dataclass(frozen=True)
class CostEstimate:
    rows: int
    bytes: int
    total_bytes: int
    shuffled_rows: int
    shuffled_bytes: int
    shuffle_count: int
    broadcast_rows: int
    broadcast_bytes: int

    def comparison_key(self) -> tuple[int, int, int]:
        return (self.shuffled_bytes, self.total_bytes, self.shuffle_count)


@dataclass
class PhysicalNode:
    kind: NodeKind
    children: tuple["PhysicalNode", ...] = ()
    keys: tuple[str, ...] = ()
    aggregates: tuple[PhysAgg, ...] = ()
    table: str | None = None
    schema: tuple[str, ...] = ()
    # join fields
    left_key: str | None = None
    right_key: str | None = None
    method: str | None = None
    build_side: int | None = None
    fk_pk: bool = False
    # projection fields
    outputs: tuple[OutputColumn, ...] = ()
    key_count: int = 0
    # planner / renderer hints
    pushed: bool = False
    collapse_agg: bool = False
    width_shape: str = ""
    nid: str = ""
    cost: CostAnnotation | None = None

    def walk(self) -> Iterator["PhysicalNode"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def find(self, kind: NodeKind) -> list["PhysicalNode"]:
        return [n for n in self.walk() if n.kind is kind]


def assign_ids(root: PhysicalNode) -> None:
    for i, node in enumerate(root.walk()):
        node.nid = f"{node.kind.value.lower()}#{i}"


def partitioned_by(node: PhysicalNode) -> tuple[str, ...] | None:
    """Distribution keys the node's output is known to be hash-routed by."""
    if node.kind is NodeKind.DISTRIBUTE:
        return node.keys
    if node.kind is NodeKind.EXCHANGE:
        return node.keys
    if node.kind is NodeKind.JOIN:
        if node.method == SHUFFLE_METHOD:
            return (node.left_key,)
        probe = node.children[0 if node.build_side == 1 else 1]
        return partitioned_by(probe)
    if node.kind in (NodeKind.COMPUTE, NodeKind.MERGE, NodeKind.PROJECT):
        return partitioned_by(node.children[0])
    return None


_ARITY = {
    NodeKind.SCAN: 0,
    NodeKind.JOIN: 2,
}


def validate_plan(root: PhysicalNode) -> None:
    """Check structural invariants; raises MalformedPlan on violation.

    Every full aggregate must appear as an exact COMPUTE -> DISTRIBUTE ->
    MERGE triple whose COMPUTE and MERGE keys match and whose DISTRIBUTE key
    is a subset of them; a COMPUTE outside a triple must sit directly below
    join plumbing (the partial-partial form).
    """

    def visit(node: PhysicalNode, parent: PhysicalNode | None) -> None:
        expected = _ARITY.get(node.kind, 1)
        if len(node.children) != expected:
            raise MalformedPlan(
                f"{node.kind.value} expects {expected} child(ren), has {len(node.children)}"
            )
        if node.kind is NodeKind.SCAN and not node.table:
            raise MalformedPlan("SCAN needs a table name")
        if node.kind is NodeKind.MERGE:
            dist = node.children[0]
            if dist.kind is not NodeKind.DISTRIBUTE:
                raise MalformedPlan("MERGE must sit on a DISTRIBUTE")
            comp = dist.children[0]
            if comp.kind is not NodeKind.COMPUTE:
                raise MalformedPlan("DISTRIBUTE must sit on a COMPUTE")
            if comp.keys != node.keys:
                raise MalformedPlan("aggregate triple keys must match")
            if not set(dist.keys) <= set(comp.keys):
                raise MalformedPlan("DISTRIBUTE key must be a subset of the grouping keys")
        if node.kind is NodeKind.DISTRIBUTE:
            if parent is None or parent.kind is not NodeKind.MERGE:
                raise MalformedPlan("DISTRIBUTE only appears inside an aggregate triple")
        if node.kind is NodeKind.COMPUTE:
            allowed = (NodeKind.DISTRIBUTE, NodeKind.JOIN, NodeKind.EXCHANGE, NodeKind.BROADCAST)
            if parent is None or parent.kind not in allowed:
                raise MalformedPlan("COMPUTE must be part of a triple or feed a join")
        if node.kind is NodeKind.JOIN:
            if node.method not in (BROADCAST_METHOD, SHUFFLE_METHOD):
                raise MalformedPlan(f"unknown join method {node.method!r}")
            if node.build_side not in (0, 1):
                raise MalformedPlan("join build side must be 0 or 1")
        for child in node.children:
            visit(child, node)

    visit(root, None)


def count_shuffles(root: PhysicalNode) -> int:
    """Number of network redistribution stages in the plan.

    Each DISTRIBUTE is one stage; each shuffle join is one co-partitioning
    stage regardless of how many of its inputs actually move. Broadcasts are
    not shuffles (see count_broadcasts).
    """
    validate_plan(root)
    total = 0
    for node in root.walk():
        if node.kind is NodeKind.DISTRIBUTE:
            total += 1
        elif node.kind is NodeKind.JOIN and node.method == SHUFFLE_METHOD:
            total += 1
    return total


def count_broadcasts(root: PhysicalNode) -> int:
    validate_plan(root)
    return sum(1 for n in root.walk() if n.kind is NodeKind.BROADCAST)


class PlanStrategy(str, enum.Enum):
    NO_PUSHDOWN = "NO_PUSHDOWN"
    PA = "PA"
    PPA = "PPA"


@dataclass
class PlanAlternative:
    index: int
    strategy: PlanStrategy
    top_aggregate_eliminated: bool
    root: PhysicalNode
    shuffle_count: int = 0
    estimate: CostEstimate | None = None

    def __post_init__(self):
        if self.strategy is PlanStrategy.PPA and self.top_aggregate_eliminated:
            raise MalformedPlan("a partial-partial plan always keeps the top aggregate")
        if self.top_aggregate_eliminated and self.strategy is not PlanStrategy.PA:
            raise MalformedPlan("only full pushdown can drop the top aggregate")

    def label(self) -> str:
        if self.strategy is PlanStrategy.NO_PUSHDOWN:
            return "No pushdown"
        if self.strategy is PlanStrategy.PA:
            return "PA / AGG eliminated" if self.top_aggregate_eliminated else "PA / AGG kept"
        return "PPA / AGG kept"

"""aggpush: a miniature distributed query planner and execution simulator.

The planner enumerates the three ways to place an aggregate around an
equijoin (no pushdown, a full pushed aggregate, and a pushed local
accumulation), prices them with an NDV-driven cost model, and renders the
search space as a marked decision tree. The executor simulates an N-node
engine in-process, counting every shuffle and broadcast, and every strategy
is verifiable against a brute-force oracle on generated data.
"""

from .catalog import (
    Catalog,
    Column,
    ColumnRef,
    ColumnStats,
    ForeignKey,
    TableSchema,
    apply_realized_stats,
    resolve_column,
    validate_fk,
)
from .config import RunConfig, load_config, parse_config
from .cost import (
    BatchModel,
    CostParams,
    WidthModel,
    batch_ndv,
    composite_ndv,
    estimate_plan,
    observed_batch_ndv,
    reduction_ratio,
    should_push_compute,
)
from .data import Dataset, ResultTable, dump_dataset, load_dataset
from .datagen import ColumnGen, GenSpec, TableGen, generate
from .errors import (
    AggPushError,
    ConfigError,
    InfeasibleNDV,
    MalformedPlan,
    NotCoLocated,
    OracleMismatch,
    TypeMismatch,
    UnknownColumn,
    UnknownTable,
    UnpushableGrouping,
    ZeroInput,
)
from .executor import (
    Accumulator,
    ExecutionMetrics,
    Partition,
    execute,
    op_compute,
    op_distribute,
    op_join,
    op_merge,
    partition_table,
)
from .keys import (
    EquivalenceClasses,
    KeyAnalysis,
    KeyRelation,
    analyze,
    build_equivalence,
    can_eliminate_top,
    classify_relation,
    substitute_to_fact,
)
from .oracle import reference_eval
from .plan import (
    AggFunc,
    AggregateCall,
    CostEstimate,
    JoinPredicate,
    PhysicalNode,
    PlanAlternative,
    PlanStrategy,
    QuerySpec,
    count_broadcasts,
    count_shuffles,
    rewrite_avg,
)
from .planner import (
    PlanSpace,
    build_no_pushdown,
    build_pa,
    build_ppa,
    enumerate_and_choose,
)
from .render import format_human, humanize_bytes, humanize_rows, render_decision_tree

__version__ = "0.1.0"

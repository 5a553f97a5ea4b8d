"""Strategy enumeration: build the three aggregate-over-join alternatives,
apply the elimination rule, cost them, and pick the cheapest.

Index 1 never pushes anything below the join; index 2 pushes a complete
aggregate triple (and drops the top aggregate when the join key is contained
in the grouping key of an FK-PK join); index 3 pushes local accumulation only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import Catalog
from .cost import CostParams, annotate_subtree, estimate_plan
from .errors import UnpushableGrouping
from .keys import KeyAnalysis, analyze, can_eliminate_top
from .plan import (
    AggFunc,
    AggregateCall,
    BROADCAST_METHOD,
    NodeKind,
    OutputColumn,
    PhysAgg,
    PhysicalNode,
    PlanAlternative,
    PlanStrategy,
    QuerySpec,
    RewrittenQuery,
    SHUFFLE_METHOD,
    assign_ids,
    count_shuffles,
    final_key_names,
    partitioned_by,
    rewrite_avg,
)


@dataclass
class PlanSpace:
    """The ordered alternatives for one query plus the cost-based choice."""

    alternatives: list[PlanAlternative]
    chosen_index: int  # 1-based, matches PlanAlternative.index
    analysis: KeyAnalysis | None
    notes: list[str] = field(default_factory=list)

    @property
    def chosen(self) -> PlanAlternative:
        return next(a for a in self.alternatives if a.index == self.chosen_index)

    def alternative(self, index: int) -> PlanAlternative:
        for alt in self.alternatives:
            if alt.index == index:
                return alt
        raise KeyError(f"plan space has no alternative {index}")


class _Builder:
    def __init__(
        self,
        rq: RewrittenQuery,
        catalog: Catalog,
        params: CostParams,
        analysis: KeyAnalysis,
    ):
        self.rq = rq
        self.spec = rq.spec
        self.catalog = catalog
        self.params = params
        self.analysis = analysis
        self.fact_key = str(analysis.join_key)
        self.dim_key = str(rq.spec.join.dim_column)

    # -- leaf and operator constructors -------------------------------------

    def scan(self, table: str) -> PhysicalNode:
        schema = tuple(f"{table}.{c}" for c in self.catalog.table(table).column_names())
        return PhysicalNode(
            kind=NodeKind.SCAN, table=table, schema=schema, width_shape=f"scan:{table}"
        )

    def _initial_aggs(self) -> tuple[PhysAgg, ...]:
        return tuple(
            PhysAgg(
                function=call.function,
                input_column=str(call.input) if call.input is not None else None,
                output_column=call.output_name,
                combine=False,
                display=call.display(),
            )
            for call in self.rq.physical_calls
        )

    def _combine_aggs(self) -> tuple[PhysAgg, ...]:
        return tuple(
            PhysAgg(
                function=call.function,
                input_column=call.output_name,
                output_column=call.output_name,
                combine=True,
                display=call.display(),
            )
            for call in self.rq.physical_calls
        )

    def compute(
        self,
        child: PhysicalNode,
        keys: tuple[str, ...],
        aggs: tuple[PhysAgg, ...],
        pushed: bool,
    ) -> PhysicalNode:
        schema = keys + tuple(a.output_column for a in aggs)
        return PhysicalNode(
            kind=NodeKind.COMPUTE,
            children=(child,),
            keys=keys,
            aggregates=aggs,
            schema=schema,
            pushed=pushed,
            width_shape="partial",
        )

    def triple(
        self,
        child: PhysicalNode,
        keys: tuple[str, ...],
        aggs: tuple[PhysAgg, ...],
        distribute_keys: tuple[str, ...],
        pushed: bool,
        collapse: bool,
    ) -> PhysicalNode:
        comp = self.compute(child, keys, aggs, pushed)
        dist = PhysicalNode(
            kind=NodeKind.DISTRIBUTE,
            children=(comp,),
            keys=distribute_keys,
            schema=comp.schema,
            width_shape="partial",
        )
        merged_aggs = tuple(
            PhysAgg(a.function, a.output_column, a.output_column, True, a.display)
            for a in aggs
        )
        return PhysicalNode(
            kind=NodeKind.MERGE,
            children=(dist,),
            keys=keys,
            aggregates=merged_aggs,
            schema=comp.schema,
            collapse_agg=collapse,
            width_shape="partial",
        )

    def join(
        self, fact_input: PhysicalNode, dim_input: PhysicalNode, prefer_small_build: bool
    ) -> PhysicalNode:
        fact_cost = annotate_subtree(fact_input, self.catalog, self.params, self.analysis)
        dim_cost = annotate_subtree(dim_input, self.catalog, self.params, self.analysis)
        build_side = 1
        if prefer_small_build and fact_cost.bytes < dim_cost.bytes:
            build_side = 0
        build_bytes = (fact_cost if build_side == 0 else dim_cost).bytes
        method = (
            BROADCAST_METHOD
            if build_bytes <= self.params.broadcast_threshold_bytes
            else SHUFFLE_METHOD
        )

        schema = fact_input.schema + dim_input.schema
        sides = [fact_input, dim_input]
        side_keys = [self.fact_key, self.dim_key]
        if method == BROADCAST_METHOD:
            sides[build_side] = PhysicalNode(
                kind=NodeKind.BROADCAST,
                children=(sides[build_side],),
                schema=sides[build_side].schema,
            )
        else:
            for i, side in enumerate(sides):
                if partitioned_by(side) != (side_keys[i],):
                    sides[i] = PhysicalNode(
                        kind=NodeKind.EXCHANGE,
                        children=(side,),
                        keys=(side_keys[i],),
                        schema=side.schema,
                    )

        fact_has_aggregate = any(n.kind is NodeKind.COMPUTE for n in fact_input.walk())
        return PhysicalNode(
            kind=NodeKind.JOIN,
            children=tuple(sides),
            left_key=self.fact_key,
            right_key=self.dim_key,
            method=method,
            build_side=build_side,
            fk_pk=self.analysis.fk_pk,
            schema=schema,
            width_shape="joined_agg" if fact_has_aggregate else "joined_raw",
        )

    def project(self, child: PhysicalNode) -> PhysicalNode:
        key_names = final_key_names(self.spec.grouping)
        outputs = tuple(
            OutputColumn(name, source=str(ref))
            for name, ref in zip(key_names, self.spec.grouping)
        ) + self.rq.projection
        return PhysicalNode(
            kind=NodeKind.PROJECT,
            children=(child,),
            outputs=outputs,
            key_count=len(self.spec.grouping),
            schema=tuple(o.name for o in outputs),
            width_shape="final",
        )

    # -- strategy trees ------------------------------------------------------

    def top_keys(self) -> tuple[str, ...]:
        return tuple(str(ref) for ref in self.spec.grouping)

    def no_pushdown(self) -> PhysicalNode:
        joined = self.join(self.scan(self.spec.fact), self.scan(self.spec.dim), False)
        top = self.triple(
            joined, self.top_keys(), self._initial_aggs(), self.top_keys(), False, True
        )
        return self.project(top)

    def pa(self, eliminate: bool) -> PhysicalNode:
        pushed_keys = tuple(str(ref) for ref in self.analysis.pushed_grouping)
        pushed = self.triple(
            self.scan(self.spec.fact),
            pushed_keys,
            self._initial_aggs(),
            (self.fact_key,),
            True,
            False,
        )
        joined = self.join(pushed, self.scan(self.spec.dim), prefer_small_build=eliminate)
        if eliminate:
            return self.project(joined)
        top = self.triple(
            joined, self.top_keys(), self._combine_aggs(), self.top_keys(), False, True
        )
        return self.project(top)

    def ppa(self) -> PhysicalNode:
        pushed_keys = tuple(str(ref) for ref in self.analysis.pushed_grouping)
        pushed = self.compute(self.scan(self.spec.fact), pushed_keys, self._initial_aggs(), True)
        joined = self.join(pushed, self.scan(self.spec.dim), False)
        top = self.triple(
            joined, self.top_keys(), self._combine_aggs(), self.top_keys(), False, True
        )
        return self.project(top)


def _builder(spec: QuerySpec, catalog: Catalog, params: CostParams) -> _Builder:
    spec.validate(catalog)
    rq = rewrite_avg(spec)
    return _Builder(rq, catalog, params, analyze(spec, catalog))


def build_no_pushdown(spec: QuerySpec, catalog: Catalog, params: CostParams) -> PhysicalNode:
    return _builder(spec, catalog, params).no_pushdown()


def build_pa(
    spec: QuerySpec, catalog: Catalog, params: CostParams, can_eliminate: bool
) -> PhysicalNode:
    return _builder(spec, catalog, params).pa(can_eliminate)


def build_ppa(spec: QuerySpec, catalog: Catalog, params: CostParams) -> PhysicalNode:
    return _builder(spec, catalog, params).ppa()


def enumerate_and_choose(spec: QuerySpec, catalog: Catalog, params: CostParams) -> PlanSpace:
    """Build every available alternative, estimate each, and mark the
    cheapest under the (shuffled bytes, total bytes, shuffle count) key.

    Alternatives are never dropped for cost reasons: a poor reduction ratio
    simply leaves the pushed alternatives without modeled reduction, so the
    baseline wins on cost. Only an unpushable grouping removes them.
    """
    spec.validate(catalog)
    rq = rewrite_avg(spec)
    try:
        analysis = analyze(spec, catalog)
    except UnpushableGrouping as exc:
        builder = _Builder(rq, catalog, params, _baseline_analysis(spec, catalog))
        root = builder.no_pushdown()
        alt = PlanAlternative(1, PlanStrategy.NO_PUSHDOWN, False, root)
        _finish(alt, catalog, params, None)
        return PlanSpace([alt], 1, None, notes=[f"pushdown unavailable: {exc}"])

    builder = _Builder(rq, catalog, params, analysis)
    eliminate = can_eliminate_top(analysis, analysis.fk_pk)
    alternatives = [
        PlanAlternative(1, PlanStrategy.NO_PUSHDOWN, False, builder.no_pushdown()),
        PlanAlternative(2, PlanStrategy.PA, eliminate, builder.pa(eliminate)),
        PlanAlternative(3, PlanStrategy.PPA, False, builder.ppa()),
    ]
    for alt in alternatives:
        _finish(alt, catalog, params, analysis)
    chosen = min(alternatives, key=lambda a: (a.estimate.comparison_key(), a.index))
    return PlanSpace(alternatives, chosen.index, analysis)


def _finish(
    alt: PlanAlternative, catalog: Catalog, params: CostParams, analysis: KeyAnalysis | None
) -> None:
    assign_ids(alt.root)
    alt.estimate = estimate_plan(alt.root, catalog, params, analysis)
    alt.shuffle_count = count_shuffles(alt.root)


def _baseline_analysis(spec: QuerySpec, catalog: Catalog) -> KeyAnalysis:
    # Pushdown is off; only the join-key identity and FK flag matter.
    from .keys import KeyRelation

    fk = catalog.fk_between(spec.join.fact_column, spec.join.dim_column)
    return KeyAnalysis(
        grouping=spec.grouping,
        substituted=(),
        recovered=(),
        join_key=spec.join.fact_column,
        pushed_grouping=(spec.join.fact_column,),
        relation=KeyRelation.DISJOINT,
        fk_pk=fk is not None,
    )

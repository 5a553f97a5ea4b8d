import pytest

from aggpush import (
    AggFunc,
    AggregateCall,
    ColumnRef,
    MalformedPlan,
    PlanAlternative,
    PlanStrategy,
    count_broadcasts,
    count_shuffles,
    enumerate_and_choose,
    rewrite_avg,
)
from aggpush.plan import NodeKind, PhysicalNode, validate_plan


def _amount():
    return ColumnRef("orders", "amount")


def test_rewrite_avg_expands_to_sum_and_count(category_small_config):
    spec = category_small_config.query
    rq = rewrite_avg(spec)
    functions = [c.function for c in rq.physical_calls]
    assert AggFunc.AVG not in functions
    assert AggFunc.SUM in functions and AggFunc.COUNT in functions
    avg_out = next(o for o in rq.projection if o.name == "avg_amount")
    assert avg_out.ratio is not None
    sum_col, count_col = avg_out.ratio
    assert sum_col.startswith("sum(") and count_col.startswith("count(")


def test_rewrite_without_avg_is_identity_on_calls(product_config):
    rq = rewrite_avg(product_config.query)
    assert [c.function for c in rq.physical_calls] == [AggFunc.SUM]
    assert rq.projection[0].source == rq.physical_calls[0].output_name


def test_rewrite_avg_deduplicates_shared_sum(product_config):
    spec = product_config.query
    spec = spec.__class__(
        fact=spec.fact,
        dim=spec.dim,
        join=spec.join,
        grouping=spec.grouping,
        aggregates=(
            AggregateCall(AggFunc.AVG, _amount(), "avg_amount"),
            AggregateCall(AggFunc.SUM, _amount(), "sum_amount"),
        ),
    )
    rq = rewrite_avg(spec)
    assert len(rq.physical_calls) == 2  # one SUM and one COUNT, SUM shared
    assert [c.function for c in rq.physical_calls] == [AggFunc.SUM, AggFunc.COUNT]
    by_name = {o.name: o for o in rq.projection}
    assert by_name["sum_amount"].source == rq.physical_calls[0].output_name
    assert by_name["avg_amount"].ratio[0] == by_name["sum_amount"].source


def _force_shuffle(config):
    from dataclasses import replace

    return replace(config.params, broadcast_threshold_bytes=0)


def test_count_shuffles_per_strategy(category_small_config):
    cfg = category_small_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, _force_shuffle(cfg))
    counts = {alt.strategy: count_shuffles(alt.root) for alt in space.alternatives}
    assert counts[PlanStrategy.NO_PUSHDOWN] == 2
    assert counts[PlanStrategy.PA] == 3
    assert counts[PlanStrategy.PPA] == 2


def test_pa_with_elimination_has_two_shuffles(product_config):
    cfg = product_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, _force_shuffle(cfg))
    pa = space.alternative(2)
    assert pa.top_aggregate_eliminated
    assert count_shuffles(pa.root) == 2


def test_broadcast_counts_separately(product_config):
    cfg = product_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    chosen = space.chosen
    assert count_broadcasts(chosen.root) == 1
    assert count_shuffles(chosen.root) == 1  # the pushed distribute only


def test_validate_plan_rejects_merge_without_distribute():
    scan = PhysicalNode(NodeKind.SCAN, table="t", schema=("t.a",))
    merge = PhysicalNode(NodeKind.MERGE, children=(scan,), keys=("t.a",), schema=("t.a",))
    with pytest.raises(MalformedPlan):
        validate_plan(merge)


def test_validate_plan_rejects_key_mismatch():
    scan = PhysicalNode(NodeKind.SCAN, table="t", schema=("t.a", "t.b"))
    comp = PhysicalNode(NodeKind.COMPUTE, children=(scan,), keys=("t.a",), schema=("t.a",))
    dist = PhysicalNode(NodeKind.DISTRIBUTE, children=(comp,), keys=("t.a",), schema=("t.a",))
    merge = PhysicalNode(NodeKind.MERGE, children=(dist,), keys=("t.b",), schema=("t.b",))
    with pytest.raises(MalformedPlan):
        validate_plan(merge)


def test_count_shuffles_on_malformed_plan():
    lonely = PhysicalNode(NodeKind.DISTRIBUTE, children=(), keys=("k",))
    with pytest.raises(MalformedPlan):
        count_shuffles(lonely)


def test_plan_alternative_invariants():
    root = PhysicalNode(NodeKind.SCAN, table="t", schema=("t.a",))
    with pytest.raises(MalformedPlan):
        PlanAlternative(3, PlanStrategy.PPA, True, root)
    with pytest.raises(MalformedPlan):
        PlanAlternative(1, PlanStrategy.NO_PUSHDOWN, True, root)

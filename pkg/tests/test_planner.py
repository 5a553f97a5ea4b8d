import dataclasses

from aggpush import (
    build_no_pushdown,
    build_pa,
    build_ppa,
    count_shuffles,
    enumerate_and_choose,
    render_decision_tree,
)
from aggpush.plan import NodeKind, PlanStrategy


def _kinds_above_join(root):
    kinds = []
    node = root
    while node.kind is not NodeKind.JOIN:
        kinds.append(node.kind)
        node = node.children[0]
    return kinds, node


def test_no_pushdown_shape(category_small_config):
    cfg = category_small_config
    root = build_no_pushdown(cfg.query, cfg.catalog, cfg.params)
    kinds, join = _kinds_above_join(root)
    assert kinds == [NodeKind.PROJECT, NodeKind.MERGE, NodeKind.DISTRIBUTE, NodeKind.COMPUTE]
    fact_side = join.children[0]
    while fact_side.kind is NodeKind.EXCHANGE:
        fact_side = fact_side.children[0]
    assert fact_side.kind is NodeKind.SCAN  # nothing pushed below the join


def test_pa_shape_without_elimination(category_small_config):
    cfg = category_small_config
    root = build_pa(cfg.query, cfg.catalog, cfg.params, can_eliminate=False)
    kinds, join = _kinds_above_join(root)
    assert kinds == [NodeKind.PROJECT, NodeKind.MERGE, NodeKind.DISTRIBUTE, NodeKind.COMPUTE]
    fact_side = join.children[0]
    while fact_side.kind in (NodeKind.EXCHANGE, NodeKind.BROADCAST):
        fact_side = fact_side.children[0]
    assert fact_side.kind is NodeKind.MERGE  # a complete aggregate below the join
    assert fact_side.children[0].kind is NodeKind.DISTRIBUTE


def test_pa_shape_with_elimination(product_config):
    cfg = product_config
    root = build_pa(cfg.query, cfg.catalog, cfg.params, can_eliminate=True)
    node = root
    assert node.kind is NodeKind.PROJECT
    node = node.children[0]
    assert node.kind is NodeKind.JOIN  # no aggregate above the join at all


def test_ppa_shape(category_small_config):
    cfg = category_small_config
    root = build_ppa(cfg.query, cfg.catalog, cfg.params)
    kinds, join = _kinds_above_join(root)
    assert kinds == [NodeKind.PROJECT, NodeKind.MERGE, NodeKind.DISTRIBUTE, NodeKind.COMPUTE]
    fact_side = join.children[0]
    while fact_side.kind is NodeKind.EXCHANGE:
        fact_side = fact_side.children[0]
    assert fact_side.kind is NodeKind.COMPUTE
    assert fact_side.pushed
    assert fact_side.children[0].kind is NodeKind.SCAN
    # pushed keys carry the join key; the post-join aggregate groups by the
    # original grouping set
    assert "orders.product_id" in fact_side.keys
    top_compute = next(
        n for n in root.walk() if n.kind is NodeKind.COMPUTE and not n.pushed
    )
    assert top_compute.keys == ("products.category",)


def test_reference_scenario_chooses_pa(product_config):
    cfg = product_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    assert space.chosen_index == 2
    assert space.chosen.top_aggregate_eliminated


def test_running_example_chooses_ppa(category_config):
    cfg = category_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    assert space.chosen_index == 3
    assert space.chosen.strategy is PlanStrategy.PPA


def test_sorted_near_unique_chooses_baseline(sorted_unique_config):
    cfg = sorted_unique_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    assert space.chosen_index == 1


def test_unpushable_space_has_single_alternative(nonfk_config):
    cfg = nonfk_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    assert [a.index for a in space.alternatives] == [1]
    assert space.notes and "pushdown unavailable" in space.notes[0]
    text = render_decision_tree(space)
    assert all(line.startswith("1>") for line in text.splitlines())


def test_elimination_never_claimed_without_fk(nonfk_config, category_small_config):
    # same-key grouping but no FK constraint: the gate must stay closed
    cfg = category_small_config
    catalog = dataclasses.replace(cfg.catalog, foreign_keys=())
    spec = dataclasses.replace(
        cfg.query,
        grouping=(cfg.query.join.fact_column,),
    )
    space = enumerate_and_choose(spec, catalog, cfg.params)
    assert not space.alternative(2).top_aggregate_eliminated


def test_ppa_estimate_always_one_shuffle_below_pa(category_small_config):
    cfg = category_small_config
    for threshold in (0, 10_000_000):
        params = dataclasses.replace(cfg.params, broadcast_threshold_bytes=threshold)
        space = enumerate_and_choose(cfg.query, cfg.catalog, params)
        pa, ppa = space.alternative(2), space.alternative(3)
        assert not pa.top_aggregate_eliminated
        assert ppa.estimate.shuffle_count < pa.estimate.shuffle_count


def test_enumeration_is_deterministic(product_config):
    cfg = product_config
    first = render_decision_tree(enumerate_and_choose(cfg.query, cfg.catalog, cfg.params))
    second = render_decision_tree(enumerate_and_choose(cfg.query, cfg.catalog, cfg.params))
    assert first == second


def test_scalar_aggregate_plans(category_small_config):
    cfg = category_small_config
    spec = dataclasses.replace(cfg.query, grouping=())
    space = enumerate_and_choose(spec, cfg.catalog, cfg.params)
    assert len(space.alternatives) == 3
    for alt in space.alternatives:
        assert count_shuffles(alt.root) >= 1

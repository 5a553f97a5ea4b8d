import random
from fractions import Fraction

from aggpush import (
    AggFunc,
    AggregateCall,
    Catalog,
    Column,
    ColumnRef,
    ColumnStats,
    Dataset,
    ForeignKey,
    JoinPredicate,
    QuerySpec,
    TableSchema,
    enumerate_and_choose,
    execute,
    generate,
    reference_eval,
)
from aggpush.cost import CostParams, WidthModel


def tiny_catalog():
    orders = TableSchema(
        "orders",
        (
            Column("product_id", "string", ColumnStats(ndv_global=2)),
            Column("amount", "int64", ColumnStats(ndv_global=3)),
        ),
        row_count=3,
    )
    products = TableSchema(
        "products",
        (
            Column("id", "string", ColumnStats(ndv_global=2)),
            Column("category", "string", ColumnStats(ndv_global=2)),
        ),
        row_count=2,
        primary_key="id",
    )
    fk = ForeignKey(ColumnRef("orders", "product_id"), ColumnRef("products", "id"))
    return Catalog((orders, products), (fk,))


def tiny_spec(grouping, aggregates):
    return QuerySpec(
        fact="orders",
        dim="products",
        join=JoinPredicate(ColumnRef("orders", "product_id"), ColumnRef("products", "id")),
        grouping=tuple(grouping),
        aggregates=tuple(aggregates),
    )


FACT = Dataset(("product_id", "amount"), [("p1", 10), ("p1", 5), ("p2", 1)])
DIM = Dataset(("id", "category"), [("p1", "catA"), ("p2", "catB")])


def test_hand_evaluated_sum_by_category():
    spec = tiny_spec(
        [ColumnRef("products", "category")],
        [AggregateCall(AggFunc.SUM, ColumnRef("orders", "amount"), "total")],
    )
    result = reference_eval(spec, FACT, DIM)
    assert result.columns == ("category", "total")
    assert result.rows == (("catA", 15), ("catB", 1))


def test_hand_evaluated_sum_by_product():
    spec = tiny_spec(
        [ColumnRef("orders", "product_id")],
        [AggregateCall(AggFunc.SUM, ColumnRef("orders", "amount"), "total")],
    )
    result = reference_eval(spec, FACT, DIM)
    assert result.rows == (("p1", 15), ("p2", 1))


def test_empty_fact_gives_empty_result():
    spec = tiny_spec(
        [ColumnRef("products", "category")],
        [AggregateCall(AggFunc.SUM, ColumnRef("orders", "amount"), "total")],
    )
    empty = Dataset(("product_id", "amount"), [])
    assert reference_eval(spec, empty, DIM).rows == ()


def test_avg_is_exact_rational():
    spec = tiny_spec(
        [ColumnRef("products", "category")],
        [AggregateCall(AggFunc.AVG, ColumnRef("orders", "amount"), "avg_amount")],
    )
    result = reference_eval(spec, FACT, DIM)
    assert result.rows == (("catA", Fraction(15, 2)), ("catB", Fraction(1, 1)))


def test_oracle_ignores_input_row_order():
    spec = tiny_spec(
        [ColumnRef("products", "category")],
        [
            AggregateCall(AggFunc.SUM, ColumnRef("orders", "amount"), "total"),
            AggregateCall(AggFunc.MIN, ColumnRef("orders", "amount"), "lo"),
            AggregateCall(AggFunc.COUNT, None, "n"),
        ],
    )
    baseline = reference_eval(spec, FACT, DIM)
    rng = random.Random(4)
    for _ in range(10):
        fact_rows = FACT.rows[:]
        dim_rows = DIM.rows[:]
        rng.shuffle(fact_rows)
        rng.shuffle(dim_rows)
        shuffled = reference_eval(
            spec, Dataset(FACT.columns, fact_rows), Dataset(DIM.columns, dim_rows)
        )
        assert shuffled.rows == baseline.rows


def test_direct_avg_agrees_with_rewritten_execution(category_small_config):
    cfg = category_small_config
    datasets, _ = generate(cfg.genspec, cfg.catalog)
    oracle = reference_eval(cfg.query, datasets["orders"], datasets["products"])
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    result, _ = execute(space.chosen.root, cfg.catalog, datasets, cfg.params)
    avg_idx = result.columns.index("avg_amount")
    assert all(isinstance(row[avg_idx], Fraction) for row in result.rows)
    assert result.same_rows(oracle)

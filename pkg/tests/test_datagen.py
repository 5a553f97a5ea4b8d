import math

import numpy as np
import pytest

from aggpush import (
    Catalog,
    Column,
    ColumnRef,
    ColumnStats,
    ForeignKey,
    InfeasibleNDV,
    TableSchema,
    generate,
    validate_fk,
)
from aggpush.datagen import ColumnGen, GenSpec, TableGen, zipf_weights


def one_column_catalog(rows, ndv, sorted=False, name="t", col="k"):
    table = TableSchema(
        name,
        (Column(col, "int64", ColumnStats(ndv_global=ndv, sorted=sorted)),),
        row_count=rows,
    )
    return Catalog((table,))


def test_same_seed_same_bytes():
    catalog = one_column_catalog(5000, 120)
    spec = GenSpec(seed=42)
    a, _ = generate(spec, catalog)
    b, _ = generate(spec, catalog)
    assert a["t"].rows == b["t"].rows
    c, _ = generate(GenSpec(seed=43), catalog)
    assert a["t"].rows != c["t"].rows


def test_exact_coverage_hits_target_ndv():
    catalog = one_column_catalog(1000, 100)
    datasets, realized = generate(GenSpec(seed=1), catalog)
    values = datasets["t"].column_values("k")
    assert len(set(values)) == 100
    assert realized["t"]["k"].ndv_global == 100


def test_pure_sampling_stays_at_or_below_target():
    catalog = one_column_catalog(150, 100)
    datasets, realized = generate(GenSpec(seed=1, mode="pure_sampling"), catalog)
    assert realized["t"]["k"].ndv_global <= 100


def test_sequential_primary_key_is_sorted_and_unique():
    table = TableSchema(
        "d",
        (Column("id", "int64", ColumnStats(ndv_global=10000)),),
        row_count=10000,
        primary_key="id",
    )
    datasets, realized = generate(GenSpec(seed=3), Catalog((table,)))
    stats = realized["d"]["id"]
    assert stats.ndv_global == 10000
    assert stats.sorted is True


def test_zipf_top_share_matches_pmf():
    rows, ndv = 100_000, 100
    catalog = one_column_catalog(rows, ndv)
    spec = GenSpec(seed=9, tables={"t": TableGen(columns={"k": ColumnGen(distribution="zipf", zipf_s=1.0)})})
    datasets, _ = generate(spec, catalog)
    values = datasets["t"].column_values("k")
    top_share = max(np.bincount(values).tolist()) / rows
    expected = zipf_weights(ndv, 1.0)[0]  # 1 / H_100
    assert expected == pytest.approx(1 / sum(1 / i for i in range(1, 101)))
    assert abs(top_share - expected) / expected < 0.10


def test_infeasible_ndv():
    catalog = one_column_catalog(10, 10)
    spec = GenSpec(seed=0, tables={"t": TableGen(columns={"k": ColumnGen(ndv=20)})})
    with pytest.raises(InfeasibleNDV):
        generate(spec, catalog)


def test_fk_integrity_holds_on_generated_data():
    orders = TableSchema(
        "orders",
        (Column("product_id", "int64", ColumnStats(ndv_global=40)),),
        row_count=500,
    )
    products = TableSchema(
        "products",
        (Column("id", "int64", ColumnStats(ndv_global=60)),),
        row_count=60,
        primary_key="id",
    )
    fk = ForeignKey(ColumnRef("orders", "product_id"), ColumnRef("products", "id"))
    catalog = Catalog((orders, products), (fk,))
    datasets, _ = generate(GenSpec(seed=21), catalog)
    assert validate_fk(catalog, fk, datasets["orders"], datasets["products"]) is True


def test_sorted_column_is_globally_nondecreasing():
    catalog = one_column_catalog(2000, 50, sorted=True)
    datasets, realized = generate(GenSpec(seed=5), catalog)
    values = datasets["t"].column_values("k")
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert realized["t"]["k"].sorted is True


def test_pseudo_sorted_shuffles_within_window_only():
    window = 16
    catalog = one_column_catalog(2000, 2000)
    spec = GenSpec(
        seed=6,
        tables={
            "t": TableGen(
                columns={
                    "k": ColumnGen(
                        distribution="sequential", sorted=True, pseudo_sorted=True,
                        shuffle_window=window,
                    )
                }
            )
        },
    )
    datasets, _ = generate(spec, catalog)
    values = datasets["t"].column_values("k")
    assert sorted(values) == list(range(1, 2001))
    displacement = max(abs(v - (i + 1)) for i, v in enumerate(values))
    assert displacement < window


def test_string_dimension_values():
    table = TableSchema(
        "d",
        (Column("category", "string", ColumnStats(ndv_global=7)),),
        row_count=30,
    )
    datasets, realized = generate(GenSpec(seed=8), Catalog((table,)))
    values = datasets["d"].column_values("category")
    assert all(isinstance(v, str) for v in values)
    assert realized["d"]["category"].ndv_global == 7

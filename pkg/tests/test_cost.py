import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggpush import (
    ColumnStats,
    ConfigError,
    ZeroInput,
    batch_ndv,
    composite_ndv,
    enumerate_and_choose,
    reduction_ratio,
    should_push_compute,
)
from aggpush.plan import NodeKind

# Independently computed with mpmath (50 digits): 100 * (1 - e^-10)
EXPECTED_NDV_100_B_1000 = 99.99546000702375
# 1e9 * (1 - e^-1e-6), series-checked: tends to B as ndv grows
EXPECTED_NDV_1E9_B_1000 = 999.9995000001667


def test_batch_ndv_against_high_precision_reference():
    import mpmath

    mpmath.mp.dps = 50
    reference = float(100 * (1 - mpmath.e ** (-mpmath.mpf(1000) / 100)))
    assert reference == pytest.approx(EXPECTED_NDV_100_B_1000, abs=1e-9)
    assert batch_ndv(100, 1000) == pytest.approx(EXPECTED_NDV_100_B_1000, abs=1e-9)


def test_batch_ndv_tends_to_batch_size_for_huge_ndv():
    assert batch_ndv(10**9, 1000) == pytest.approx(EXPECTED_NDV_1E9_B_1000, abs=1e-6)


def test_batch_ndv_zero_batch():
    assert batch_ndv(12345, 0) == 0.0
    assert batch_ndv(0, 1000) == 0.0


def test_batch_ndv_sorted_degenerates_to_batch_size():
    assert batch_ndv(100, 1000, sorted=True) == 1000.0


def test_reduction_ratio_values():
    assert reduction_ratio(10000, 1000000) == pytest.approx(0.01)
    assert reduction_ratio(500, 500) == 1.0
    assert reduction_ratio(1, 1000) == pytest.approx(0.001)
    with pytest.raises(ZeroInput):
        reduction_ratio(10, 0)


def test_should_push_compute_threshold():
    assert should_push_compute(10000, 1000000, 0.5) is True
    assert should_push_compute(500, 500, 1.0) is False  # strict inequality
    assert should_push_compute(999999, 1000000, 0.5) is False


def test_composite_ndv():
    assert composite_ndv([ColumnStats(ndv_global=10000)], 1000000) == 10000
    two = [ColumnStats(ndv_global=100), ColumnStats(ndv_global=50)]
    assert composite_ndv(two, 1000) == 1000
    assert composite_ndv(two, 10**6) == 5000
    with pytest.raises(ConfigError):
        composite_ndv([], 10)


def test_composite_ndv_matches_exact_count_on_independent_columns():
    from aggpush import Catalog, Column, TableSchema, generate
    from aggpush.datagen import ColumnGen, GenSpec, TableGen

    table = TableSchema(
        "t",
        (
            Column("a", "int64", ColumnStats(ndv_global=100)),
            Column("b", "int64", ColumnStats(ndv_global=50)),
        ),
        row_count=100000,
    )
    catalog = Catalog((table,))
    datasets, _ = generate(GenSpec(seed=11, tables={"t": TableGen()}), catalog)
    pairs = {(row[0], row[1]) for row in datasets["t"].rows}
    assert len(pairs) == composite_ndv(
        [c.stats for c in table.columns], table.row_count
    )


@settings(max_examples=150)
@given(
    ndv=st.integers(min_value=0, max_value=10**9),
    batch=st.integers(min_value=0, max_value=10**7),
)
def test_batch_ndv_bounds(ndv, batch):
    value = batch_ndv(ndv, batch)
    assert 0.0 <= value <= min(batch, ndv) + 1e-6


@settings(max_examples=100)
@given(
    ndv=st.integers(min_value=1, max_value=10**8),
    b1=st.integers(min_value=0, max_value=10**6),
    b2=st.integers(min_value=0, max_value=10**6),
)
def test_batch_ndv_monotone_in_batch_size(ndv, b1, b2):
    lo, hi = sorted((b1, b2))
    assert batch_ndv(ndv, lo) <= batch_ndv(ndv, hi) + 1e-9


@settings(max_examples=100)
@given(
    n1=st.integers(min_value=0, max_value=10**8),
    n2=st.integers(min_value=0, max_value=10**8),
    batch=st.integers(min_value=1, max_value=10**6),
)
def test_batch_ndv_monotone_in_ndv(n1, n2, batch):
    lo, hi = sorted((n1, n2))
    assert batch_ndv(lo, batch) <= batch_ndv(hi, batch) + 1e-9


def test_estimates_reproduce_reference_scenario(product_config):
    cfg = product_config
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)

    pa = space.alternative(2)
    compute = next(n for n in pa.root.walk() if n.kind is NodeKind.COMPUTE)
    merge = next(n for n in pa.root.walk() if n.kind is NodeKind.MERGE)
    join = next(n for n in pa.root.walk() if n.kind is NodeKind.JOIN)
    assert compute.cost.rows == 100_000
    assert compute.cost.bytes == 2_000_000
    assert merge.cost.rows == 10_000
    assert join.cost.rows == 10_000
    assert join.cost.bytes == 1_200_000

    baseline = space.alternative(1)
    join0 = next(n for n in baseline.root.walk() if n.kind is NodeKind.JOIN)
    assert join0.cost.rows == 1_000_000
    assert join0.cost.bytes == 170_000_000


def test_single_node_single_batch_compute_cap(product_config):
    from dataclasses import replace

    cfg = product_config
    params = replace(cfg.params, node_count=1)
    space = enumerate_and_choose(cfg.query, cfg.catalog, params)
    compute = next(n for n in space.alternative(3).root.walk() if n.kind is NodeKind.COMPUTE and n.pushed)
    assert compute.cost.rows == 10_000  # cap binds at exactly the distinct count

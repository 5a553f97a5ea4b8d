"""Single-node brute-force reference evaluation.

Deliberately shares no operator code with the simulator: the join is a plain
nested scan (outer loop over dimension rows, an equality scan of the fact key
column per dimension row) and aggregation is one dict pass with AVG computed
directly as an exact rational, not via the sum/count rewrite.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .data import Dataset, ResultTable, sort_rows
from .errors import TypeMismatch
from .plan import AggFunc, QuerySpec, final_key_names


def _require_int(value, call_display: str):
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeMismatch(f"{call_display} expects int64 input, got {value!r}")
    return value


def reference_eval(spec: QuerySpec, fact_rows: Dataset, dim_rows: Dataset) -> ResultTable:
    key_names = final_key_names(spec.grouping)
    columns = key_names + tuple(call.output_name for call in spec.aggregates)
    key_count = len(spec.grouping)
    if not fact_rows.rows or not dim_rows.rows:
        return ResultTable(columns, (), key_count)

    fact_key_idx = fact_rows.column_index(spec.join.fact_column.column)
    dim_key_idx = dim_rows.column_index(spec.join.dim_column.column)
    fact_keys = np.asarray([row[fact_key_idx] for row in fact_rows.rows])

    group_access = []
    for ref in spec.grouping:
        if ref.table == spec.fact:
            group_access.append(("fact", fact_rows.column_index(ref.column)))
        else:
            group_access.append(("dim", dim_rows.column_index(ref.column)))
    agg_inputs = [
        fact_rows.column_index(call.input.column) if call.input is not None else None
        for call in spec.aggregates
    ]

    groups: dict[tuple, list] = {}
    for dim_row in dim_rows.rows:
        matches = np.nonzero(fact_keys == dim_row[dim_key_idx])[0]
        for fi in matches:
            fact_row = fact_rows.rows[fi]
            key = tuple(
                fact_row[idx] if side == "fact" else dim_row[idx]
                for side, idx in group_access
            )
            state = groups.get(key)
            if state is None:
                state = [None] * len(spec.aggregates)
                groups[key] = state
            for slot, (call, idx) in enumerate(zip(spec.aggregates, agg_inputs)):
                func = call.function
                if func is AggFunc.COUNT:
                    state[slot] = (state[slot] or 0) + 1
                    continue
                value = _require_int(fact_row[idx], call.display())
                if func is AggFunc.AVG:
                    if state[slot] is None:
                        state[slot] = [0, 0]
                    state[slot][0] += value
                    state[slot][1] += 1
                elif state[slot] is None:
                    state[slot] = value
                elif func is AggFunc.SUM:
                    state[slot] += value
                elif func is AggFunc.MIN:
                    state[slot] = min(state[slot], value)
                elif func is AggFunc.MAX:
                    state[slot] = max(state[slot], value)

    rows = []
    for key, state in groups.items():
        finals = tuple(
            Fraction(s[0], s[1]) if call.function is AggFunc.AVG else s
            for call, s in zip(spec.aggregates, state)
        )
        rows.append(key + finals)
    return ResultTable(columns, tuple(sort_rows(rows, key_count)), key_count)

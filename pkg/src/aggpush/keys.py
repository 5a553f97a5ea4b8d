"""Column equivalence, functional dependencies, and grouping/join key analysis.

An equijoin predicate makes its two columns interchangeable in the grouping
set. When the join lands on a declared primary key, that key functionally
determines every other column of its table, so dimension-side grouping
columns can be dropped from the pushed grouping set and recovered through the
join itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .catalog import Catalog, ColumnRef, resolve_column
from .errors import UnpushableGrouping
from .plan import QuerySpec


class KeyRelation(enum.Enum):
    EQUAL = "EQUAL"
    J_SUBSET_G = "J_SUBSET_G"
    G_SUBSET_J = "G_SUBSET_J"
    DISJOINT = "DISJOINT"
    PARTIAL_OVERLAP = "PARTIAL_OVERLAP"


def classify_relation(grouping: frozenset, join_keys: frozenset) -> KeyRelation:
    if grouping == join_keys:
        return KeyRelation.EQUAL
    if join_keys <= grouping:
        return KeyRelation.J_SUBSET_G
    if grouping <= join_keys:
        return KeyRelation.G_SUBSET_J
    if grouping & join_keys:
        return KeyRelation.PARTIAL_OVERLAP
    return KeyRelation.DISJOINT


@dataclass(frozen=True)
class EquivalenceClasses:
    """Partition of column references induced by equijoin predicates."""

    classes: tuple[frozenset[ColumnRef], ...]

    def class_of(self, ref: ColumnRef) -> frozenset[ColumnRef]:
        for cls in self.classes:
            if ref in cls:
                return cls
        return frozenset((ref,))

    def equivalent(self, a: ColumnRef, b: ColumnRef) -> bool:
        return a == b or b in self.class_of(a)


def build_equivalence(spec: QuerySpec) -> EquivalenceClasses:
    """One nontrivial class joins the two predicate columns; every other
    column stays a singleton (implicitly)."""
    return EquivalenceClasses((frozenset((spec.join.fact_column, spec.join.dim_column)),))


@dataclass(frozen=True)
class KeyAnalysis:
    grouping: tuple[ColumnRef, ...]
    substituted: tuple[ColumnRef, ...]  # fact-side grouping after substitution
    recovered: tuple[ColumnRef, ...]  # dim columns recovered through the join
    join_key: ColumnRef  # fact side
    pushed_grouping: tuple[ColumnRef, ...]
    relation: KeyRelation
    fk_pk: bool


def substitute_to_fact(
    spec: QuerySpec, eq: EquivalenceClasses, catalog: Catalog
) -> KeyAnalysis:
    """Move the grouping set to the fact side and classify it against the
    join key.

    Grouping columns equivalent to a fact column substitute directly. A
    dimension column that is not the join key needs the key -> column
    dependency of a declared FK-PK join; without it the grouping set cannot
    travel and fact-side pushdown is unavailable.
    """
    fact_key = spec.join.fact_column
    fk_pk = catalog.fk_between(spec.join.fact_column, spec.join.dim_column) is not None

    substituted: list[ColumnRef] = []
    recovered: list[ColumnRef] = []
    for ref in spec.grouping:
        resolve_column(catalog, ref)
        if ref.table == spec.fact:
            target = ref
        elif eq.equivalent(ref, fact_key):
            target = fact_key
        elif fk_pk:
            # Determined by the dimension key; recover it after the join.
            if ref not in recovered:
                recovered.append(ref)
            continue
        else:
            raise UnpushableGrouping(
                f"grouping column {ref} lives on the dimension side and the join "
                f"is not a declared FK-PK join"
            )
        if target not in substituted:
            substituted.append(target)

    pushed = list(substituted)
    if fact_key not in pushed:
        pushed.append(fact_key)

    relation = classify_relation(frozenset(substituted), frozenset((fact_key,)))
    return KeyAnalysis(
        grouping=spec.grouping,
        substituted=tuple(substituted),
        recovered=tuple(recovered),
        join_key=fact_key,
        pushed_grouping=tuple(pushed),
        relation=relation,
        fk_pk=fk_pk,
    )


def can_eliminate_top(analysis: KeyAnalysis, fk_pk: bool) -> bool:
    """True iff the join key is contained in the grouping key and the join is
    FK-PK: the pushed aggregate already produces the final groups and the
    join cannot duplicate them."""
    return fk_pk and analysis.relation in (KeyRelation.EQUAL, KeyRelation.J_SUBSET_G)


def analyze(spec: QuerySpec, catalog: Catalog) -> KeyAnalysis:
    return substitute_to_fact(spec, build_equivalence(spec), catalog)

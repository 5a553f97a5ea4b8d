"""Decision-tree text rendering and human-readable number formatting.

Each alternative renders as a numbered block: the marker token is ``N.`` or
``N>`` (``>`` marks the chosen path), followed by two spaces of indentation
per tree depth. Line suffixes show output rows and memory. The top aggregate
collapses to a single AGG line; a pushed aggregate renders its full
COMPUTE/DISTRIBUTE/MERGE chain. PROJECT and join plumbing (EXCHANGE,
BROADCAST) are omitted.
"""

from __future__ import annotations

from .errors import MalformedPlan
from .plan import CostAnnotation, NodeKind, PhysicalNode

_HIDDEN = (NodeKind.PROJECT, NodeKind.EXCHANGE, NodeKind.BROADCAST)
_ROWS_FIELD = 8
_BYTES_FIELD = 8


def _strip_decimal(text: str) -> str:
    return text[:-2] if text.endswith(".0") else text


def humanize_rows(count: int) -> str:
    if count < 1000:
        return str(count)
    if count < 1_000_000:
        return _strip_decimal(f"{count / 1e3:.1f}") + "K"
    return _strip_decimal(f"{count / 1e6:.1f}") + "M"


def humanize_bytes(count: int) -> str:
    if count < 1000:
        return str(count)
    if count < 1_000_000:
        return _strip_decimal(f"{count / 1e3:.1f}") + "KB"
    if count < 1_000_000_000:
        return _strip_decimal(f"{count / 1e6:.1f}") + "MB"
    return _strip_decimal(f"{count / 1e9:.1f}") + "GB"


def format_human(value: int, unit: str = "rows") -> str:
    if value < 0:
        raise ValueError("counts cannot be negative")
    return humanize_bytes(value) if unit == "bytes" else humanize_rows(value)


def _base(name: str) -> str:
    return name.split(".")[-1]


def _agg_label(node: PhysicalNode) -> str:
    parts = [_base(k) for k in node.keys]
    parts += [agg.display or agg.function.value for agg in node.aggregates]
    return f"AGG({', '.join(parts)})"


def _node_label(node: PhysicalNode) -> str:
    kind = node.kind
    if kind is NodeKind.SCAN:
        return f"SCAN({node.table})"
    if kind is NodeKind.JOIN:
        return "JOIN"
    if kind in (NodeKind.COMPUTE, NodeKind.DISTRIBUTE, NodeKind.MERGE):
        return f"{kind.value}({', '.join(_base(k) for k in node.keys)})"
    raise MalformedPlan(f"no render label for {kind.value}")


def _visible_lines(alt) -> list[tuple[int, str, CostAnnotation]]:
    collected: list[tuple[int, str, CostAnnotation]] = []

    def walk(node: PhysicalNode, depth: int) -> None:
        if node.cost is None:
            raise MalformedPlan("render needs a cost-annotated plan")
        if node.kind in _HIDDEN:
            for child in node.children:
                walk(child, depth)
            return
        if node.kind is NodeKind.MERGE and node.collapse_agg:
            collected.append((depth, _agg_label(node), node.cost))
            compute = node.children[0].children[0]
            for child in compute.children:
                walk(child, depth + 1)
            return
        collected.append((depth, _node_label(node), node.cost))
        for child in node.children:
            walk(child, depth + 1)

    walk(alt.root, 1)
    summary = (0, alt.label(), collected[0][2])
    return [summary] + collected


def render_decision_tree(space, units: str = "human") -> str:
    """Render every alternative in index order with the chosen one marked."""
    entries: list[tuple[str, str, str]] = []  # (prefix, rows text, bytes text)
    for alt in space.alternatives:
        marker = f"{alt.index}{'>' if alt.index == space.chosen_index else '.'}"
        for depth, label, cost in _visible_lines(alt):
            prefix = f"{marker} {'  ' * depth}{label}"
            if units == "human":
                rows_text, bytes_text = humanize_rows(cost.rows), humanize_bytes(cost.bytes)
            else:
                rows_text, bytes_text = str(cost.rows), str(cost.bytes)
            entries.append((prefix, rows_text, bytes_text))

    label_width = max(len(prefix) for prefix in (e[0] for e in entries))
    rows_width = max(_ROWS_FIELD, max(len(e[1]) for e in entries))
    bytes_width = max(_BYTES_FIELD, max(len(e[2]) for e in entries))
    lines = [
        f"{prefix.ljust(label_width)}{rows.rjust(rows_width)} rows{size.rjust(bytes_width)}"
        for prefix, rows, size in entries
    ]
    return "\n".join(lines) + "\n"

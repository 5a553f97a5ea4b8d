"""Command-line driver: generate data, render plan spaces, execute and verify
strategies, and inspect the estimation model.

Exit codes: 0 success, 1 usage or configuration error, 2 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .catalog import ColumnRef, resolve_column
from .config import RunConfig, load_config
from .cost import batch_ndv, composite_ndv, reduction_ratio, should_push_compute
from .data import dump_dataset
from .datagen import generate
from .errors import AggPushError, ConfigError, UnpushableGrouping
from .executor import ExecutionMetrics, execute
from .keys import analyze
from .oracle import reference_eval
from .plan import NodeKind, PlanAlternative, count_broadcasts
from .planner import PlanSpace, enumerate_and_choose
from .render import render_decision_tree

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ORACLE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1 here
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="aggpush", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to the JSON config document")
        p.add_argument("--seed", type=int, default=None, help="override the generation seed")
        p.add_argument("--nodes", type=int, default=None, help="override simulated node count")
        p.add_argument("--batch", type=int, default=None, help="override batch size B")
        p.add_argument("--theta", type=float, default=None, help="override the push threshold")
        p.add_argument("--flush", choices=["partition", "batch"], default=None)
        p.add_argument(
            "--broadcast-threshold", type=int, default=None, help="broadcast size cutoff in bytes"
        )

    p_gen = sub.add_parser("gen", help="generate datasets and a realized-stats sidecar")
    common(p_gen)
    p_gen.add_argument("out_dir", help="directory for dataset files")

    p_plan = sub.add_parser("plan", help="enumerate strategies and print the decision tree")
    common(p_plan)

    p_run = sub.add_parser("run", help="execute strategies and verify them against the oracle")
    common(p_run)
    p_run.add_argument("--strategy", default="chosen", choices=["chosen", "all", "1", "2", "3"])
    p_run.add_argument("--report", default=None, help="write a JSON run report to this path")

    p_est = sub.add_parser("estimate", help="print the estimation model's view of the query")
    common(p_est)
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    params = cfg.params
    if args.nodes is not None:
        params = replace(params, node_count=args.nodes)
    if args.batch is not None:
        params = replace(params, batch_size=max(1, args.batch))
    if args.theta is not None:
        params = replace(params, theta=args.theta)
    if args.flush is not None:
        params = replace(params, flush=args.flush)
    if args.broadcast_threshold is not None:
        params = replace(params, broadcast_threshold_bytes=args.broadcast_threshold)
    genspec = cfg.genspec
    if args.seed is not None:
        genspec = replace(genspec, seed=args.seed)
    return RunConfig(cfg.catalog, cfg.query, params, genspec)


def cmd_plan(cfg: RunConfig) -> int:
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    print(render_decision_tree(space), end="")
    for note in space.notes:
        print(f"note: {note}")
    chosen = space.chosen
    print(
        f"chosen: alternative {chosen.index} ({chosen.label()}); "
        f"estimated shuffles: {chosen.shuffle_count}; "
        f"broadcasts: {count_broadcasts(chosen.root)}"
    )
    return EXIT_OK


def cmd_gen(cfg: RunConfig, out_dir: str) -> int:
    datasets, realized = generate(cfg.genspec, cfg.catalog)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for table in cfg.catalog.tables:
        path = out / f"{table.name}.csv"
        dump_dataset(datasets[table.name], path)
        print(f"wrote {path} ({len(datasets[table.name])} rows)")
    sidecar = {
        name: {
            col: {
                "ndv": stats.ndv_global,
                "sorted": stats.sorted,
                "min": stats.min_value,
                "max": stats.max_value,
            }
            for col, stats in per_col.items()
        }
        for name, per_col in realized.items()
    }
    stats_path = out / "realized_stats.json"
    stats_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {stats_path}")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig, requested_batch: int | None) -> int:
    catalog, query, params = cfg.catalog, cfg.query, cfg.params
    fact_rows = catalog.table(query.fact).row_count
    try:
        analysis = analyze(query, catalog)
    except UnpushableGrouping as exc:
        print(f"note: pushdown unavailable: {exc}")
        analysis = None

    effective_batch = params.batch_size if requested_batch is None else requested_batch
    if analysis is not None and fact_rows > 0:
        stats = [resolve_column(catalog, ref)[1] for ref in analysis.pushed_grouping]
        ndv = composite_ndv(stats, fact_rows)
        sorted_keys = any(s.sorted for s in stats)
        pushed = ", ".join(ref.column for ref in analysis.pushed_grouping)
        print(f"pushed grouping keys:      {pushed}")
        print(f"composite ndv:             {ndv}")
        print(f"reduction ratio:           {reduction_ratio(ndv, fact_rows):.6f}")
        verdict = should_push_compute(ndv, fact_rows, params.theta)
        print(f"push compute (theta={params.theta:.2f}): {'yes' if verdict else 'no'}")
        if effective_batch == 0:
            print("batch ndv (B=0):           0  (warning: empty batches reduce nothing)")
        else:
            value = batch_ndv(ndv, effective_batch, sorted_keys)
            suffix = "  (sorted keys: no reduction expected)" if sorted_keys else ""
            print(f"batch ndv (B={effective_batch}):".ljust(27) + f"{value:.5f}{suffix}")
    elif fact_rows == 0:
        print("fact table is empty; reduction ratio undefined")

    datasets, realized = generate(cfg.genspec, catalog)
    del datasets
    print("declared vs exact ndv:")
    for table in catalog.tables:
        for col in table.columns:
            exact = realized[table.name][col.name].ndv_global
            delta = exact - col.stats.ndv_global
            print(
                f"  {table.name}.{col.name}: declared {col.stats.ndv_global}, "
                f"exact {exact} (delta {delta:+d})"
            )
    return EXIT_OK


def _select_alternatives(space: PlanSpace, strategy: str) -> list[PlanAlternative]:
    if strategy == "chosen":
        return [space.chosen]
    if strategy == "all":
        return list(space.alternatives)
    index = int(strategy)
    try:
        return [space.alternative(index)]
    except KeyError:
        raise ConfigError(f"alternative {index} is not available for this query") from None


def _estimate_dict(alt: PlanAlternative) -> dict:
    return asdict(alt.estimate)


def _metrics_dict(metrics: ExecutionMetrics) -> dict:
    return {
        "operator_rows": dict(metrics.operator_rows),
        "shuffle_events": [asdict(e) for e in metrics.shuffle_events],
        "broadcast_events": [asdict(e) for e in metrics.broadcast_events],
        "total_shuffles": metrics.total_shuffles,
        "shuffled_rows": metrics.shuffled_rows,
        "shuffled_bytes": metrics.shuffled_bytes,
    }


_REPORT_KINDS = (NodeKind.COMPUTE, NodeKind.DISTRIBUTE, NodeKind.MERGE, NodeKind.JOIN)


def _print_strategy(alt: PlanAlternative, metrics: ExecutionMetrics, match: bool, digest: str):
    est = alt.estimate
    print(f"== alternative {alt.index}: {alt.label()} ==")
    print(f"oracle match: {'yes' if match else 'NO'}")
    print(f"result digest: {digest}")
    print(
        f"estimated: rows={est.rows} shuffled_rows={est.shuffled_rows} "
        f"shuffled_bytes={est.shuffled_bytes} shuffles={est.shuffle_count}"
    )
    print(
        f"measured:  shuffled_rows={metrics.shuffled_rows} "
        f"shuffled_bytes={metrics.shuffled_bytes} shuffles={metrics.total_shuffles}"
    )
    print("operator rows (estimated vs measured):")
    for node in alt.root.walk():
        if node.kind in _REPORT_KINDS:
            measured = metrics.operator_rows.get(node.nid, 0)
            print(f"  {node.nid}: {node.cost.rows} vs {measured}")
    for i, event in enumerate(metrics.shuffle_events, 1):
        print(f"  shuffle #{i} {event.label}: {event.rows} rows, {event.bytes} bytes")
    for i, event in enumerate(metrics.broadcast_events, 1):
        print(f"  broadcast #{i} {event.label}: {event.rows} rows, {event.bytes} bytes")


def cmd_run(cfg: RunConfig, strategy: str, report_path: str | None) -> int:
    datasets, _ = generate(cfg.genspec, cfg.catalog)
    space = enumerate_and_choose(cfg.query, cfg.catalog, cfg.params)
    selected = _select_alternatives(space, strategy)
    oracle_table = reference_eval(cfg.query, datasets[cfg.query.fact], datasets[cfg.query.dim])

    report = {
        "seed": cfg.genspec.seed,
        "chosen_index": space.chosen_index,
        "chosen_strategy": space.chosen.strategy.value,
        "strategies": {},
        "render": render_decision_tree(space),
    }
    mismatched = []
    for alt in selected:
        result, metrics = execute(alt.root, cfg.catalog, datasets, cfg.params)
        match = result.columns == oracle_table.columns and result.same_rows(oracle_table)
        if not match:
            mismatched.append(alt.index)
        _print_strategy(alt, metrics, match, result.digest())
        report["strategies"][str(alt.index)] = {
            "strategy": alt.strategy.value,
            "top_aggregate_eliminated": alt.top_aggregate_eliminated,
            "estimate": _estimate_dict(alt),
            "measured": _metrics_dict(metrics),
            "result_digest": result.digest(),
            "oracle_match": match,
        }

    if report_path:
        Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        print(f"report written to {report_path}")
    if mismatched:
        print(f"ORACLE MISMATCH in alternative(s) {mismatched}", file=sys.stderr)
        return EXIT_ORACLE
    print("all executed strategies match the oracle")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "gen":
            return cmd_gen(cfg, args.out_dir)
        if args.command == "run":
            return cmd_run(cfg, args.strategy, args.report)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.batch)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AggPushError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Argparse command dispatch.

Subcommands: retro (stepwise learning along a study sequence), prospect
(expected-learning sweep), compare (metric table for one prior against
several posteriors), and replicate-paper (the self-checking harness).
Human-readable tables go to standard output; machine CSV/JSON goes to
--out. Exit codes: 0 success, 1 validation or replication failure,
2 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from ..errors import NumericError, ScenarioError
from ..metrics import LearningReport, learning_report
from ..prospective import CurvePoint, PioneerSetup, curve_points_to_csv, weight_sweep
from ..updating import (
    DEFAULT_GRID_NODES,
    SamplingModel,
    sequential_update,
    update_conjugate,
    update_grid,
    update_mixture,
)
from ..distributions import MixtureDist, NormalDist
from .replication import ReplicationResult, run_replicate_paper
from .scenarios import Scenario, load_scenario

__all__ = ["build_parser", "main", "run_retrospective", "run_prospective", "run_compare"]

_METRIC_COLUMNS = {
    "w2": ("w2", "mean_shift_sq", "sd_shift_sq", "normalized_w2", "decomposition_exact"),
    "kl": ("kl_forward", "kl_reverse", "kl_sym"),
    "lindley": ("lindley",),
    "all": LearningReport.CSV_COLUMNS,
}


def _add_io_flags(sub: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    if scenario_required:
        sub.add_argument("--scenario", required=True, help="scenario JSON file")
    sub.add_argument("--out", help="write machine-readable output to this path")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="format for --out (default csv)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")


def _add_grid_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--grid-lo", type=float, default=None,
                     help="override the grid window lower edge")
    sub.add_argument("--grid-hi", type=float, default=None,
                     help="override the grid window upper edge")
    sub.add_argument("--grid-nodes", type=int, default=None,
                     help="override the grid node count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefshift",
        description="Quantify belief change between priors and posteriors "
                    "with the Wasserstein-2 learning metric.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    retro = sub.add_parser("retro", help="stepwise learning along a study sequence")
    _add_io_flags(retro)
    _add_grid_flags(retro)

    prospect = sub.add_parser("prospect", help="expected learning from future studies")
    _add_io_flags(prospect)
    prospect.add_argument("--replicates", type=int, default=None,
                          help="override the Monte Carlo replicate count")

    compare = sub.add_parser("compare", help="metric table for prior vs posteriors")
    _add_io_flags(compare)
    _add_grid_flags(compare)
    compare.add_argument("--metric", choices=("w2", "kl", "lindley", "all"),
                         default="all", help="which metric columns to emit")

    rep = sub.add_parser("replicate-paper", help="run every replication check")
    _add_io_flags(rep, scenario_required=False)
    rep.add_argument("--replicates", type=int, default=10_000,
                     help="Monte Carlo replicates per prospective cell")

    return parser


def _resolve_grid(scenario: Scenario, args) -> tuple[Optional[float], Optional[float], int]:
    lo = hi = None
    nodes = DEFAULT_GRID_NODES
    if scenario.grid is not None:
        lo, hi, nodes = scenario.grid.lo, scenario.grid.hi, scenario.grid.nodes
    if getattr(args, "grid_lo", None) is not None:
        lo = args.grid_lo
    if getattr(args, "grid_hi", None) is not None:
        hi = args.grid_hi
    if getattr(args, "grid_nodes", None) is not None:
        nodes = args.grid_nodes
    if (lo is None) != (hi is None):
        raise ScenarioError("grid: lo and hi must be given together")
    if lo is not None and not lo < hi:
        raise ScenarioError("grid: lo must be strictly below hi")
    if nodes < 2:
        raise ScenarioError("grid: nodes must be at least 2")
    return lo, hi, int(nodes)


def _print_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    print(line.rstrip())
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())


def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "true" if value else "false"
    return f"{value:.{digits}g}"


def _write_out(path: str, fmt: str, csv_text: str, json_obj) -> None:
    if fmt == "csv":
        content = csv_text
    else:
        content = json.dumps(json_obj, indent=2) + "\n"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(content)


def run_retrospective(scenario: Scenario,
                      lo: Optional[float] = None,
                      hi: Optional[float] = None,
                      nodes: int = DEFAULT_GRID_NODES) -> list[tuple[str, LearningReport]]:
    """Per-step learning reports plus the end-to-end (cumulative) report."""
    chain = sequential_update(scenario.prior, scenario.studies, lo, hi, nodes)
    rows: list[tuple[str, LearningReport]] = []
    current = scenario.prior
    for i, (_, post) in enumerate(chain.steps, start=1):
        rows.append((f"step_{i}", learning_report(current, post)))
        current = post
    rows.append(("cumulative", learning_report(scenario.prior, chain.final())))
    return rows


def run_prospective(scenario: Scenario,
                    replicates: Optional[int] = None,
                    seed: Optional[int] = None) -> list[CurvePoint]:
    """Weight/sample-size sweep using the scenario's prospective config."""
    cfg = scenario.prospective_config
    setup = PioneerSetup(cfg.consensus, cfg.pioneer, 0.0,
                         SamplingModel(cfg.sigma, cfg.ns[0]))
    return weight_sweep(
        setup, cfg.weights, cfg.ns,
        replicates=cfg.replicates if replicates is None else replicates,
        seed=scenario.seed if seed is None else seed,
    )


def run_compare(scenario: Scenario,
                lo: Optional[float] = None,
                hi: Optional[float] = None,
                nodes: int = DEFAULT_GRID_NODES) -> list[tuple[str, LearningReport]]:
    """One learning report per posterior spec (direct or via a study)."""
    rows: list[tuple[str, LearningReport]] = []
    for spec in scenario.posteriors:
        if spec.dist is not None:
            post = spec.dist
        elif isinstance(scenario.prior, NormalDist) and lo is None and hi is None:
            post = update_conjugate(scenario.prior, spec.study)
        elif isinstance(scenario.prior, MixtureDist) and lo is None and hi is None:
            post = update_mixture(scenario.prior, spec.study)
        else:
            post = update_grid(scenario.prior, spec.study, lo, hi, nodes)
        rows.append((spec.label, learning_report(scenario.prior, post)))
    return rows


def _report_csv(rows: list[tuple[str, LearningReport]],
                columns: Sequence[str], label_header: str) -> str:
    lines = [label_header + "," + ",".join(columns)]
    for label, report in rows:
        cells = [label]
        for name in columns:
            value = getattr(report, name)
            if value is None:
                cells.append("")
            elif isinstance(value, bool):
                cells.append("true" if value else "false")
            else:
                cells.append(repr(float(value)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _report_json(rows: list[tuple[str, LearningReport]],
                 columns: Sequence[str], label_header: str) -> list[dict]:
    return [{label_header: label, **{c: getattr(report, c) for c in columns}}
            for label, report in rows]


def _cmd_retro(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.kind != "retrospective":
        raise ScenarioError(f"kind: expected retrospective, got {scenario.kind}")
    lo, hi, nodes = _resolve_grid(scenario, args)
    rows = run_retrospective(scenario, lo, hi, nodes)
    columns = LearningReport.CSV_COLUMNS
    _print_table(
        ["step", "w2", "normalized_w2", "kl_sym", "lindley", "decomposition_exact"],
        [[label, _fmt(r.w2), _fmt(r.normalized_w2), _fmt(r.kl_sym),
          _fmt(r.lindley), _fmt(r.decomposition_exact)] for label, r in rows],
    )
    stepwise = [r.w2 for label, r in rows if label != "cumulative"]
    end_to_end = rows[-1][1].w2
    if sum(stepwise) >= end_to_end:
        print(f"note: stepwise W2 values sum to {sum(stepwise):.6g}, at or above the "
              f"end-to-end W2 {end_to_end:.6g}; learning along a path is not cumulative.")
    if args.out:
        _write_out(args.out, args.format,
                   _report_csv(rows, columns, "step"),
                   _report_json(rows, columns, "step"))
    return 0


def _cmd_prospect(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.kind != "prospective":
        raise ScenarioError(f"kind: expected prospective, got {scenario.kind}")
    points = run_prospective(scenario, replicates=args.replicates, seed=args.seed)
    _print_table(
        ["w", "n", "expected_learning", "mc_std_error"],
        [[_fmt(pt.w), str(pt.n), _fmt(pt.expected_learning), _fmt(pt.mc_std_error)]
         for pt in points],
    )
    if args.out:
        _write_out(args.out, args.format,
                   curve_points_to_csv(points),
                   [{"w": pt.w, "n": pt.n, "expected_learning": pt.expected_learning,
                     "mc_std_error": pt.mc_std_error} for pt in points])
    return 0


def _cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.kind != "compare":
        raise ScenarioError(f"kind: expected compare, got {scenario.kind}")
    lo, hi, nodes = _resolve_grid(scenario, args)
    rows = run_compare(scenario, lo, hi, nodes)
    columns = _METRIC_COLUMNS[args.metric]
    headers = ["posterior"] + list(columns)
    table_rows = []
    for label, report in rows:
        cells = [label]
        for name in columns:
            value = getattr(report, name)
            # Tables display |lindley|; the CSV/JSON keeps the signed value.
            if name == "lindley" and value is not None:
                value = abs(value)
            cells.append(_fmt(value))
        table_rows.append(cells)
    _print_table(headers, table_rows)
    if args.out:
        _write_out(args.out, args.format,
                   _report_csv(rows, columns, "posterior"),
                   _report_json(rows, columns, "posterior"))
    return 0


def _replication_csv(results: list[ReplicationResult]) -> str:
    lines = ["check_name,expected,actual,tolerance,passed"]
    for r in results:
        lines.append(f"{r.check_name},{r.expected!r},{r.actual!r},{r.tolerance!r},"
                     f"{'true' if r.passed else 'false'}")
    return "\n".join(lines) + "\n"


def _cmd_replicate_paper(args) -> int:
    seed = 0 if args.seed is None else args.seed
    results, notes = run_replicate_paper(seed=seed, replicates=args.replicates)
    _print_table(
        ["check", "expected", "actual", "tolerance", "status"],
        [[r.check_name, _fmt(r.expected, 8), _fmt(r.actual, 8), _fmt(r.tolerance, 3),
          "pass" if r.passed else "FAIL"] for r in results],
    )
    for note in notes:
        print(f"note: {note}")
    passed = sum(r.passed for r in results)
    print(f"result: {passed}/{len(results)} checks passed")
    if args.out:
        _write_out(args.out, args.format, _replication_csv(results), [
            {"check_name": r.check_name, "expected": r.expected, "actual": r.actual,
             "tolerance": r.tolerance, "passed": r.passed} for r in results
        ])
    return 0 if passed == len(results) else 1


_COMMANDS = {
    "retro": _cmd_retro,
    "prospect": _cmd_prospect,
    "compare": _cmd_compare,
    "replicate-paper": _cmd_replicate_paper,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

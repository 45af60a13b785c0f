"""Experiment runner and command-line entry point.

    copsslite run <config> [--out DIR] [--seeds N] [--verify] [--traces] [--jobs N]
    copsslite validate <config>
    copsslite pmf <dist> <param> <K>
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .config import (
    DEFAULT_CONFIG,
    ConfigError,
    ExperimentConfig,
    ParseError,
    ValidationError,
    Workload,
    load_config,
    parse_config,
)
from .metrics import REPORT_COLUMNS, MetricsReport, aggregate, summarize
from .simnet import Scenario, Simulator
from .traffic import make_catalog, make_distribution, pmf_table

RUN_COLUMNS = REPORT_COLUMNS + ("seed",)
DAT_COLUMNS = ("subscribers", "mean_ms", "median_ms", "p95_ms", "bytes", "frames", "delivery_ratio")

__all__ = [
    "ExperimentConfig", "ParseError", "ValidationError", "RunSpec", "SuiteResult",
    "load_config", "parse_config", "run_specs", "run_one", "run_suite", "main",
]


@dataclass(frozen=True)
class RunSpec:
    """One (mode, workload, subscriber set, seed) cell of a suite."""

    mode: str
    workload: Workload
    subscribers: tuple[int, ...]
    seed: int

    @property
    def cell(self) -> tuple:
        return (self.mode, self.workload.name, self.workload.param, len(self.subscribers))

    @property
    def tag(self) -> str:
        return f"{self.mode}_{self.workload.label}_n{len(self.subscribers)}_s{self.seed}"


def run_specs(config: ExperimentConfig) -> list[RunSpec]:
    """Suite cells in report order: mode, workload, subscriber count, seed."""
    return [RunSpec(mode, w, subs, seed)
            for mode in config.modes
            for w in config.workloads
            for subs in config.subscriber_sets
            for seed in config.seeds]


def scenario_for(config: ExperimentConfig, spec: RunSpec) -> Scenario:
    return Scenario(
        topology=config.topology,
        mode=spec.mode,
        publisher=config.publisher,
        subscribers=spec.subscribers,
        prefix=config.prefix,
        rp=config.rp,
        catalog=make_catalog(config.catalog_size, config.prefix),
        distribution=spec.workload.dist,
        publications=config.publications,
        publish_interval_ms=config.publish_interval_ms,
        publish_start_ms=config.publish_start_ms,
        poll_interval_ms=config.poll_interval_ms,
        poll_freshness_ms=config.poll_freshness_ms,
        sleep=config.sleep,
        controller=config.controller,
        buffer_capacity=config.buffer_capacity,
        horizon_ms=config.horizon_ms,
    )


def run_one(config: ExperimentConfig, spec: RunSpec, trace_dir: Optional[Path] = None) -> MetricsReport:
    trace = Simulator(scenario_for(config, spec), spec.seed).run()
    if trace_dir is not None:
        with open(trace_dir / f"{spec.tag}.csv", "w", newline="") as fh:
            trace.write_csv(fh)
    return summarize(trace, spec.workload.name, spec.workload.param, config.include_sync_load)


def _run_star(args) -> MetricsReport:
    return run_one(*args)


@dataclass
class SuiteResult:
    runs: list[MetricsReport]
    report: list[MetricsReport]


def _group(runs: list[MetricsReport]) -> list[MetricsReport]:
    cells: dict[tuple, list[MetricsReport]] = {}
    for r in runs:
        cells.setdefault((r.mode, r.dist, r.param, r.subscribers), []).append(r)
    return [aggregate(rs) for rs in cells.values()]


def _write_rows(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def report_csv(reports: list[MetricsReport]) -> str:
    buf = io.StringIO()
    _write_rows(buf, REPORT_COLUMNS, (r.row() for r in reports))
    return buf.getvalue()


def runs_csv(runs: list[MetricsReport]) -> str:
    buf = io.StringIO()
    _write_rows(buf, RUN_COLUMNS, (r.row() + [str(r.seed)] for r in runs))
    return buf.getvalue()


def report_dat(reports: list[MetricsReport]) -> str:
    """Long format for gnuplot: one indexed block per (mode, dist, param)."""
    blocks: dict[tuple, list[MetricsReport]] = {}
    for r in reports:
        blocks.setdefault((r.mode, r.dist, r.param), []).append(r)
    out = []
    for (mode, dist, param), rs in blocks.items():
        label = dist if param is None else f"{dist}({param:g})"
        lines = [f"# {mode} {label}", "# " + " ".join(DAT_COLUMNS)]
        for r in rs:
            cells = r.row()
            lines.append(" ".join((cells[REPORT_COLUMNS.index(c)] or "nan") for c in DAT_COLUMNS))
        out.append("\n".join(lines))
    return "\n\n\n".join(out) + "\n" if out else ""


def _parse_float(text: str) -> Optional[float]:
    return float(text) if text else None


def read_runs(text: str) -> list[MetricsReport]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [MetricsReport(
        subscribers=int(r["subscribers"]), mode=r["mode"], dist=r["dist"],
        param=_parse_float(r["param"]),
        mean_ms=_parse_float(r["mean_ms"]), median_ms=_parse_float(r["median_ms"]),
        p95_ms=_parse_float(r["p95_ms"]),
        bytes=int(float(r["bytes"])), frames=int(float(r["frames"])),
        delivery_ratio=float(r["delivery_ratio"]), seed=int(r["seed"]),
    ) for r in rows]


class VerificationError(AssertionError):
    pass


def verify_reports(runs_text: str, report_text: str) -> None:
    """Recompute the aggregate report from per-seed rows and require an exact match."""
    expected = report_csv(_group(read_runs(runs_text)))
    if expected != report_text:
        raise VerificationError("aggregate report does not match per-seed rows")


def run_suite(config: ExperimentConfig, out: Optional[Path] = None, jobs: int = 1,
              verify: bool = False, traces: bool = False) -> SuiteResult:
    """Run every cell of the suite and write runs.csv, report.csv and report.dat to ``out``.

    If a run fails, rows finished so far are still written before the error propagates.
    """
    specs = run_specs(config)
    trace_dir = None
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        if traces:
            trace_dir = out / "traces"
            trace_dir.mkdir(exist_ok=True)

    runs: list[MetricsReport] = []
    try:
        work = ((config, s, trace_dir) for s in specs)
        if jobs > 1:
            # map() keeps submission order, so the merge is deterministic
            with ProcessPoolExecutor(jobs) as pool:
                for rep in pool.map(_run_star, work, chunksize=4):
                    runs.append(rep)
        else:
            for args in work:
                runs.append(_run_star(args))
    finally:
        report = _group(runs)
        if out is not None:
            (out / "runs.csv").write_text(runs_csv(runs))
            (out / "report.csv").write_text(report_csv(report))
            (out / "report.dat").write_text(report_dat(report))
    if verify:
        verify_reports(runs_csv(runs), report_csv(report))
    return SuiteResult(runs, report)


# -- command line --------------------------------------------------------------------

def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ValidationError([("seeds", "--seeds must be >= 1")])
        config = replace(config, seeds=tuple(range(1, args.seeds + 1)))
    out = Path(os.environ.get("COPSSLITE_OUT") or args.out)
    result = run_suite(config, out, jobs=args.jobs, verify=args.verify, traces=args.traces)
    print(f"{len(result.runs)} runs, {len(result.report)} report rows -> {out}")
    if args.verify:
        print("verify: aggregate rows match per-seed rows")
    return 0


def _cmd_validate(args) -> int:
    c = load_config(args.config)
    print(f"ok: {len(c.topology.nodes)} nodes, {len(c.topology.links)} links, "
          f"modes={','.join(c.modes)}, workloads={len(c.workloads)}, "
          f"subscriber sets={len(c.subscriber_sets)}, seeds={len(c.seeds)}, "
          f"runs={len(run_specs(c))}")
    return 0


def _cmd_pmf(args) -> int:
    param = None if args.param.lower() in ("-", "none") else float(args.param)
    if args.K < 1:
        raise ValidationError([("K", "must be >= 1")])
    try:
        dist = make_distribution(args.dist, param)
    except ValueError as e:
        raise ValidationError([("param" if args.dist.lower() in ("zipf", "geometric", "binomial")
                                else "dist", str(e))]) from e
    table = pmf_table(dist, args.K)
    print("k,pmf")
    for k, p in enumerate(table, 1):
        print(f"{k},{p:.12f}")
    print(f"# sum={math.fsum(table):.15f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="copsslite", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment suite")
    r.add_argument("config", nargs="?", default=str(DEFAULT_CONFIG))
    r.add_argument("--out", default="results", help="output directory (COPSSLITE_OUT overrides)")
    r.add_argument("--seeds", type=int, help="use seeds 1..N instead of the configured list")
    r.add_argument("--verify", action="store_true", help="recompute aggregates from per-seed rows")
    r.add_argument("--traces", action="store_true", help="also write one trace CSV per run")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="check a config file")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)

    m = sub.add_parser("pmf", help="print a popularity distribution over 1..K")
    m.add_argument("dist")
    m.add_argument("param", help="distribution parameter, '-' for uniform")
    m.add_argument("K", type=int)
    m.set_defaults(func=_cmd_pmf)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        for key, msg in e.errors:
            print(f"error: {key}: {msg}", file=sys.stderr)
        return 2
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

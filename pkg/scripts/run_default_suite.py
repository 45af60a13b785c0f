#!/usr/bin/env python3
"""Run the default experiment and print pub/sub against pull side by side.

    python3 scripts/run_default_suite.py --out results --jobs 4
"""

import argparse
from pathlib import Path

from copsslite.cli import run_suite
from copsslite.config import DEFAULT_CONFIG, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(DEFAULT_CONFIG))
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    config = load_config(args.config)
    result = run_suite(config, Path(args.out), jobs=args.jobs, verify=True)
    cells = {(r.mode, r.dist, r.param, r.subscribers): r for r in result.report}

    print(f"{'workload':<14}{'n':>3}{'pubsub ms':>11}{'pull ms':>10}{'pubsub B':>11}{'pull B':>10}")
    for w in config.workloads:
        for n in range(1, len(config.subscriber_sets) + 1):
            ps, pl = cells[("pubsub", w.name, w.param, n)], cells[("pull", w.name, w.param, n)]
            print(f"{w.label:<14}{n:>3}{ps.mean_ms:>11.1f}{pl.mean_ms:>10.1f}{ps.bytes:>11.0f}{pl.bytes:>10.0f}")
    print(f"\n{len(result.runs)} runs written to {args.out}/")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""How the pull baseline trades latency for load as the poll interval changes.

Pub/sub is unaffected by the poll interval, so it is printed once as a reference.
"""

import argparse
from dataclasses import replace

from copsslite.cli import RunSpec, run_one
from copsslite.config import DEFAULT_CONFIG, load_config
from copsslite.metrics import aggregate


def cell(config, mode, subscribers):
    w = config.workloads[0]
    return aggregate([run_one(config, RunSpec(mode, w, subscribers, s)) for s in config.seeds])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subscribers", type=int, default=5, help="size of the subscriber set")
    ap.add_argument("--intervals", default="100 250 500 1000 2000 4000")
    args = ap.parse_args()

    config = load_config(DEFAULT_CONFIG)
    subs = config.subscriber_sets[args.subscribers - 1]
    base = cell(config, "pubsub", subs)
    print(f"pubsub: mean {base.mean_ms:.1f} ms, {base.bytes:.0f} B")
    print(f"{'poll ms':>8}{'mean ms':>10}{'p95 ms':>10}{'bytes':>10}{'delivered':>11}")
    for iv in map(float, args.intervals.split()):
        r = cell(replace(config, poll_interval_ms=iv), "pull", subs)
        print(f"{iv:>8.0f}{r.mean_ms:>10.1f}{r.p95_ms:>10.1f}{r.bytes:>10.0f}{r.delivery_ratio:>11.2f}")


if __name__ == "__main__":
    main()

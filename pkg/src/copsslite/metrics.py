"""Latency and aggregated network load computed from a simulation trace."""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .simnet import CONTROLLER_LINK, Trace

REPORT_COLUMNS = ("subscribers", "mode", "dist", "param", "mean_ms", "median_ms", "p95_ms",
                  "bytes", "frames", "delivery_ratio")


class NoDeliveries(ValueError):
    pass


def percentile(values: list[float], q: float) -> float:
    """Linear-interpolation percentile (same convention as numpy's default)."""
    xs = sorted(values)
    if not xs:
        raise ValueError("percentile of an empty sequence")
    pos = (len(xs) - 1) * q / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean: float
    median: float
    p95: float


@dataclass(frozen=True)
class Load:
    bytes: int
    frames: int


def publication_times(trace: Trace) -> dict[int, float]:
    times = {}
    for r in trace.records:
        if r.direction == "app" and r.ptype == "Publish" and r.seq is not None:
            times.setdefault(r.seq, r.time)
    return times


def first_arrivals(trace: Trace, mode: Optional[str] = None) -> dict[tuple[int, int], float]:
    """(subscriber, seq) -> time the subscriber's application first obtained that publication."""
    mode = mode or trace.meta.get("mode", "pubsub")
    ptype = "Publish" if mode == "pubsub" else "Data"
    subs = set(trace.meta.get("subscribers", ()))
    published = publication_times(trace)
    first: dict[tuple[int, int], float] = {}
    for r in trace.records:
        if (r.direction == "deliver" and r.ptype == ptype and r.seq in published
                and (not subs or r.node in subs)):
            first.setdefault((r.node, r.seq), r.time)
    return first


def latencies(trace: Trace, mode: Optional[str] = None) -> list[float]:
    published = publication_times(trace)
    return [t - published[seq] for (_, seq), t in first_arrivals(trace, mode).items()]


def latency(trace: Trace, mode: Optional[str] = None) -> LatencyStats:
    """Publication-to-application latency over delivered items.

    Pull mode measures from the content's publication, so polling wait is included.
    """
    xs = latencies(trace, mode)
    if not xs:
        raise NoDeliveries("no publication reached a subscriber")
    return LatencyStats(len(xs), statistics.fmean(xs), statistics.median(xs), percentile(xs, 95))


def network_load(trace: Trace, include_sync: bool = False) -> Load:
    total = frames = 0
    for r in trace.records:
        if r.direction == "tx" or (include_sync and r.direction == "sync" and r.link == CONTROLLER_LINK):
            total += r.size
            frames += 1
    return Load(total, frames)


def delivery_ratio(trace: Trace, mode: Optional[str] = None) -> float:
    subs = set(trace.meta.get("subscribers", ()))
    pubs = publication_times(trace)
    if not subs or not pubs:
        return 0.0
    return len(first_arrivals(trace, mode)) / (len(subs) * len(pubs))


@dataclass(frozen=True)
class MetricsReport:
    subscribers: int
    mode: str
    dist: str
    param: Optional[float]
    mean_ms: Optional[float]
    median_ms: Optional[float]
    p95_ms: Optional[float]
    bytes: float
    frames: float
    delivery_ratio: float
    seed: Optional[int] = None

    def row(self) -> list[str]:
        return [_fmt(c, getattr(self, c)) for c in REPORT_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)


def _fmt(column: str, v) -> str:
    if v is None:
        return ""
    if column == "param":
        return f"{v:g}"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _r6(v: Optional[float]) -> Optional[float]:
    # reports carry the precision they are written with, so re-reading a CSV is lossless
    return None if v is None else round(v, 6)


def summarize(trace: Trace, dist: str = "", param: Optional[float] = None,
              include_sync: bool = False) -> MetricsReport:
    mode = trace.meta.get("mode", "pubsub")
    try:
        lat: Optional[LatencyStats] = latency(trace, mode)
    except NoDeliveries:
        lat = None
    load = network_load(trace, include_sync)
    return MetricsReport(
        subscribers=len(trace.meta.get("subscribers", ())),
        mode=mode,
        dist=dist,
        param=param,
        mean_ms=_r6(lat.mean) if lat else None,
        median_ms=_r6(lat.median) if lat else None,
        p95_ms=_r6(lat.p95) if lat else None,
        bytes=load.bytes,
        frames=load.frames,
        delivery_ratio=_r6(delivery_ratio(trace, mode)),
        seed=trace.meta.get("seed"),
    )


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    xs = [v for v in values if v is not None]
    return _r6(math.fsum(xs) / len(xs)) if xs else None


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Average per-seed reports of one (mode, dist, param, subscribers) cell."""
    first = reports[0]
    key = (first.mode, first.dist, first.param, first.subscribers)
    if any((r.mode, r.dist, r.param, r.subscribers) != key for r in reports):
        raise ValueError("can only aggregate reports of the same scenario")
    return MetricsReport(
        subscribers=first.subscribers, mode=first.mode, dist=first.dist, param=first.param,
        mean_ms=_mean(r.mean_ms for r in reports),
        median_ms=_mean(r.median_ms for r in reports),
        p95_ms=_mean(r.p95_ms for r in reports),
        bytes=_mean(r.bytes for r in reports),
        frames=_mean(r.frames for r in reports),
        delivery_ratio=_mean(r.delivery_ratio for r in reports),
    )

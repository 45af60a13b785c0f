"""Experiment configuration files: ``[section]`` headers with ``key = value`` lines.

Validation collects every problem it can find and reports them together,
each tagged with the offending key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .naming import MalformedName, Name, parse_name
from .routing import POLICIES, Link, RoutingError, RpAssignment, Topology, assign_rp
from .traffic import DIST_NAMES, Distribution, dist_param, make_distribution

DEFAULT_CONFIG = Path(__file__).with_name("configs") / "default.cfg"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{k}: {m}" for k, m in errors))

    @property
    def keys(self) -> list[str]:
        return [k for k, _ in self.errors]


@dataclass(frozen=True)
class Workload:
    label: str
    dist: Distribution
    name: str
    param: Optional[float]


@dataclass
class ExperimentConfig:
    topology: Topology
    rp: RpAssignment
    rp_policy: str
    workloads: tuple[Workload, ...]
    modes: tuple[str, ...]
    publisher: int
    subscriber_sets: tuple[tuple[int, ...], ...]
    seeds: tuple[int, ...]
    prefix: Name = field(default_factory=lambda: Name.of("iot"))
    catalog_size: int = 10
    publications: int = 100
    publish_interval_ms: float = 1000.0
    publish_start_ms: float = 1000.0
    poll_interval_ms: float = 1000.0
    poll_freshness_ms: float = 0.0
    horizon_ms: Optional[float] = None
    sleep: dict[int, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    controller: bool = False
    buffer_capacity: int = 32
    include_sync_load: bool = False


class _Collector:
    """Typed getters over a ConfigParser that record errors instead of raising."""

    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp
        self.errors: list[tuple[str, str]] = []

    def err(self, key: str, msg: str) -> None:
        self.errors.append((key, msg))

    def raw(self, section: str, key: str, default=None):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return default

    def num(self, section, key, default, cast=float, lo=None, lo_open=False):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            value = cast(text)
        except ValueError:
            self.err(key, f"{text!r} is not a valid {cast.__name__}")
            return default
        if isinstance(value, float) and not math.isfinite(value):
            self.err(key, "must be finite")
            return default
        if lo is not None and (value <= lo if lo_open else value < lo):
            self.err(key, f"must be {'>' if lo_open else '>='} {lo}")
            return default
        return value

    def flag(self, section, key, default: bool) -> bool:
        text = self.raw(section, key)
        if text is None:
            return default
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        self.err(key, f"{text!r} is not a boolean")
        return default

    def ints(self, section, key) -> list[int]:
        text = self.raw(section, key, "")
        out = []
        for tok in text.replace(",", " ").split():
            try:
                out.append(int(tok))
            except ValueError:
                self.err(key, f"{tok!r} is not an integer")
        return out


def _parse_topology(c: _Collector) -> Optional[Topology]:
    if not c.cp.has_section("topology"):
        c.err("topology", "section missing")
        return None
    links = []
    for lineno, line in enumerate(c.raw("topology", "links", "").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("-", " ").split()
        try:
            a, b = int(parts[0]), int(parts[1])
            delay = float(parts[2]) if len(parts) > 2 else c.num("topology", "delay_ms", 10.0)
            loss = float(parts[3]) if len(parts) > 3 else c.num("topology", "loss", 0.0)
            links.append(Link(a, b, delay, loss))
        except (ValueError, IndexError) as e:
            c.err("links", f"line {lineno} {line!r}: {e}")
    nodes = set(c.ints("topology", "nodes")) | {x for l in links for x in (l.a, l.b)}
    if not nodes:
        c.err("links", "topology has no nodes")
        return None
    try:
        topo = Topology(nodes, links)
    except RoutingError as e:
        c.err("links", str(e))
        return None
    if not topo.is_connected():
        c.err("links", "topology is not connected")
    return topo


def _parse_sweep(c: _Collector, text: str, n_nodes: int) -> Optional[list[int]]:
    text = text.strip()
    if text.startswith("sweep"):
        text = text[len("sweep"):].strip()
    if ".." not in text:
        return None
    lo_s, hi_s = text.split("..", 1)
    try:
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        c.err("subscribers", f"bad sweep bounds {text!r}")
        return []
    if not 1 <= lo <= hi <= n_nodes:
        c.err("subscribers", f"sweep {lo}..{hi} outside 1..{n_nodes}")
        return []
    return list(range(lo, hi + 1))


def _parse_sleep(c: _Collector, nodes: set[int]) -> dict[int, tuple[tuple[float, float], ...]]:
    out = {}
    if not c.cp.has_section("sleep"):
        return out
    for key, text in c.cp.items("sleep"):
        try:
            node = int(key)
        except ValueError:
            c.err(f"sleep.{key}", "node id must be an integer")
            continue
        if node not in nodes:
            c.err(f"sleep.{key}", f"node {node} not in topology")
            continue
        spans = []
        try:
            for tok in text.replace(",", " ").split():
                a, b = tok.split("-")
                spans.append((float(a), float(b)))
        except ValueError:
            c.err(f"sleep.{key}", f"expected 'start-end' spans, got {text!r}")
            continue
        spans.sort()
        last = -1.0
        for a, b in spans:
            if not (a >= 0 and b > a and a > last):
                c.err(f"sleep.{key}", "spans must be non-negative, non-empty and disjoint")
                break
            last = b
        else:
            out[node] = tuple(spans)
    return out


def _parse_workloads(c: _Collector) -> list[Workload]:
    sections = [s for s in c.cp.sections() if s.startswith("workload")]
    if not sections and c.raw("experiment", "dist") is not None:
        sections = ["experiment"]
    out = []
    for sec in sections:
        label = sec.split(".", 1)[1] if "." in sec else sec
        name = (c.raw(sec, "dist") or "").lower()
        if name not in DIST_NAMES:
            c.err("dist", f"[{sec}] unknown distribution {name!r} (expected one of {sorted(DIST_NAMES)})")
            continue
        try:
            dist = make_distribution(name, c.num(sec, "param", None))
        except ValueError as e:
            c.err("param", f"[{sec}] {e}")
            continue
        out.append(Workload(label, dist, name, dist_param(dist)))
    if not out and not any(k in ("dist", "param") for k, _ in c.errors):
        c.err("dist", "no workload configured (add [workload.<label>] sections or dist/param keys)")
    return out


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # names are case-sensitive
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ParseError(str(e)) from e
    c = _Collector(cp)
    ex = "experiment"
    if not cp.has_section(ex):
        c.err(ex, "section missing")

    topo = _parse_topology(c)
    nodes = set(topo.nodes) if topo else set()

    prefix = Name.of("iot")
    try:
        prefix = parse_name(c.raw(ex, "prefix", "/iot"))
    except MalformedName as e:
        c.err("prefix", str(e))

    publisher = c.num(ex, "publisher", 1, int)
    if topo and publisher not in nodes:
        c.err("publisher", f"node {publisher} not in topology")

    mode = (c.raw(ex, "mode", "both") or "").lower()
    modes = {"both": ("pubsub", "pull"), "pubsub": ("pubsub",), "pull": ("pull",)}.get(mode)
    if modes is None:
        c.err("mode", f"{mode!r} is not pubsub, pull or both")
        modes = ()

    # subscribers: 'sweep lo..hi' over subscriber_order, or an explicit id list
    order = c.ints(ex, "subscriber_order") if c.raw(ex, "subscriber_order") else \
        [n for n in sorted(nodes) if n != publisher] + ([publisher] if publisher in nodes else [])
    for n in order:
        if topo and n not in nodes:
            c.err("subscriber_order", f"node {n} not in topology")
    if len(set(order)) != len(order):
        c.err("subscriber_order", "duplicate node ids")
    sub_text = c.raw(ex, "subscribers", "sweep 1..%d" % max(len(nodes), 1))
    sweep = _parse_sweep(c, sub_text, len(nodes) or 1)
    subscriber_sets: list[tuple[int, ...]] = []
    if sweep is None:
        explicit = c.ints(ex, "subscribers")
        bad = [s for s in explicit if s not in nodes]
        if bad:
            c.err("subscribers", f"nodes {bad} not in topology")
        elif not explicit:
            c.err("subscribers", "no subscribers given")
        else:
            subscriber_sets = [tuple(explicit)]
    else:
        if sweep and max(sweep) > len(order):
            c.err("subscribers", f"sweep up to {max(sweep)} but subscriber_order has {len(order)} nodes")
        else:
            subscriber_sets = [tuple(order[:n]) for n in sweep]

    seeds = c.ints(ex, "seeds") if c.raw(ex, "seeds") else [1]
    if not seeds:
        c.err("seeds", "at least one seed is required")

    catalog_size = c.num(ex, "catalog_size", 10, int, lo=1)
    publications = c.num(ex, "publications", 100, int, lo=0)
    publish_interval = c.num(ex, "publish_interval_ms", 1000.0, lo=0, lo_open=True)
    publish_start = c.num(ex, "publish_start_ms", 1000.0, lo=0)
    poll_interval = c.num(ex, "poll_interval_ms", 1000.0, lo=0, lo_open=True)
    poll_freshness = c.num(ex, "poll_freshness_ms", 0.0, lo=0)
    horizon_text = c.raw(ex, "horizon_ms", "auto")
    horizon = None if horizon_text in ("auto", "") else c.num(ex, "horizon_ms", None, lo=0, lo_open=True)
    controller = c.flag(ex, "controller", False)
    buffer_capacity = c.num(ex, "buffer_capacity", 32, int, lo=1)
    include_sync = c.flag(ex, "include_sync_load", False)
    if catalog_size > 255:
        c.err("catalog_size", "at most 255 content kinds")

    sleep = _parse_sleep(c, nodes)
    workloads = _parse_workloads(c)

    rp_policy = (c.raw("rp", "policy", "always-awake-preferred") or "").lower()
    strict = c.flag("rp", "strict", False)
    rp = RpAssignment()
    if rp_policy not in POLICIES:
        c.err("policy", f"unknown RP policy {rp_policy!r} (expected one of {POLICIES})")
    elif topo:
        explicit = {}
        if cp.has_section("rp"):
            for key, val in cp.items("rp"):
                if not key.startswith("/"):
                    continue
                try:
                    explicit[parse_name(key)] = int(val)
                except (MalformedName, ValueError) as e:
                    c.err(f"rp.{key}", str(e))
        try:
            rp = assign_rp(topo, [prefix], rp_policy, explicit, sleepy=sleep, strict=strict)
        except RoutingError as e:
            c.err("policy", str(e))

    if c.errors:
        raise ValidationError(c.errors)
    return ExperimentConfig(
        topology=topo, rp=rp, rp_policy=rp_policy, workloads=tuple(workloads), modes=modes,
        publisher=publisher, subscriber_sets=tuple(subscriber_sets), seeds=tuple(seeds),
        prefix=prefix, catalog_size=catalog_size, publications=publications,
        publish_interval_ms=publish_interval, publish_start_ms=publish_start,
        poll_interval_ms=poll_interval, poll_freshness_ms=poll_freshness, horizon_ms=horizon, sleep=sleep, controller=controller,
        buffer_capacity=buffer_capacity, include_sync_load=include_sync,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    return parse_config(text, str(path))

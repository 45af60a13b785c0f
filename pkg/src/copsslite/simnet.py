"""Deterministic discrete-event simulation of a multi-hop, MTU-limited, sleepy IoT network.

Time is in milliseconds. Events are ordered by (time, insertion counter), and
all randomness comes from generators seeded by string keys derived from the
run seed, so a trace is a pure function of (scenario, seed).
"""

from __future__ import annotations

import csv
import heapq
import io
import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, TextIO, Union

from . import engine
from .codec import MTU, Data, Interest, OversizeFrame, Packet, Publish, Subscribe, decode, encode
from .engine import DeliverLocal, Drop, DropReason, NodeState, Transmit
from .naming import CONSUMER_FACE, PRODUCER_FACE, FibTable, Name, cd_matches, is_prefix
from .routing import Link, RpAssignment, Topology, assign_rp, install_fibs
from .traffic import (
    AppAction,
    ContentCatalog,
    Distribution,
    Zipf,
    content_data,
    data_seq,
    make_catalog,
    polling_client,
    publication_schedule,
)

MODES = ("pubsub", "pull")
CONTROLLER_LINK = "ctrl"
TRACE_HEADER = ("time_ms", "node", "direction", "ptype", "size", "link")

_PTYPE = {Interest: "Interest", Data: "Data", Subscribe: "Subscribe", Publish: "Publish"}


def _ptype(pkt) -> str:
    return _PTYPE.get(type(pkt)) or type(pkt).__name__


def _seq_of(pkt) -> Optional[int]:
    if type(pkt) is Publish:
        return pkt.seq
    if type(pkt) is Data:
        return data_seq(pkt)
    return None


# -- events -------------------------------------------------------------------

@dataclass(frozen=True)
class FrameArrival:
    time: float
    link: Link
    src: int
    dst: int
    frame: bytes


@dataclass(frozen=True)
class Wake:
    node: int
    initial: bool = False


@dataclass(frozen=True)
class Sleep:
    node: int


@dataclass(frozen=True)
class ControllerSync:
    node: int


EventKind = Union[FrameArrival, Wake, Sleep, AppAction, ControllerSync]


class Event(NamedTuple):
    # the tiebreak is unique, so ``kind`` is never compared
    time: float
    tiebreak_seq: int
    kind: EventKind


# -- trace --------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    time: float
    node: int
    direction: str  # tx | rx | deliver | drop | app | wake | sleep | sync
    ptype: str
    size: int
    link: str
    seq: Optional[int] = None
    reason: str = ""


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.records:
            w.writerow((repr(float(r.time)), r.node, r.direction, r.ptype, r.size, r.link))

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


# -- scenario -------------------------------------------------------------------

@dataclass
class Scenario:
    """One simulation run: topology, roles, workload and node behaviour."""

    topology: Topology
    mode: str = "pubsub"
    publisher: int = 1
    subscribers: tuple[int, ...] = ()
    prefix: Name = field(default_factory=lambda: Name.of("iot"))
    rp: Optional[RpAssignment] = None
    catalog: ContentCatalog = field(default_factory=make_catalog)
    distribution: Distribution = field(default_factory=Zipf)
    publications: int = 0
    publish_interval_ms: float = 1000.0
    publish_start_ms: float = 1000.0
    poll_interval_ms: float = 1000.0
    # how long a cached poll answer may serve later polls; 0 means every poll reaches the producer
    poll_freshness_ms: float = 0.0
    sleep: dict[int, tuple[tuple[float, float], ...]] = field(default_factory=dict)
    controller: bool = False
    buffer_capacity: int = 32
    horizon_ms: Optional[float] = None
    script: tuple[AppAction, ...] = ()
    cs_capacity: int = engine.CS_CAPACITY
    pit_lifetime_ms: float = engine.PIT_LIFETIME_MS
    hop_limit: int = 16

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        nodes = set(self.topology.nodes)
        if self.publications and self.publisher not in nodes:
            raise ValueError(f"publisher {self.publisher} not in topology")
        bad = [s for s in self.subscribers if s not in nodes]
        if bad:
            raise ValueError(f"subscribers {bad} not in topology")
        for node, spans in self.sleep.items():
            if node not in nodes:
                raise ValueError(f"sleep schedule for unknown node {node}")
            last = -1.0
            for a, b in spans:
                if not (a >= 0 and b > a and a > last):
                    raise ValueError(f"node {node}: sleep spans must be increasing and disjoint")
                last = b

    def rp_assignment(self) -> RpAssignment:
        if self.rp is not None:
            return self.rp
        return assign_rp(self.topology, [self.prefix], "always-awake-preferred", sleepy=self.sleep)

    def horizon(self) -> float:
        if self.horizon_ms is not None:
            return self.horizon_ms
        last = 0.0
        if self.publications:
            last = self.publish_start_ms + (self.publications - 1) * self.publish_interval_ms
        for a in self.script:
            last = max(last, a.time)
        for spans in self.sleep.values():
            for a, b in spans:
                last = max(last, a, b)
        return last + 2 * self.poll_interval_ms


# -- controller -----------------------------------------------------------------

@dataclass
class NodeRecord:
    st: dict[Name, frozenset[int]]
    fib: FibTable
    sleep: tuple[tuple[float, float], ...] = ()


class Controller:
    """Always-on helper with a logical one-hop link to every node.

    Holds each node's ST/FIB snapshot and buffers publications that arrive
    for a sleeping node, replaying them in arrival order when it wakes.
    """

    def __init__(self, capacity: int = 32):
        if capacity < 1:
            raise ValueError("buffer capacity must be positive")
        self.capacity = capacity
        self.registry: dict[int, NodeRecord] = {}
        self.buffers: dict[int, deque] = {}
        self.lost = 0

    def register(self, state: NodeState, sleep=()) -> None:
        self.registry[state.node_id] = NodeRecord(state.st_snapshot(), state.fib.copy(), tuple(sleep))

    def wants(self, node: int, pkt: Packet) -> bool:
        rec = self.registry.get(node)
        return (isinstance(pkt, Publish) and rec is not None
                and any(cd_matches(cd, pkt.cds) for cd in rec.st))

    def buffer(self, node: int, in_face: int, frame: bytes) -> None:
        q = self.buffers.setdefault(node, deque())
        q.append((in_face, frame))
        while len(q) > self.capacity:
            q.popleft()
            self.lost += 1

    def restore(self, state: NodeState) -> list[tuple[int, bytes]]:
        rec = self.registry.get(state.node_id)
        if rec is not None:
            state.st = {cd: set(faces) for cd, faces in rec.st.items()}
            state.fib = rec.fib.copy()
        q = self.buffers.pop(state.node_id, deque())
        return list(q)

    def snapshot_size(self, node: int) -> int:
        rec = self.registry.get(node)
        if rec is None:
            return 0
        names = list(rec.st) + [p for p, _ in rec.fib.items()]
        return sum(len(encode(Subscribe(n))) for n in names)


# -- kernel -----------------------------------------------------------------------

def transmit(link: Link, src: int, frame: bytes, now: float,
             rng: random.Random) -> Optional[FrameArrival]:
    """Put ``frame`` on ``link``; None when the frame is lost."""
    if len(frame) > MTU:
        raise OversizeFrame(f"{len(frame)}-byte frame exceeds MTU {MTU}")
    if link.loss > 0 and rng.random() < link.loss:
        return None
    return FrameArrival(now + link.delay_ms, link, src, link.other(src), frame)


class Simulator:
    def __init__(self, scenario: Scenario, seed: int):
        self.sc = scenario
        self.seed = seed
        self.rng = random.Random(f"{seed}:loss")
        self.trace = Trace(meta={
            "mode": scenario.mode,
            "publisher": scenario.publisher,
            "subscribers": tuple(scenario.subscribers),
            "seed": seed,
        })
        self._queue: list[Event] = []
        self._counter = itertools.count()
        self._decoded: dict[bytes, Packet] = {}
        self._encoded: dict[Packet, bytes] = {}
        self.repo: dict[int, Publish] = {}

        topo = scenario.topology
        rp = scenario.rp_assignment()
        if scenario.mode == "pubsub":
            fibs = install_fibs(topo, rp)
        else:
            fibs = install_fibs(topo, RpAssignment(), {scenario.prefix: scenario.publisher})
        freshness = scenario.poll_freshness_ms if scenario.mode == "pull" else math.inf
        self.states = {
            n: NodeState(n, fib=fibs[n], cs=engine.ContentStore(scenario.cs_capacity, freshness),
                         is_rp_for=rp.prefixes_at(n) if scenario.mode == "pubsub" else set(),
                         pit_lifetime_ms=scenario.pit_lifetime_ms)
            for n in topo.nodes
        }
        self.controller = Controller(scenario.buffer_capacity) if scenario.controller else None
        if self.controller:
            for n, st in self.states.items():
                self.controller.register(st, scenario.sleep.get(n, ()))
        self.horizon = scenario.horizon()

    # scheduling
    def push(self, time: float, kind: EventKind) -> None:
        heapq.heappush(self._queue, Event(time, next(self._counter), kind))

    def _encode(self, pkt: Packet) -> bytes:
        frame = self._encoded.get(pkt)
        if frame is None:
            frame = self._encoded[pkt] = encode(pkt)
        return frame

    def _decode(self, frame: bytes) -> Packet:
        pkt = self._decoded.get(frame)
        if pkt is None:
            pkt = self._decoded[frame] = decode(frame)
        return pkt

    def _record(self, time, node, direction, ptype="-", size=0, link="", seq=None, reason=""):
        self.trace.append(TraceRecord(time, node, direction, ptype, size, link, seq, reason))

    def _seed_events(self) -> None:
        sc = self.sc
        for n in sc.topology.nodes:
            self.push(0.0, Wake(n, initial=True))
        for n in sorted(sc.sleep):
            for a, b in sc.sleep[n]:
                self.push(a, Sleep(n))
                self.push(b, Wake(n))

        actions: list[AppAction] = []
        if sc.mode == "pubsub":
            actions += [AppAction(0.0, s, Subscribe(sc.prefix), CONSUMER_FACE) for s in sc.subscribers]
        if sc.publications:
            rng = random.Random(f"{self.seed}:workload")
            kind = "inject" if sc.mode == "pubsub" else "produce"
            actions += publication_schedule(sc.distribution, sc.catalog, sc.publications,
                                            sc.publish_interval_ms, sc.publish_start_ms, rng,
                                            sc.publisher, kind)
        if sc.mode == "pull":
            for s in sc.subscribers:
                phase = random.Random(f"{self.seed}:phase:{s}").uniform(0.0, sc.poll_interval_ms)
                actions += polling_client(s, sc.prefix, sc.poll_interval_ms, phase,
                                          self.horizon, sc.hop_limit)
        actions += list(sc.script)
        for a in sorted(actions, key=lambda a: a.time):
            self.push(a.time, a)

    def run(self) -> Trace:
        self.start()
        return self.advance(self.horizon)

    def start(self) -> None:
        """Schedule the scenario's initial events; ``advance`` then processes them."""
        self._seed_events()

    def advance(self, until: float) -> Trace:
        """Process every queued event with time <= ``until``."""
        q = self._queue
        while q and q[0].time <= until:
            ev = heapq.heappop(q)
            kind = ev.kind
            if type(kind) is FrameArrival:
                self._on_frame(ev.time, kind)
            elif type(kind) is AppAction:
                self._on_app(ev.time, kind)
            elif type(kind) is Wake:
                self.wake_node(kind.node, ev.time, kind.initial)
            elif type(kind) is Sleep:
                self.sleep_node(kind.node, ev.time)
            else:
                self._on_sync(ev.time, kind.node)
        if self.controller:
            self.trace.meta["buffer_lost"] = self.controller.lost
        return self.trace

    # handlers
    def _on_frame(self, now: float, ev: FrameArrival) -> None:
        node, state = ev.dst, self.states[ev.dst]
        pkt = self._decode(ev.frame)
        size, label = len(ev.frame), ev.link.label
        in_face = self.sc.topology.face(node, ev.src)
        if not state.awake:
            if self.controller and self.controller.wants(node, pkt):
                self.controller.buffer(node, in_face, ev.frame)
                reason = DropReason.BUFFERED
            else:
                reason = DropReason.ASLEEP
            self._record(now, node, "drop", _ptype(pkt), size, label, _seq_of(pkt), reason.value)
            return
        self._record(now, node, "rx", _ptype(pkt), size, label, _seq_of(pkt))
        self._apply(node, engine.handle(state, in_face, pkt, now), now, pkt, size, label)

    def _on_app(self, now: float, act: AppAction) -> None:
        pkt = act.packet
        size = len(self._encode(pkt))
        self._record(now, act.node, "app", _ptype(pkt), size, "", _seq_of(pkt))
        state = self.states[act.node]
        if not state.awake:
            self._record(now, act.node, "drop", _ptype(pkt), size, "", _seq_of(pkt),
                         DropReason.ASLEEP.value)
            return
        if act.kind == "produce":
            self.repo[act.node] = pkt
            return
        self._apply(act.node, engine.handle(state, act.face, pkt, now), now, pkt, size, "")

    def wake_node(self, node: int, now: float, initial: bool = False) -> None:
        """Bring ``node`` back; with a controller this schedules a state sync and buffer replay."""
        self.states[node].awake = True
        self._record(now, node, "wake")
        if self.controller and not initial:
            self.push(now, ControllerSync(node))

    def sleep_node(self, node: int, now: float) -> None:
        """Power ``node`` down: volatile PIT and CS are lost, ST and FIB are kept."""
        state = self.states[node]
        state.awake = False
        state.pit.clear()
        state.cs.clear()
        if self.controller:
            self.controller.register(state, self.sc.sleep.get(node, ()))
        self._record(now, node, "sleep")

    def _on_sync(self, now: float, node: int) -> None:
        state = self.states[node]
        if not state.awake:
            return
        self._record(now, node, "sync", "State", self.controller.snapshot_size(node), CONTROLLER_LINK)
        for in_face, frame in self.controller.restore(state):
            pkt = self._decode(frame)
            self._record(now, node, "sync", _ptype(pkt), len(frame), CONTROLLER_LINK, _seq_of(pkt))
            self._apply(node, engine.handle(state, in_face, pkt, now), now, pkt, len(frame),
                        CONTROLLER_LINK)

    def _apply(self, node: int, actions, now: float, pkt: Packet, size: int, label: str) -> None:
        topo = self.sc.topology
        for a in actions:
            if type(a) is Transmit:
                frame = self._encode(a.packet)
                nbr = topo.neighbor_on(node, a.face)
                link = topo.link(node, nbr)
                arrival = transmit(link, node, frame, now, self.rng)
                seq = _seq_of(a.packet)
                self._record(now, node, "tx", _ptype(a.packet), len(frame), link.label, seq)
                if arrival is None:
                    self._record(now, node, "drop", _ptype(a.packet), len(frame), link.label, seq,
                                 DropReason.LOSS.value)
                else:
                    self.push(arrival.time, arrival)
            elif type(a) is DeliverLocal:
                self._deliver(node, a.packet, now)
            elif type(a) is Drop:
                self._record(now, node, "drop", _ptype(pkt), size, label, _seq_of(pkt), a.reason.value)

    def _deliver(self, node: int, pkt: Packet, now: float) -> None:
        self._record(now, node, "deliver", _ptype(pkt), len(self._encode(pkt)), "", _seq_of(pkt))
        if type(pkt) is Interest:
            latest = self.repo.get(node)
            if latest is not None and is_prefix(self.sc.prefix, pkt.name):
                data = content_data(pkt.name, latest)
                size = len(self._encode(data))
                actions = engine.handle(self.states[node], PRODUCER_FACE, data, now)
                self._apply(node, actions, now, data, size, "")


def run(scenario: Scenario, seed: int = 0) -> Trace:
    return Simulator(scenario, seed).run()

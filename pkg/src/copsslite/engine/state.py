from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from ..codec import Packet
from ..naming import FibTable, Name, is_local, is_prefix

PIT_LIFETIME_MS = 4000.0
CS_CAPACITY = 16
SEEN_WINDOW = 64


class DropReason(str, Enum):
    NO_ROUTE = "NoRoute"
    HOP_LIMIT = "HopLimit"
    DUPLICATE = "Duplicate"
    UNSOLICITED = "Unsolicited"
    NOT_SUBSCRIBED = "NotSubscribed"
    ASLEEP = "Asleep"
    LOSS = "Loss"
    BUFFERED = "Buffered"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Transmit:
    face: int
    packet: Packet


@dataclass(frozen=True)
class DeliverLocal:
    packet: Packet


@dataclass(frozen=True)
class Drop:
    reason: DropReason


Action = Union[Transmit, DeliverLocal, Drop]


def send(face: int, pkt: Packet) -> Action:
    """Transmit on a radio face, or hand the packet to the local application."""
    return DeliverLocal(pkt) if is_local(face) else Transmit(face, pkt)


class ContentStore:
    """Bounded LRU cache of Data payloads keyed by exact name.

    Entries older than ``freshness_ms`` stay stored but no longer answer
    Interests; the default never goes stale.
    """

    def __init__(self, capacity: int = CS_CAPACITY, freshness_ms: float = math.inf):
        if capacity < 1:
            raise ValueError("content store capacity must be positive")
        if not freshness_ms >= 0:
            raise ValueError("freshness must be non-negative")
        self.capacity = capacity
        self.freshness_ms = freshness_ms
        self._items: OrderedDict[Name, tuple[bytes, float]] = OrderedDict()

    def is_fresh(self, name: Name, now: float = 0.0) -> bool:
        item = self._items.get(name)
        return item is not None and now - item[1] < self.freshness_ms

    def get(self, name: Name, now: float = 0.0) -> Optional[bytes]:
        """Fresh payload for ``name`` (marking it recently used), else None."""
        if not self.is_fresh(name, now):
            return None
        self._items.move_to_end(name)
        return self._items[name][0]

    def insert(self, name: Name, payload: bytes, now: float = 0.0) -> Optional[Name]:
        """Store ``payload``; returns the evicted name, if any."""
        self._items[name] = (payload, now)
        self._items.move_to_end(name)
        if len(self._items) > self.capacity:
            evicted, _ = self._items.popitem(last=False)
            return evicted
        return None

    def clear(self) -> None:
        self._items.clear()

    def names(self) -> list[Name]:
        """Names from least to most recently used."""
        return list(self._items)

    def __contains__(self, name: Name) -> bool:
        return name in self._items

    def __len__(self) -> int:
        return len(self._items)


@dataclass
class PitEntry:
    faces: set[int]
    expiry: float


@dataclass
class NodeState:
    node_id: int
    fib: FibTable = field(default_factory=FibTable)
    st: dict[Name, set[int]] = field(default_factory=dict)
    pit: dict[Name, PitEntry] = field(default_factory=dict)
    cs: ContentStore = field(default_factory=ContentStore)
    awake: bool = True
    is_rp_for: set[Name] = field(default_factory=set)
    seen_pubs: OrderedDict = field(default_factory=OrderedDict)
    pit_lifetime_ms: float = PIT_LIFETIME_MS
    seen_window: int = SEEN_WINDOW

    def purge_pit(self, now: float) -> None:
        expired = [name for name, e in self.pit.items() if e.expiry <= now]
        for name in expired:
            del self.pit[name]

    def is_rp(self, cd: Name) -> bool:
        return any(is_prefix(root, cd) for root in self.is_rp_for)

    def remember_pub(self, key) -> bool:
        """Record a publication key; False if it was already in the window."""
        if key in self.seen_pubs:
            return False
        self.seen_pubs[key] = None
        while len(self.seen_pubs) > self.seen_window:
            self.seen_pubs.popitem(last=False)
        return True

    def st_snapshot(self) -> dict[Name, frozenset[int]]:
        return {cd: frozenset(faces) for cd, faces in self.st.items()}

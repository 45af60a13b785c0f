"""Workloads: which content kind is published when, and the polling consumer
used by the query/response baseline.

All four popularity laws are defined over the finite catalog {1..K}.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass
from itertools import accumulate
from typing import Optional, Union

from .codec import Data, Interest, Packet, Publish, encode, make_seq
from .naming import CONSUMER_FACE, PRODUCER_FACE, Name


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Zipf:
    s: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("zipf exponent must be > 0")


@dataclass(frozen=True)
class Geometric:
    p: float = 0.25

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("geometric p must lie in (0, 1)")


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Binomial:
    p: float = 0.5
    n: Optional[int] = None  # defaults to K - 1 so the shifted support is exactly {1..K}

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("binomial p must lie in (0, 1)")
        if self.n is not None and self.n < 0:
            raise ValueError("binomial n must be >= 0")


Distribution = Union[Zipf, Geometric, Uniform, Binomial]

DIST_NAMES = {"zipf": Zipf, "geometric": Geometric, "uniform": Uniform, "binomial": Binomial}


def make_distribution(name: str, param: Optional[float] = None) -> Distribution:
    name = name.lower()
    if name == "zipf":
        return Zipf(1.0 if param is None else float(param))
    if name == "geometric":
        return Geometric(0.25 if param is None else float(param))
    if name == "uniform":
        return Uniform()
    if name == "binomial":
        return Binomial(0.5 if param is None else float(param))
    raise ValueError(f"unknown distribution {name!r}")


def dist_name(dist: Distribution) -> str:
    return type(dist).__name__.lower()


def dist_param(dist: Distribution) -> Optional[float]:
    if isinstance(dist, Zipf):
        return dist.s
    if isinstance(dist, (Geometric, Binomial)):
        return dist.p
    return None


def _weights(dist: Distribution, K: int) -> list[float]:
    ks = range(1, K + 1)
    if isinstance(dist, Zipf):
        return [k ** -dist.s for k in ks]
    if isinstance(dist, Geometric):
        return [dist.p * (1 - dist.p) ** (k - 1) for k in ks]
    if isinstance(dist, Uniform):
        return [1.0] * K
    if isinstance(dist, Binomial):
        n = K - 1 if dist.n is None else dist.n
        return [math.comb(n, k - 1) * dist.p ** (k - 1) * (1 - dist.p) ** (n - k + 1)
                if k - 1 <= n else 0.0 for k in ks]
    raise TypeError(f"not a distribution: {dist!r}")


def pmf_table(dist: Distribution, K: int) -> list[float]:
    """Probabilities for ids 1..K, renormalised over the catalog."""
    if K < 1:
        raise OutOfRange("catalog size must be >= 1")
    w = _weights(dist, K)
    total = math.fsum(w)
    return [x / total for x in w]


def pmf(dist: Distribution, k: int, K: int) -> float:
    if not 1 <= k <= K:
        raise OutOfRange(f"content id {k} outside 1..{K}")
    return pmf_table(dist, K)[k - 1]


class Sampler:
    """Inverse-CDF sampler over a precomputed table."""

    def __init__(self, dist: Distribution, K: int):
        self.K = K
        self.cdf = list(accumulate(pmf_table(dist, K)))
        self.cdf[-1] = 1.0

    def __call__(self, rng: random.Random) -> int:
        return min(bisect.bisect_right(self.cdf, rng.random()), self.K - 1) + 1


def sample(dist: Distribution, K: int, rng: random.Random) -> int:
    return Sampler(dist, K)(rng)


@dataclass(frozen=True)
class CatalogItem:
    content_id: int
    cds: tuple[Name, ...]
    size: int


@dataclass(frozen=True)
class ContentCatalog:
    prefix: Name
    items: tuple[CatalogItem, ...]

    def __post_init__(self):
        ids = [it.content_id for it in self.items]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("catalog ids must run 1..K")
        for it in self.items:
            # largest frames the item can appear in must fit the MTU
            encode(publication(it, make_seq(255, (1 << 24) - 1)))
            encode(content_data(self.prefix.child("p99999"), publication(it, 0)))

    @property
    def K(self) -> int:
        return len(self.items)

    def item(self, content_id: int) -> CatalogItem:
        return self.items[content_id - 1]


def make_catalog(K: int = 10, prefix: Name = Name.of("iot"), base_size: int = 10,
                 step: int = 8) -> ContentCatalog:
    """Content kind k lives under ``prefix/c<k>`` with a payload of base_size + step*(k-1) bytes."""
    items = tuple(CatalogItem(k, (prefix.child(f"c{k}"),), base_size + step * (k - 1))
                  for k in range(1, K + 1))
    return ContentCatalog(prefix, items)


def _item_payload(item: CatalogItem) -> bytes:
    return bytes((item.content_id % 256,)) + bytes(item.size - 1)


def publication(item: CatalogItem, seq: int, snippet: bool = False) -> Publish:
    return Publish(item.cds, _item_payload(item), snippet, seq)


def content_data(name: Name, pub: Publish) -> Data:
    """Answer to a poll: the latest publication's seq followed by its payload."""
    return Data(name, pub.seq.to_bytes(4, "big") + pub.payload)


def data_seq(data: Data) -> Optional[int]:
    return int.from_bytes(data.payload[:4], "big") if len(data.payload) >= 4 else None


@dataclass(frozen=True)
class AppAction:
    """Something a node's application does at a point in time.

    ``inject`` hands ``packet`` to the node's engine on ``face``; ``produce``
    adds ``packet`` (a Publish) to the node's content repository for pull
    consumers to fetch.
    """

    time: float
    node: int
    packet: Packet
    face: int = CONSUMER_FACE
    kind: str = "inject"


def publication_schedule(dist: Distribution, catalog: ContentCatalog, count: int,
                         interval_ms: float, start_ms: float, rng: random.Random,
                         publisher: int, kind: str = "inject") -> list[AppAction]:
    draw = Sampler(dist, catalog.K)
    out = []
    for i in range(count):
        item = catalog.item(draw(rng))
        pkt = publication(item, make_seq(publisher, i + 1))
        out.append(AppAction(start_ms + i * interval_ms, publisher, pkt, PRODUCER_FACE, kind))
    return out


def poll_name(prefix: Name, round_index: int) -> Name:
    return prefix.child(f"p{round_index}")


def polling_client(node: int, prefix: Name, interval_ms: float, phase_ms: float = 0.0,
                   horizon_ms: float = math.inf, hop_limit: int = 16) -> list[AppAction]:
    """Interest schedule of a consumer polling ``prefix`` every ``interval_ms``.

    Round k asks for ``prefix/p<k>``. Consumers share the round naming, so
    polls that overlap in time aggregate in PITs and hit caches like
    ordinary NDN traffic. Nonces are unique per (node, round).
    """
    if not interval_ms > 0:
        raise ValueError("poll interval must be > 0")
    out = []
    k = 0
    while phase_ms + k * interval_ms < horizon_ms:
        nonce = ((node & 0xFF) << 24) | (k & 0xFFFFFF)
        pkt = Interest(poll_name(prefix, k), nonce, hop_limit)
        out.append(AppAction(phase_ms + k * interval_ms, node, pkt, CONSUMER_FACE))
        k += 1
    return out


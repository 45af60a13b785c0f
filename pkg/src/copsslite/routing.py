"""Topology model, rendezvous-point placement and centrally computed FIBs.

Routing is a root-oriented shortest-delay tree per destination (one per RP
for the pub/sub plane, one per producer for the query plane), computed once
before a run.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .naming import PRODUCER_FACE, FibTable, Name

POLICIES = ("explicit", "max-degree", "always-awake-preferred")


class RoutingError(ValueError):
    pass


class Disconnected(RoutingError):
    pass


class NoEligibleNode(RoutingError):
    pass


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    delay_ms: float = 10.0
    loss: float = 0.0

    def __post_init__(self):
        if self.a == self.b:
            raise RoutingError(f"self-link on node {self.a}")
        if not self.delay_ms > 0:
            raise RoutingError(f"link {self.a}-{self.b}: delay must be > 0")
        if not 0.0 <= self.loss <= 1.0:
            raise RoutingError(f"link {self.a}-{self.b}: loss outside [0, 1]")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def label(self) -> str:
        return f"{self.a}-{self.b}"

    def other(self, node: int) -> int:
        return self.b if node == self.a else self.a


class Topology:
    def __init__(self, nodes: Iterable[int], links: Iterable[Link]):
        self.nodes: tuple[int, ...] = tuple(sorted(set(nodes)))
        self._links: dict[tuple[int, int], Link] = {}
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for link in links:
            key = (link.a, link.b)
            if link.a not in adj or link.b not in adj:
                raise RoutingError(f"link {link.label} references an unknown node")
            if key in self._links:
                raise RoutingError(f"duplicate link {link.label}")
            self._links[key] = link
            adj[link.a].append(link.b)
            adj[link.b].append(link.a)
        self._adj = {n: tuple(sorted(nbrs)) for n, nbrs in adj.items()}
        # face ids: 1 + rank of the neighbour among the node's sorted neighbours
        self._faces = {n: {nbr: i + 1 for i, nbr in enumerate(nbrs)} for n, nbrs in self._adj.items()}

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], delay_ms: float = 10.0,
                   loss: float = 0.0, nodes: Iterable[int] = ()) -> Topology:
        edges = list(edges)
        all_nodes = set(nodes) | {x for e in edges for x in e}
        return cls(all_nodes, [Link(a, b, delay_ms, loss) for a, b in edges])

    @property
    def links(self) -> tuple[Link, ...]:
        return tuple(self._links[k] for k in sorted(self._links))

    def link(self, a: int, b: int) -> Link:
        return self._links[(min(a, b), max(a, b))]

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self._adj[node]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def face(self, node: int, neighbor: int) -> int:
        return self._faces[node][neighbor]

    def neighbor_on(self, node: int, face: int) -> int:
        return self._adj[node][face - 1]

    def face_table(self) -> dict[int, dict[int, int]]:
        """node -> {face id: neighbour}"""
        return {n: {f: nbr for nbr, f in faces.items()} for n, faces in self._faces.items()}

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        seen, stack = {self.nodes[0]}, [self.nodes[0]]
        while stack:
            for nbr in self._adj[stack.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        return len(seen) == len(self.nodes)

    def __repr__(self) -> str:
        return f"Topology(nodes={list(self.nodes)}, links={[l.label for l in self.links]})"


@dataclass
class RpAssignment:
    table: dict[Name, int] = field(default_factory=dict)

    def rp_for(self, cd: Name) -> Optional[int]:
        for prefix in cd.prefixes():
            if prefix in self.table:
                return self.table[prefix]
        return None

    def prefixes_at(self, node: int) -> set[Name]:
        return {p for p, n in self.table.items() if n == node}


def _max_degree(topology: Topology, candidates: Iterable[int]) -> int:
    # max degree, ties to the lowest id
    return min(candidates, key=lambda n: (-topology.degree(n), n))


def assign_rp(topology: Topology, cd_prefixes: Iterable[Name], policy: str = "max-degree",
              explicit: Optional[Mapping[Name, int]] = None, sleepy: Iterable[int] = (),
              strict: bool = False) -> RpAssignment:
    """Map every CD prefix to one rendezvous node.

    ``always-awake-preferred`` restricts the max-degree choice to nodes with
    no sleep schedule; if every node sleeps it falls back to plain max-degree,
    or raises NoEligibleNode when ``strict``.
    """
    prefixes = list(cd_prefixes)
    if not prefixes:
        raise RoutingError("no CD prefixes to place")
    if policy not in POLICIES:
        raise RoutingError(f"unknown RP policy {policy!r}")
    if not topology.nodes:
        raise NoEligibleNode("empty topology")

    if policy == "explicit":
        explicit = dict(explicit or {})
        table = {}
        for p in prefixes:
            if p not in explicit:
                raise RoutingError(f"no explicit RP for {p}")
            if explicit[p] not in topology.nodes:
                raise RoutingError(f"RP {explicit[p]} for {p} is not in the topology")
            table[p] = explicit[p]
        return RpAssignment(table)

    candidates = list(topology.nodes)
    if policy == "always-awake-preferred":
        sleepy = set(sleepy)
        awake = [n for n in topology.nodes if n not in sleepy]
        if awake:
            candidates = awake
        elif strict:
            raise NoEligibleNode("every node has a sleep schedule")
    node = _max_degree(topology, candidates)
    return RpAssignment({p: node for p in prefixes})


def shortest_delays(topology: Topology, root: int) -> dict[int, float]:
    dist = {root: 0.0}
    heap = [(0.0, root)]
    done = set()
    while heap:
        d, n = heapq.heappop(heap)
        if n in done:
            continue
        done.add(n)
        for nbr in topology.neighbors(n):
            nd = d + topology.link(n, nbr).delay_ms
            if nbr not in dist or nd < dist[nbr]:
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return dist


def build_tree(topology: Topology, root: int) -> dict[int, int]:
    """Shortest-delay tree toward ``root`` as a parent table; the root maps to itself.

    A node's parent is its lowest-id neighbour lying on some minimum-delay
    path, which keeps the tree independent of heap visiting order.
    """
    if root not in topology.nodes:
        raise RoutingError(f"root {root} is not in the topology")
    dist = shortest_delays(topology, root)
    missing = [n for n in topology.nodes if n not in dist]
    if missing:
        raise Disconnected(f"nodes {missing} cannot reach {root}")
    parent = {root: root}
    for n in topology.nodes:
        if n == root:
            continue
        parent[n] = min(
            nbr for nbr in topology.neighbors(n)
            if dist[nbr] < dist[n]
            and math.isclose(dist[nbr] + topology.link(n, nbr).delay_ms, dist[n],
                             rel_tol=1e-12, abs_tol=1e-9)
        )
    return parent


def install_fibs(topology: Topology, rp: RpAssignment,
                 producer_prefixes: Optional[Mapping[Name, int]] = None) -> dict[int, FibTable]:
    """Per-node FIBs: every CD prefix points up its RP tree, every producer
    prefix up the producer's tree. The producer itself routes its prefix to
    its local application face.
    """
    fibs = {n: FibTable() for n in topology.nodes}
    trees: dict[int, dict[int, int]] = {}

    def tree(root: int) -> dict[int, int]:
        if root not in trees:
            trees[root] = build_tree(topology, root)
        return trees[root]

    for prefix, root in sorted(rp.table.items()):
        for n, p in tree(root).items():
            if n != root:
                fibs[n].add(prefix, topology.face(n, p))
    for prefix, producer in sorted((producer_prefixes or {}).items()):
        for n, p in tree(producer).items():
            fibs[n].add(prefix, PRODUCER_FACE if n == producer else topology.face(n, p))
    return fibs

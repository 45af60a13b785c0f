"""Query/response half of the node: the CS -> PIT -> FIB Interest pipeline and Data return."""

from __future__ import annotations

from ..codec import Data, Interest
from .state import Action, DeliverLocal, Drop, DropReason, NodeState, PitEntry, send


def on_interest(state: NodeState, in_face: int, pkt: Interest, now: float) -> list[Action]:
    if not state.awake:
        return [Drop(DropReason.ASLEEP)]
    state.purge_pit(now)

    cached = state.cs.get(pkt.name, now)
    if cached is not None:
        return [send(in_face, Data(pkt.name, cached))]

    entry = state.pit.get(pkt.name)
    if entry is not None:
        entry.faces.add(in_face)
        entry.expiry = max(entry.expiry, now + state.pit_lifetime_ms)
        return []

    hop_limit = pkt.hop_limit - 1
    if hop_limit <= 0:
        return [Drop(DropReason.HOP_LIMIT)]

    match = state.fib.lookup(pkt.name)
    out = sorted(match[1] - {in_face}) if match else []
    if not out:
        return [Drop(DropReason.NO_ROUTE)]

    state.pit[pkt.name] = PitEntry({in_face}, now + state.pit_lifetime_ms)
    fwd = Interest(pkt.name, pkt.nonce, hop_limit)
    return _dedup_local([send(face, fwd) for face in out])


def on_data(state: NodeState, in_face: int, pkt: Data, now: float) -> list[Action]:
    if not state.awake:
        return [Drop(DropReason.ASLEEP)]
    state.purge_pit(now)

    if state.cs.is_fresh(pkt.name, now):
        return [Drop(DropReason.DUPLICATE)]
    entry = state.pit.pop(pkt.name, None)
    if entry is None:
        return [Drop(DropReason.UNSOLICITED)]
    state.cs.insert(pkt.name, pkt.payload, now)
    return _dedup_local([send(face, pkt) for face in sorted(entry.faces)])


def _dedup_local(actions: list[Action]) -> list[Action]:
    # two local faces on one node still mean one hand-off to the application layer
    out, delivered = [], False
    for a in actions:
        if isinstance(a, DeliverLocal):
            if delivered:
                continue
            delivered = True
        out.append(a)
    return out

"""Pub/sub half of the node: Subscription Table maintenance and publication fan-out."""

from __future__ import annotations

from ..codec import Publish, Subscribe, Unsubscribe
from ..naming import cd_matches, is_local
from .state import Action, DeliverLocal, Drop, DropReason, NodeState, Transmit, send


def _toward_rp(state: NodeState, pkt, cd, in_face: int) -> list[Action]:
    match = state.fib.lookup(cd)
    out = sorted(match[1] - {in_face}) if match else []
    if not out:
        return [Drop(DropReason.NO_ROUTE)]
    return [send(face, pkt) for face in out]


def on_subscribe(state: NodeState, in_face: int, pkt: Subscribe) -> list[Action]:
    if not state.awake:
        return [Drop(DropReason.ASLEEP)]
    faces = state.st.setdefault(pkt.cd, set())
    joined_before = bool(faces)
    faces.add(in_face)
    if state.is_rp(pkt.cd) or joined_before:
        return []
    return _toward_rp(state, pkt, pkt.cd, in_face)


def on_unsubscribe(state: NodeState, in_face: int, pkt: Unsubscribe) -> list[Action]:
    if not state.awake:
        return [Drop(DropReason.ASLEEP)]
    faces = state.st.get(pkt.cd)
    if not faces or in_face not in faces:
        return [Drop(DropReason.NOT_SUBSCRIBED)]
    faces.discard(in_face)
    if faces:
        return []
    del state.st[pkt.cd]
    if state.is_rp(pkt.cd):
        return []
    return _toward_rp(state, pkt, pkt.cd, in_face)


def publish_key(pkt: Publish) -> tuple[int, int]:
    return pkt.publisher, pkt.seq


def on_publish(state: NodeState, in_face: int, pkt: Publish) -> list[Action]:
    """Forward one copy per matching ST face, deliver locally at most once,
    and keep climbing toward the RP unless this node is the RP.
    """
    if not state.awake:
        return [Drop(DropReason.ASLEEP)]
    if not state.remember_pub(publish_key(pkt)):
        return [Drop(DropReason.DUPLICATE)]

    downstream: set[int] = set()
    for cd, faces in state.st.items():
        if cd_matches(cd, pkt.cds):
            downstream |= faces
    downstream.discard(in_face)

    actions: list[Action] = []
    if any(is_local(f) for f in downstream):
        actions.append(DeliverLocal(pkt))
    actions.extend(Transmit(f, pkt) for f in sorted(downstream) if not is_local(f))

    if not any(state.is_rp(cd) for cd in pkt.cds):
        match = state.fib.lookup(pkt.cds[0])
        if match:
            for face in sorted(match[1]):
                if face != in_face and face not in downstream:
                    actions.append(send(face, pkt))

    return actions or [Drop(DropReason.NO_ROUTE)]


def publish_two_step(snippet: Publish, full: Publish, delay_ms: float,
                     at: float = 0.0) -> list[tuple[float, Publish]]:
    """Script a snippet announcement followed, ``delay_ms`` later, by the full content.

    Receivers that subscribe inside the gap get the full publication; both
    packets go through ``on_publish`` like any other.
    """
    if not snippet.snippet or full.snippet:
        raise ValueError("first packet must be the snippet, second the full content")
    if snippet.cds != full.cds:
        raise ValueError("snippet and full content must carry the same descriptors")
    if full.seq <= snippet.seq:
        raise ValueError("full content needs a later sequence number than its snippet")
    if delay_ms < 0:
        raise ValueError("delay must be non-negative")
    return [(at, snippet), (at + delay_ms, full)]

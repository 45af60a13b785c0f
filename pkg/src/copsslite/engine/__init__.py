"""Per-node forwarding engine.

``handle`` is the single entry point: Subscribe/Unsubscribe/Publish go to the
pub/sub core, Interest/Data to the query/response forwarder.
"""

from ..codec import Data, Interest, Packet, Publish, Subscribe, Unsubscribe
from .core import on_publish, on_subscribe, on_unsubscribe, publish_key, publish_two_step
from .forwarder import on_data, on_interest
from .state import (
    CS_CAPACITY,
    PIT_LIFETIME_MS,
    SEEN_WINDOW,
    Action,
    ContentStore,
    DeliverLocal,
    Drop,
    DropReason,
    NodeState,
    PitEntry,
    Transmit,
)


def handle(state: NodeState, in_face: int, pkt: Packet, now: float) -> list[Action]:
    if isinstance(pkt, Interest):
        return on_interest(state, in_face, pkt, now)
    if isinstance(pkt, Data):
        return on_data(state, in_face, pkt, now)
    if isinstance(pkt, Subscribe):
        return on_subscribe(state, in_face, pkt)
    if isinstance(pkt, Unsubscribe):
        return on_unsubscribe(state, in_face, pkt)
    if isinstance(pkt, Publish):
        return on_publish(state, in_face, pkt)
    raise TypeError(f"not a packet: {pkt!r}")


__all__ = [
    "CS_CAPACITY", "PIT_LIFETIME_MS", "SEEN_WINDOW", "Action", "ContentStore", "DeliverLocal",
    "Drop", "DropReason", "NodeState", "PitEntry", "Transmit", "handle", "on_data",
    "on_interest", "on_publish", "on_subscribe", "on_unsubscribe", "publish_key",
    "publish_two_step",
]

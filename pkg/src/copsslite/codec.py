"""TLV wire format for Interest, Data, Subscribe, Unsubscribe and Publish.

Frame layout::

    [packet type: 1 byte] [TLV]*
    TLV = [type: 1 byte] [length: u16 big-endian] [value]

Names are a run of NAME_COMPONENT TLVs. A Publish carries each of its
content descriptors as CD_BEGIN followed by that descriptor's components.
Field order is fixed per packet type and the decoder only accepts the
canonical layout, so ``encode(decode(f)) == f`` for every accepted frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .naming import MAX_COMPONENT_LEN, MAX_COMPONENTS, Name

MTU = 128
MAX_CDS = 4
DEFAULT_HOP_LIMIT = 16

PT_INTEREST = 0x10
PT_DATA = 0x11
PT_SUBSCRIBE = 0x12
PT_UNSUBSCRIBE = 0x13
PT_PUBLISH = 0x14

T_NAME_COMPONENT = 0x01
T_CD_BEGIN = 0x02
T_PAYLOAD = 0x03
T_NONCE = 0x04
T_HOP_LIMIT = 0x05
T_SNIPPET = 0x06
T_SEQ = 0x07

TLV_HEADER = 3

_FIELD_NAMES = {
    T_NAME_COMPONENT: "NAME_COMPONENT",
    T_CD_BEGIN: "CD_BEGIN",
    T_PAYLOAD: "PAYLOAD",
    T_NONCE: "NONCE",
    T_HOP_LIMIT: "HOP_LIMIT",
    T_SNIPPET: "SNIPPET",
    T_SEQ: "SEQ",
}


class CodecError(ValueError):
    pass


class OversizeFrame(CodecError):
    pass


class TooManyCds(CodecError):
    pass


class DecodeError(CodecError):
    pass


class UnknownPacketType(DecodeError):
    pass


class TruncatedTlv(DecodeError):
    pass


class MissingField(DecodeError):
    pass


class DuplicateField(DecodeError):
    pass


class TrailingGarbage(DecodeError):
    pass


class MalformedField(DecodeError):
    """A TLV is present but its value, type or position is invalid."""


def _check_uint(value, bits: int, what: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < (1 << bits):
        raise ValueError(f"{what}={value!r} is not a u{bits}")


@dataclass(frozen=True)
class Interest:
    name: Name
    nonce: int = 0
    hop_limit: int = DEFAULT_HOP_LIMIT

    def __post_init__(self):
        _check_uint(self.nonce, 32, "nonce")
        _check_uint(self.hop_limit, 8, "hop_limit")


@dataclass(frozen=True)
class Data:
    name: Name
    payload: bytes = b""


@dataclass(frozen=True)
class Subscribe:
    cd: Name


@dataclass(frozen=True)
class Unsubscribe:
    cd: Name


@dataclass(frozen=True)
class Publish:
    cds: tuple[Name, ...]
    payload: bytes = b""
    snippet: bool = False
    seq: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cds", tuple(self.cds))
        if not self.cds:
            raise ValueError("a Publish carries at least one content descriptor")
        _check_uint(self.seq, 32, "seq")

    @property
    def publisher(self) -> int:
        return self.seq >> 24


Packet = Union[Interest, Data, Subscribe, Unsubscribe, Publish]

PACKET_TYPE_NAMES = {
    Interest: "Interest",
    Data: "Data",
    Subscribe: "Subscribe",
    Unsubscribe: "Unsubscribe",
    Publish: "Publish",
}


def make_seq(publisher: int, counter: int) -> int:
    """Publication sequence numbers carry the publisher id in their top byte."""
    _check_uint(publisher, 8, "publisher")
    _check_uint(counter, 24, "counter")
    return (publisher << 24) | counter


def packet_type_name(pkt: Packet) -> str:
    return PACKET_TYPE_NAMES[type(pkt)]


# -- encoding ---------------------------------------------------------------

def _tlv(t: int, value: bytes) -> bytes:
    return bytes((t,)) + len(value).to_bytes(2, "big") + value


def _name_tlvs(name: Name) -> bytes:
    return b"".join(_tlv(T_NAME_COMPONENT, c) for c in name.components)


def encode(pkt: Packet) -> bytes:
    if isinstance(pkt, Interest):
        frame = (bytes((PT_INTEREST,)) + _name_tlvs(pkt.name)
                 + _tlv(T_NONCE, pkt.nonce.to_bytes(4, "big"))
                 + _tlv(T_HOP_LIMIT, bytes((pkt.hop_limit,))))
    elif isinstance(pkt, Data):
        frame = bytes((PT_DATA,)) + _name_tlvs(pkt.name) + _tlv(T_PAYLOAD, bytes(pkt.payload))
    elif isinstance(pkt, Subscribe):
        frame = bytes((PT_SUBSCRIBE,)) + _name_tlvs(pkt.cd)
    elif isinstance(pkt, Unsubscribe):
        frame = bytes((PT_UNSUBSCRIBE,)) + _name_tlvs(pkt.cd)
    elif isinstance(pkt, Publish):
        if len(pkt.cds) > MAX_CDS:
            raise TooManyCds(f"{len(pkt.cds)} content descriptors (max {MAX_CDS})")
        cds = b"".join(_tlv(T_CD_BEGIN, b"") + _name_tlvs(cd) for cd in pkt.cds)
        frame = (bytes((PT_PUBLISH,)) + cds + _tlv(T_PAYLOAD, bytes(pkt.payload))
                 + _tlv(T_SNIPPET, b"\x01" if pkt.snippet else b"\x00")
                 + _tlv(T_SEQ, pkt.seq.to_bytes(4, "big")))
    else:
        raise TypeError(f"not a packet: {pkt!r}")
    if len(frame) > MTU:
        raise OversizeFrame(f"{type(pkt).__name__} encodes to {len(frame)} bytes (MTU {MTU})")
    return frame


def encoded_size(pkt: Packet) -> int:
    return len(encode(pkt))


# -- decoding ---------------------------------------------------------------

def _split_tlvs(frame: bytes) -> list[tuple[int, bytes]]:
    tlvs = []
    i, n = 1, len(frame)
    while i < n:
        if n - i < TLV_HEADER:
            raise TruncatedTlv(f"{n - i} byte(s) left at offset {i}, TLV header needs {TLV_HEADER}")
        t = frame[i]
        length = int.from_bytes(frame[i + 1:i + 3], "big")
        i += TLV_HEADER
        if length > n - i:
            raise TruncatedTlv(f"TLV 0x{t:02x} declares {length} bytes, {n - i} remain")
        tlvs.append((t, frame[i:i + length]))
        i += length
    return tlvs


class _Reader:
    """Cursor over the TLV list enforcing the canonical field order."""

    def __init__(self, tlvs: list[tuple[int, bytes]]):
        self.tlvs = tlvs
        self.pos = 0

    def peek(self):
        return self.tlvs[self.pos][0] if self.pos < len(self.tlvs) else None

    def expect(self, t: int, size: int | None = None) -> bytes:
        if self.peek() != t:
            what = _FIELD_NAMES[t]
            if all(tt != t for tt, _ in self.tlvs):
                raise MissingField(f"{what} absent")
            raise MalformedField(f"{what} out of order")
        value = self.tlvs[self.pos][1]
        if size is not None and len(value) != size:
            raise MalformedField(f"{_FIELD_NAMES[t]} must be {size} byte(s), got {len(value)}")
        self.pos += 1
        return value

    def name(self) -> Name:
        comps = []
        while self.peek() == T_NAME_COMPONENT:
            comps.append(self.tlvs[self.pos][1])
            self.pos += 1
        if not comps:
            if all(t != T_NAME_COMPONENT for t, _ in self.tlvs[self.pos:]):
                raise MissingField("NAME_COMPONENT absent")
            raise MalformedField("NAME_COMPONENT out of order")
        if len(comps) > MAX_COMPONENTS:
            raise MalformedField(f"name has {len(comps)} components (max {MAX_COMPONENTS})")
        for c in comps:
            if not 1 <= len(c) <= MAX_COMPONENT_LEN:
                raise MalformedField(f"name component of {len(c)} bytes")
        return Name(tuple(comps))

    def finish(self) -> None:
        if self.pos != len(self.tlvs):
            raise TrailingGarbage(f"{len(self.tlvs) - self.pos} TLV(s) after the last field")


# singleton TLV types per packet type; a second occurrence is a DuplicateField
_SINGLETONS = {
    PT_INTEREST: (T_NONCE, T_HOP_LIMIT),
    PT_DATA: (T_PAYLOAD,),
    PT_SUBSCRIBE: (),
    PT_UNSUBSCRIBE: (),
    PT_PUBLISH: (T_PAYLOAD, T_SNIPPET, T_SEQ),
}


def decode(frame: bytes) -> Packet:
    """Parse a frame; raises a CodecError subclass for anything non-canonical."""
    frame = bytes(frame)
    if not frame:
        raise TruncatedTlv("empty frame")
    if len(frame) > MTU:
        raise OversizeFrame(f"{len(frame)}-byte frame exceeds MTU {MTU}")
    ptype = frame[0]
    if ptype not in _SINGLETONS:
        raise UnknownPacketType(f"packet type 0x{ptype:02x}")
    tlvs = _split_tlvs(frame)
    for t, _ in tlvs:
        if t not in _FIELD_NAMES:
            raise MalformedField(f"unknown TLV type 0x{t:02x}")
    for t in _SINGLETONS[ptype]:
        if sum(1 for tt, _ in tlvs if tt == t) > 1:
            raise DuplicateField(_FIELD_NAMES[t])

    r = _Reader(tlvs)
    if ptype == PT_INTEREST:
        name = r.name()
        nonce = int.from_bytes(r.expect(T_NONCE, 4), "big")
        hop = r.expect(T_HOP_LIMIT, 1)[0]
        pkt = Interest(name, nonce, hop)
    elif ptype == PT_DATA:
        name = r.name()
        pkt = Data(name, r.expect(T_PAYLOAD))
    elif ptype in (PT_SUBSCRIBE, PT_UNSUBSCRIBE):
        cls = Subscribe if ptype == PT_SUBSCRIBE else Unsubscribe
        pkt = cls(r.name())
    else:
        cds = []
        r.expect(T_CD_BEGIN, 0)
        cds.append(r.name())
        while r.peek() == T_CD_BEGIN:
            r.expect(T_CD_BEGIN, 0)
            cds.append(r.name())
        if len(cds) > MAX_CDS:
            raise TooManyCds(f"{len(cds)} content descriptors (max {MAX_CDS})")
        payload = r.expect(T_PAYLOAD)
        flag = r.expect(T_SNIPPET, 1)[0]
        if flag > 1:
            raise MalformedField(f"SNIPPET flag {flag}")
        seq = int.from_bytes(r.expect(T_SEQ, 4), "big")
        pkt = Publish(tuple(cds), payload, bool(flag), seq)
    r.finish()
    return pkt

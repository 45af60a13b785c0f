"""Hierarchical names, content descriptors and longest-prefix matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional
from urllib.parse import quote, unquote_to_bytes

MAX_COMPONENTS = 8
MAX_COMPONENT_LEN = 32

# Face ids <= 0 are application endpoints on the node itself; radio faces start at 1.
CONSUMER_FACE = 0
PRODUCER_FACE = -1

# unreserved characters per RFC 3986 stay literal in the text form
_SAFE = "-._~"


def is_local(face: int) -> bool:
    return face <= CONSUMER_FACE


class MalformedName(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Name:
    components: tuple[bytes, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise MalformedName("a name needs at least one component")
        if len(comps) > MAX_COMPONENTS:
            raise MalformedName(f"{len(comps)} components (max {MAX_COMPONENTS})")
        for c in comps:
            if not isinstance(c, bytes):
                raise MalformedName(f"component {c!r} is not bytes")
            if not 1 <= len(c) <= MAX_COMPONENT_LEN:
                raise MalformedName(f"component length {len(c)} outside 1..{MAX_COMPONENT_LEN}")

    @classmethod
    def of(cls, *parts: str | bytes) -> Name:
        return cls(tuple(p.encode() if isinstance(p, str) else p for p in parts))

    def __str__(self) -> str:
        return "/" + "/".join(quote(c, safe=_SAFE) for c in self.components)

    def __repr__(self) -> str:
        return f"Name({str(self)!r})"

    def __len__(self) -> int:
        return len(self.components)

    def child(self, component: str | bytes) -> Name:
        if isinstance(component, str):
            component = component.encode()
        return Name(self.components + (component,))

    def prefixes(self) -> Iterator[Name]:
        """Yield every prefix of this name, longest first (the name itself included)."""
        for n in range(len(self.components), 0, -1):
            yield Name(self.components[:n])


# A content descriptor is structurally a name used on the pub/sub plane.
ContentDescriptor = Name


def parse_name(text: str) -> Name:
    """Parse the canonical ``/c1/c2`` text form.

    Components are percent-decoded, so ``render(parse_name(t))`` is the
    canonical spelling of ``t``. A single trailing slash is tolerated.
    """
    if not isinstance(text, str) or not text.startswith("/"):
        raise MalformedName(f"{text!r}: missing leading '/'")
    body = text[1:]
    if body.endswith("/"):
        body = body[:-1]
    if not body:
        raise MalformedName(f"{text!r}: no components")
    parts = body.split("/")
    if any(p == "" for p in parts):
        raise MalformedName(f"{text!r}: empty component")
    return Name(tuple(unquote_to_bytes(p) for p in parts))


def render(name: Name) -> str:
    return str(name)


def is_prefix(prefix: Name, name: Name) -> bool:
    n = len(prefix.components)
    return n <= len(name.components) and name.components[:n] == prefix.components


def cd_matches(subscribed: Name, published: Iterable[Name]) -> bool:
    """Hierarchical subscription match: ``/sensors`` receives ``/sensors/temp``."""
    published = list(published)
    if not published:
        raise ValueError("a publication carries at least one content descriptor")
    return any(is_prefix(subscribed, cd) for cd in published)


class FibTable:
    """Name prefix -> set of outgoing faces."""

    def __init__(self, entries: Optional[dict[Name, Iterable[int]]] = None):
        self._entries: dict[Name, frozenset[int]] = {}
        for prefix, faces in (entries or {}).items():
            for face in faces:
                self.add(prefix, face)

    def add(self, prefix: Name, face: int) -> None:
        self._entries[prefix] = self._entries.get(prefix, frozenset()) | {face}

    def remove(self, prefix: Name, face: Optional[int] = None) -> None:
        if face is None:
            self._entries.pop(prefix, None)
            return
        faces = self._entries.get(prefix, frozenset()) - {face}
        if faces:
            self._entries[prefix] = faces
        else:
            self._entries.pop(prefix, None)

    def get(self, prefix: Name) -> Optional[frozenset[int]]:
        return self._entries.get(prefix)

    def lookup(self, name: Name) -> Optional[tuple[Name, frozenset[int]]]:
        # prefixes are unique keys, so walking from the longest prefix down is an exact LPM
        for prefix in name.prefixes():
            faces = self._entries.get(prefix)
            if faces is not None:
                return prefix, faces
        return None

    def items(self):
        return sorted(self._entries.items())

    def copy(self) -> FibTable:
        fib = FibTable()
        fib._entries = dict(self._entries)
        return fib

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, prefix: Name) -> bool:
        return prefix in self._entries

    def __eq__(self, other) -> bool:
        return isinstance(other, FibTable) and self._entries == other._entries

    def __repr__(self) -> str:
        body = ", ".join(f"{p}->{sorted(f)}" for p, f in self.items())
        return f"FibTable({{{body}}})"


def longest_prefix_match(fib: FibTable, name: Name) -> Optional[tuple[Name, frozenset[int]]]:
    return fib.lookup(name)

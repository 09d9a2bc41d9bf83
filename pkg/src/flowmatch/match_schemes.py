"""Catalog of flow match-field combinations and packet-to-key projection.

A matching scheme selects which packet header fields a flow entry compares.
Scheme 0 (MAC-destination only) aggregates hardest; scheme 8 (all fields)
keeps full per-flow granularity. The enabled-field count of a scheme is its
granularity measure.
"""

from __future__ import annotations

import enum
import operator
from dataclasses import dataclass
from typing import NamedTuple


class MatchField(enum.IntEnum):
    """The eight header fields a flow entry can match on (fixed order)."""

    ETH_SRC = 0
    ETH_DST = 1
    VLAN_ID = 2
    IPV4_SRC = 3
    IPV4_DST = 4
    IP_PROTO = 5
    L4_SRC = 6
    L4_DST = 7


class PacketKey(NamedTuple):
    """Header fields of one packet. Ports are 0 for ICMP."""

    src_mac: str
    dst_mac: str
    vlan: int
    src_ip: str
    dst_ip: str
    proto: str
    src_port: int
    dst_port: int


_FIELD_ATTR = {
    MatchField.ETH_SRC: "src_mac",
    MatchField.ETH_DST: "dst_mac",
    MatchField.VLAN_ID: "vlan",
    MatchField.IPV4_SRC: "src_ip",
    MatchField.IPV4_DST: "dst_ip",
    MatchField.IP_PROTO: "proto",
    MatchField.L4_SRC: "src_port",
    MatchField.L4_DST: "dst_port",
}


@dataclass(frozen=True)
class MatchScheme:
    """One match-field combination. Granularity is non-decreasing in id."""

    id: int
    fields: frozenset[MatchField]

    @property
    def theta(self) -> int:
        """Number of enabled match fields (1..8)."""
        return len(self.fields)

    def enables(self, field: MatchField) -> bool:
        return field in self.fields


def _scheme(sid: int, *fields: MatchField) -> MatchScheme:
    return MatchScheme(sid, frozenset(fields))


# Fixed scheme ladder. ETH_DST is enabled everywhere so per-destination
# scheme changes are always well-defined; enabled-field counts must be
# non-decreasing in id (1,2,2,3,3,4,4,5,8).
_D = MatchField.ETH_DST
_S = MatchField.ETH_SRC
_V = MatchField.VLAN_ID
_IS = MatchField.IPV4_SRC
_ID = MatchField.IPV4_DST
_PR = MatchField.IP_PROTO
_LS = MatchField.L4_SRC
_LD = MatchField.L4_DST

_CATALOG: tuple[MatchScheme, ...] = (
    _scheme(0, _D),
    _scheme(1, _D, _S),
    _scheme(2, _D, _ID),
    _scheme(3, _D, _S, _V),
    _scheme(4, _D, _ID, _IS),
    _scheme(5, _D, _S, _ID, _IS),
    _scheme(6, _D, _ID, _IS, _PR),
    _scheme(7, _D, _ID, _IS, _PR, _LD),
    _scheme(8, _D, _S, _V, _ID, _IS, _PR, _LS, _LD),
)

MMOS_ID = 0
FMS_ID = 8

N_SCHEMES = len(_CATALOG)


def catalog() -> tuple[MatchScheme, ...]:
    """The fixed, ordered ladder of 9 matching schemes."""
    return _CATALOG


def theta(scheme: MatchScheme) -> int:
    """Granularity of a scheme: the number of enabled match fields."""
    return scheme.theta


# per-scheme extractors for the catalog's schemes (hot path)
_EXTRACTORS = {
    s.id: operator.attrgetter(*(_FIELD_ATTR[f] for f in sorted(s.fields)))
    for s in _CATALOG
}


def project(packet: PacketKey, scheme: MatchScheme) -> tuple:
    """Restrict a packet to the fields enabled by a scheme.

    Two packets that agree on every enabled field project to equal keys;
    disabled fields never influence the key. The scheme id is part of the
    key so keys produced under different schemes never collide.
    """
    getter = _EXTRACTORS.get(scheme.id)
    if getter is not None and scheme is _CATALOG[scheme.id]:
        values = getter(packet)
        if scheme.theta == 1:
            return (scheme.id, values)
        return (scheme.id, *values)
    values = tuple(getattr(packet, _FIELD_ATTR[f]) for f in sorted(scheme.fields))
    return (scheme.id, *values)


def catalog_text() -> str:
    """Human-readable dump of the scheme catalog (id, theta, field names)."""
    lines = ["id  theta  fields"]
    for s in catalog():
        names = ",".join(f.name for f in sorted(s.fields))
        lines.append(f"{s.id:<3d} {s.theta:<6d} {names}")
    return "\n".join(lines) + "\n"

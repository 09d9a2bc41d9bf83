"""Simulated SDN switch flow table.

Models install-on-miss, idle-timeout expiry, a hard capacity limit and
per-destination matching-scheme assignment. All timestamps are simulated
integer milliseconds; nothing here reads the wall clock.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import NamedTuple

from .match_schemes import (
    FMS_ID,
    MatchField,
    MatchScheme,
    PacketKey,
    catalog,
    project,
)


class PacketOutcome(enum.Enum):
    HIT = "HIT"
    MISS_INSTALLED = "MISS_INSTALLED"
    MISS_REJECTED = "MISS_REJECTED"


@dataclass
class FlowEntry:
    key: tuple
    scheme_id: int
    dst_host: str
    installed_at: int
    last_hit: int
    pkt_count: int = 1
    # (src_ip, dst_ip) when the scheme matches both, else None
    ip_pair: tuple[str, str] | None = None


class Observation(NamedTuple):
    """MDP observation: entry count and its change since the last observe."""

    f: int
    delta_f: int
    t: int


SNAPSHOT_HEADER = "dst,scheme_id,theta,age_ms,pkt_count"


class FlowTable:
    """A single switch's flow table, owned by exactly one scenario run.

    Destinations are identified by destination IP (host MAC and IP are a
    fixed bijection per scenario, so either would do). A destination's
    scheme defaults to ``default_scheme_id`` until changed.
    """

    def __init__(self, f_cap: int, idle_timeout_ms: int,
                 default_scheme_id: int = FMS_ID):
        if f_cap <= 0:
            raise ValueError("f_cap must be positive")
        if idle_timeout_ms <= 0:
            raise ValueError("idle_timeout_ms must be positive")
        self.f_cap = f_cap
        self.idle_timeout_ms = idle_timeout_ms
        self.default_scheme_id = default_scheme_id
        self.entries: dict[tuple, FlowEntry] = {}
        self.per_dst_scheme: dict[str, int] = {}
        self.prev_f = 0
        # cumulative counters, useful for conservation checks
        self.expired_total = 0
        self.deleted_total = 0
        self.installed_total = 0
        # per-destination cumulative packets (hits + installs), for rate probes
        self.dst_pkt_totals: dict[str, int] = {}
        self._dst_keys: dict[str, set[tuple]] = {}
        self._deadlines: list[tuple[int, tuple]] = []  # (expiry_ms, key), lazy
        self._catalog = catalog()

    @property
    def f(self) -> int:
        return len(self.entries)

    def scheme_for(self, dst_host: str) -> int:
        return self.per_dst_scheme.get(dst_host, self.default_scheme_id)

    def process_packet(self, packet: PacketKey, now: int) -> PacketOutcome:
        """Match a packet; on miss install an entry if capacity allows."""
        dst = packet.dst_ip
        scheme = self._catalog[self.scheme_for(dst)]
        key = project(packet, scheme)
        entry = self.entries.get(key)
        if entry is not None:
            entry.pkt_count += 1
            entry.last_hit = now
            self.dst_pkt_totals[dst] = self.dst_pkt_totals.get(dst, 0) + 1
            return PacketOutcome.HIT
        if len(self.entries) >= self.f_cap:
            return PacketOutcome.MISS_REJECTED
        self._install(key, scheme, packet, dst, now)
        self.dst_pkt_totals[dst] = self.dst_pkt_totals.get(dst, 0) + 1
        return PacketOutcome.MISS_INSTALLED

    def _install(self, key: tuple, scheme: MatchScheme, packet: PacketKey,
                 dst: str, now: int) -> None:
        ip_pair = None
        if scheme.enables(MatchField.IPV4_SRC) and scheme.enables(MatchField.IPV4_DST):
            ip_pair = (packet.src_ip, packet.dst_ip)
        self.entries[key] = FlowEntry(key, scheme.id, dst, now, now,
                                      ip_pair=ip_pair)
        self.per_dst_scheme.setdefault(dst, scheme.id)
        self._dst_keys.setdefault(dst, set()).add(key)
        heapq.heappush(self._deadlines, (now + self.idle_timeout_ms, key))
        self.installed_total += 1

    def expire(self, now: int) -> int:
        """Remove every entry idle for at least the idle timeout."""
        removed = 0
        dl = self._deadlines
        while dl and dl[0][0] <= now:
            _, key = heapq.heappop(dl)
            entry = self.entries.get(key)
            if entry is None:
                continue  # stale deadline of an already removed entry
            due = entry.last_hit + self.idle_timeout_ms
            if due <= now:
                self._remove(key, entry.dst_host)
                removed += 1
            else:
                heapq.heappush(dl, (due, key))  # was refreshed meanwhile
        self.expired_total += removed
        return removed

    def _remove(self, key: tuple, dst: str) -> None:
        del self.entries[key]
        keys = self._dst_keys.get(dst)
        if keys is not None:
            keys.discard(key)
            if not keys:
                del self._dst_keys[dst]

    def observe(self, now: int) -> Observation:
        """Emit (f, delta_f) once per observation period."""
        f = len(self.entries)
        obs = Observation(f, f - self.prev_f, now)
        self.prev_f = f
        return obs

    def change_scheme(self, dst_host: str, new_scheme: MatchScheme,
                      seed_packet: PacketKey | None = None,
                      now: int = 0) -> int:
        """Switch a destination to a new scheme, deleting its entries.

        Changing to the already-active scheme is a no-op. Returns the number
        of entries deleted. When a seed packet is given and capacity allows,
        one entry under the new scheme is installed immediately; otherwise
        the destination repopulates through subsequent misses.
        """
        if new_scheme.id == self.scheme_for(dst_host):
            self.per_dst_scheme.setdefault(dst_host, new_scheme.id)
            return 0
        doomed = list(self._dst_keys.get(dst_host, ()))
        for key in doomed:
            self._remove(key, dst_host)
        self.deleted_total += len(doomed)
        self.per_dst_scheme[dst_host] = new_scheme.id
        if seed_packet is not None and len(self.entries) < self.f_cap:
            key = project(seed_packet, new_scheme)
            self._install(key, new_scheme, seed_packet, dst_host, now)
        return len(doomed)

    def dst_flow_census(self) -> tuple[list[tuple[str, int]], int]:
        """Per-destination entry counts plus the unique IP-pair count.

        The census partitions the table (counts sum to f). The IP-pair count
        only covers entries whose scheme matches both IPv4 addresses;
        MAC-aggregated entries contribute nothing.
        """
        census = sorted(((dst, len(keys)) for dst, keys in self._dst_keys.items()),
                        key=lambda item: (-item[1], item[0]))
        pairs = {e.ip_pair for e in self.entries.values() if e.ip_pair is not None}
        return census, len(pairs)

    def snapshot_csv(self, now: int) -> str:
        """Debug dump of the current entries, one CSV row per entry."""
        lines = [SNAPSHOT_HEADER]
        for e in self.entries.values():
            theta = self._catalog[e.scheme_id].theta
            lines.append(f"{e.dst_host},{e.scheme_id},{theta},{now - e.installed_at},{e.pkt_count}")
        return "\n".join(lines) + "\n"

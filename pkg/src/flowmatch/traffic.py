"""Seeded packet stream generators: benign load and three DoS patterns.

Every generator is a pure function of (spec, window): packet n of a stream
is derived from its own counter-seeded RNG, so any window of the stream can
be produced independently, in any order, with identical results.

Rates count new-flow packets per second (worst case: every packet may
install a fresh entry under full matching).
"""

from __future__ import annotations

from dataclasses import dataclass

from .match_schemes import PacketKey

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class _PacketRng:
    """Tiny counter-based mixer (splitmix64): cheap to seed per packet,
    deterministic across platforms, uniform enough for draw bounds far
    below 2**64."""

    __slots__ = ("_state",)

    def __init__(self, seed: int, n: int):
        self._state = ((seed & _MASK64) ^ ((n * 0xD1B54A32D192ED03) & _MASK64))

    def draw(self, bound: int) -> int:
        """Next value in [0, bound)."""
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) % bound


BENIGN = "BENIGN"
SYN_FLOOD = "SYN_FLOOD"
PORT_SCAN = "PORT_SCAN"
SLOW_DOS = "SLOW_DOS"

KINDS = (BENIGN, SYN_FLOOD, PORT_SCAN, SLOW_DOS)


@dataclass(frozen=True)
class Host:
    name: str
    mac: str
    ip: str
    role: str  # "HOST" or "SERVER"


def make_topology(num_hosts: int = 5, num_servers: int = 3) -> tuple[Host, ...]:
    """Hosts H1..Hn and servers S1..Sm with a fixed MAC<->IP bijection."""
    hosts = [Host(f"H{i + 1}", f"00:00:00:00:00:{i + 1:02x}", f"10.0.0.{i + 1}", "HOST")
             for i in range(num_hosts)]
    servers = [Host(f"S{j + 1}", f"00:00:00:00:01:{j + 1:02x}", f"10.0.1.{j + 1}", "SERVER")
               for j in range(num_servers)]
    return tuple(hosts + servers)


@dataclass(frozen=True)
class TrafficSpec:
    """One traffic stream active on [start_s, end_s)."""

    kind: str
    rate: float
    start_s: float
    end_s: float
    targets: tuple[Host, ...]
    sources: tuple[Host, ...]
    seed: int | None = None    # None = derived from the scenario seed
    scan_ports: int = 1024     # PORT_SCAN sweep width
    refresh_s: float = 9.0     # SLOW_DOS re-emit period (idle_timeout - 1)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown traffic kind {self.kind!r}")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.start_s >= self.end_s:
            raise ValueError("start_s must precede end_s")
        if not self.targets or not self.sources:
            raise ValueError("targets and sources must be non-empty")

    @property
    def start_ms(self) -> int:
        return int(self.start_s * 1000)

    @property
    def end_ms(self) -> int:
        return int(self.end_s * 1000)


def _rng(spec: TrafficSpec, n: int) -> _PacketRng:
    # independent, reproducible stream per packet index
    if spec.seed is None:
        raise ValueError("TrafficSpec.seed is unresolved; set it explicitly")
    return _PacketRng(spec.seed, n)


def _benign_time(spec: TrafficSpec, n: int) -> int:
    # jittered arrival inside packet n's nominal slot
    jitter = _rng(spec, n).draw(1000)
    return spec.start_ms + int((n * 1000 + jitter) / spec.rate)


def _uniform_time(spec: TrafficSpec, n: int) -> int:
    return spec.start_ms + int(n * 1000 / spec.rate)


def _index_candidates(spec: TrafficSpec, t0: int, t1: int) -> range:
    lo = max(0, int((t0 - spec.start_ms) * spec.rate / 1000) - 2)
    hi = int((t1 - spec.start_ms) * spec.rate / 1000) + 2
    return range(lo, hi)


def _benign_packet(spec: TrafficSpec, n: int) -> PacketKey:
    rng = _rng(spec, n)
    rng.draw(1000)  # skip the jitter draw so times and headers stay aligned
    src = spec.sources[rng.draw(len(spec.sources))]
    dst = spec.targets[rng.draw(len(spec.targets))]
    sport = 1024 + rng.draw(64512)
    dport = 443 if rng.draw(2) else 80
    return PacketKey(src.mac, dst.mac, 0, src.ip, dst.ip, "TCP", sport, dport)


def _flood_packet(spec: TrafficSpec, n: int) -> PacketKey:
    rng = _rng(spec, n)
    src = spec.sources[rng.draw(len(spec.sources))]
    dst = spec.targets[rng.draw(len(spec.targets))]
    # spoofed source IP, injective in the packet index: every packet is a
    # distinct flow under any scheme that matches the source address
    spoofed = f"198.{(n >> 16) & 255}.{(n >> 8) & 255}.{n & 255}"
    sport = 1024 + rng.draw(64512)
    return PacketKey(src.mac, dst.mac, 0, spoofed, dst.ip, "TCP", sport, 80)


def _scan_packet(spec: TrafficSpec, n: int) -> PacketKey:
    rng = _rng(spec, n)
    src = spec.sources[0]
    dst = spec.targets[n % len(spec.targets)]
    dport = 1 + (n // len(spec.targets)) % spec.scan_ports
    sport = 1024 + rng.draw(64512)
    return PacketKey(src.mac, dst.mac, 0, src.ip, dst.ip, "TCP", sport, dport)


def _slow_dos_key(spec: TrafficSpec, k: int) -> PacketKey:
    src = spec.sources[k % len(spec.sources)]
    dst = spec.targets[(k // len(spec.sources)) % len(spec.targets)]
    sport = 1024 + k % 64000
    return PacketKey(src.mac, dst.mac, 0, src.ip, dst.ip, "TCP", sport, 80)


def _generate_indexed(spec: TrafficSpec, t0: int, t1: int, time_fn, packet_fn):
    out = []
    for n in _index_candidates(spec, t0, t1):
        t = time_fn(spec, n)
        if t0 <= t < t1 and t < spec.end_ms:
            out.append((t, packet_fn(spec, n)))
    return out


def _generate_slow_dos(spec: TrafficSpec, t0: int, t1: int):
    """New keys trickle in at `rate`; every live key re-emits each refresh
    period so its flow entry never idles out."""
    refresh_ms = max(1, int(spec.refresh_s * 1000))
    out = []
    total_keys = int((min(t1, spec.end_ms) - spec.start_ms) * spec.rate / 1000) + 2
    for k in range(total_keys):
        born = _uniform_time(spec, k)
        if born >= min(t1, spec.end_ms):
            continue
        pkt = None
        if t0 <= born < t1:
            pkt = _slow_dos_key(spec, k)
            out.append((born, pkt))
        # refresh emissions of key k falling inside the window
        m_lo = max(1, -(-(t0 - born) // refresh_ms))  # ceil division
        t = born + m_lo * refresh_ms
        while t < t1 and t < spec.end_ms:
            if t >= t0:
                if pkt is None:
                    pkt = _slow_dos_key(spec, k)
                out.append((t, pkt))
            t += refresh_ms
    out.sort(key=lambda item: item[0])
    return out


def generate(spec: TrafficSpec, window: tuple[int, int]) -> list[tuple[int, PacketKey]]:
    """All (timestamp_ms, packet) emissions of a stream inside [t0, t1).

    Deterministic in (spec, window); sorted by timestamp. Windows outside
    the spec lifetime yield an empty list.
    """
    t0, t1 = window
    t0 = max(t0, spec.start_ms)
    t1 = min(t1, spec.end_ms)
    if t0 >= t1:
        return []
    if spec.kind == BENIGN:
        return _generate_indexed(spec, t0, t1, _benign_time, _benign_packet)
    if spec.kind == SYN_FLOOD:
        return _generate_indexed(spec, t0, t1, _uniform_time, _flood_packet)
    if spec.kind == PORT_SCAN:
        return _generate_indexed(spec, t0, t1, _uniform_time, _scan_packet)
    return _generate_slow_dos(spec, t0, t1)


def merge_streams(specs, window: tuple[int, int]) -> list[tuple[int, PacketKey]]:
    """Timestamp-ordered merge of several streams over one window."""
    merged = []
    for spec in specs:
        merged.extend(generate(spec, window))
    merged.sort(key=lambda item: item[0])
    return merged


TRACE_HEADER = "ts_ms,src_mac,dst_mac,vlan,src_ip,dst_ip,proto,sport,dport"


def trace_csv(packets) -> str:
    """Dump a packet trace as CSV (fixed column order)."""
    lines = [TRACE_HEADER]
    for t, p in packets:
        lines.append(f"{t},{p.src_mac},{p.dst_mac},{p.vlan},{p.src_ip},"
                     f"{p.dst_ip},{p.proto},{p.src_port},{p.dst_port}")
    return "\n".join(lines) + "\n"

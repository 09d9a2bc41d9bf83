"""Lifecycle of entries in the simulated flow table.

Walks through install-on-miss, hits, idle-timeout expiry, the hard capacity
limit, and a per-destination scheme change (delete entries, re-aggregate).
"""

from flowmatch import FlowTable, MMOS_ID, PacketKey, catalog

table = FlowTable(f_cap=10, idle_timeout_ms=10_000)


def pkt(sport):
    return PacketKey("00:00:00:00:00:01", "00:00:00:00:01:01", 0,
                     "10.0.0.1", "10.0.1.1", "TCP", sport, 80)


print("install on miss, then a hit:")
print("  first packet  ->", table.process_packet(pkt(1000), now=0).value)
print("  same packet   ->", table.process_packet(pkt(1000), now=500).value)
print("  table size    ->", table.f)

print("\nfill to capacity and overflow:")
for sport in range(1001, 1010):
    table.process_packet(pkt(sport), now=1_000)
print("  table size    ->", table.f, "of", table.f_cap)
print("  novel packet  ->", table.process_packet(pkt(2000), now=1_100).value)

print("\nidle expiry (timeout 10 s):")
removed = table.expire(now=11_000)
print("  expired at t=11 s ->", removed, "entries (all idle since t=1 s)")
print("  table size    ->", table.f)

print("\nscheme change to MAC-only matching aggregates the destination:")
for sport in range(3000, 3005):
    table.process_packet(pkt(sport), now=12_000)
print("  before:", table.f, "entries under full matching")
deleted = table.change_scheme("10.0.1.1", catalog()[MMOS_ID],
                              seed_packet=pkt(3000), now=12_500)
print("  change deleted", deleted, "entries, reseeded 1 aggregate ->", table.f)

census, n_ip = table.dst_flow_census()
print("\ncensus:", census, " unique IP pairs:", n_ip)
print("\nsnapshot dump:")
print(table.snapshot_csv(now=13_000))

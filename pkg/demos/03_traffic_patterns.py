"""What the four traffic generators emit.

Benign traffic draws source/destination/ports per packet; the SYN flood
spoofs a fresh source IP per packet (every packet is a new flow under full
matching); the port scan sweeps destination ports from one source; the
low-and-slow stream re-emits every key just inside the idle timeout so its
entries never expire.
"""

from collections import Counter

from flowmatch import FMS_ID, catalog, project
from flowmatch.traffic import (
    BENIGN, PORT_SCAN, SLOW_DOS, SYN_FLOOD,
    TrafficSpec, make_topology, generate, trace_csv,
)

hosts = make_topology()
clients = tuple(h for h in hosts if h.role == "HOST")
servers = tuple(h for h in hosts if h.role == "SERVER")
fms = catalog()[FMS_ID]

for kind, rate in ((BENIGN, 30.0), (SYN_FLOOD, 30.0), (PORT_SCAN, 30.0), (SLOW_DOS, 2.0)):
    spec = TrafficSpec(kind, rate, 0.0, 120.0, (servers[0],), clients, seed=1)
    window = generate(spec, (60_000, 70_000))  # one 10 s window, mid-stream
    keys = {project(p, fms) for _, p in window}
    srcs = Counter(p.src_ip for _, p in window)
    print(f"{kind:10s} rate={rate:5.1f}/s  packets={len(window):4d}  "
          f"distinct flows={len(keys):4d}  distinct src IPs={len(srcs):4d}")

print()
print("first packets of the flood, as a trace CSV:")
flood = TrafficSpec(SYN_FLOOD, 30.0, 0.0, 120.0, (servers[0],), clients, seed=1)
print("\n".join(trace_csv(generate(flood, (0, 200))).splitlines()[:6]))

print()
print("low-and-slow refresh behavior: keys born early keep reappearing")
slow = TrafficSpec(SLOW_DOS, 2.0, 0.0, 120.0, (servers[0],), clients, seed=1)
early = {p for _, p in generate(slow, (0, 10_000))}
late = {p for _, p in generate(slow, (100_000, 110_000))}
print(f"  keys from the first window still emitted 100 s later: "
      f"{len(early & late)}/{len(early)}")

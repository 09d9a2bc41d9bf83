"""The matching-scheme ladder and what each scheme sees of a packet.

Scheme 0 matches on the destination MAC alone (maximal aggregation), scheme
8 on every header field (maximal granularity). Each destination host in the
simulated switch is assigned one scheme at a time.
"""

from flowmatch import PacketKey, catalog, project
from flowmatch.match_schemes import catalog_text

print(catalog_text())

pkt = PacketKey("00:00:00:00:00:01", "00:00:00:00:01:01", 0,
                "10.0.0.1", "10.0.1.1", "TCP", 40123, 443)
other = pkt._replace(src_port=40124)  # same flow except the ephemeral port

print("packet:", pkt)
print()
for scheme in catalog():
    same = project(pkt, scheme) == project(other, scheme)
    print(f"scheme {scheme.id} (theta={scheme.theta}): "
          f"key={project(pkt, scheme)!r:90s} groups-with-port-sibling={same}")

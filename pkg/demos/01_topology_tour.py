"""Tour of the topology generator.

Builds a small company-style network, inspects its structure, shows the
deterministic text export, then builds a deliberately fragmented variant and
demonstrates that removing the bridge splits it in two.
"""

import io
from collections import Counter

from sentinet import TopologyConfig, generate_topology, save_topology

config = TopologyConfig(node_count=40, backbone_redundancy=0.4, seed=7)
topology = generate_topology(config)

print("== 40-node network ==")
print("roles:", dict(Counter(role.value for role in topology.roles)))
print("edges:", len(topology.edges))
print("gateway node:", topology.gateway)

degrees = [topology.degree(v) for v in range(topology.node_count)]
print("degree range:", min(degrees), "to", max(degrees))

gateway_dist = topology.hop_distances(topology.gateway)
print("network radius from gateway:", int(gateway_dist.max()))

print("\nfirst lines of the text export:")
buffer = io.StringIO()
save_topology(topology, "/tmp/demo_net.topo")
with open("/tmp/demo_net.topo", encoding="utf-8") as handle:
    for line in list(handle)[:6]:
        print("   ", line.rstrip())

print("\n== fragmented variant ==")
frag = generate_topology(
    TopologyConfig(node_count=40, fragment_count=2, bridges_per_fragment_pair=1, seed=7)
)
bridge = frag.bridge_edges[0]
print(f"bridge link: {bridge.u} -- {bridge.v}")
whole = frag.connected_components()
split = frag.connected_components(skip_links={bridge.link_id})
print("components with bridge:", len(whole), "| without bridge:", len(split))
print("fragment sizes:", [len(c) for c in split])

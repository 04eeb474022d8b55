"""The deficiency-notification flood, step by step.

A single node advertises a shortfall and the packet spreads one hop per
step, losing one unit of value per relay. Nodes exactly `value` hops away
are the last to hear; anyone further never does. Bigger shortfalls are
louder: the reach grows with the advertised value.
"""

from collections import Counter

from sentinet import TopologyConfig, flood_trace, generate_topology

topology = generate_topology(TopologyConfig(node_count=60, seed=11))
origin = topology.gateway
distance = topology.hop_distances(origin)

for value in (2.0, 4.0, 7.0):
    arrivals, first_values, per_step = flood_trace(topology, origin, value)
    print(f"== shortfall of {value:.0f} advertised by node {origin} ==")
    by_step = Counter(arrivals.values())
    for step in sorted(by_step):
        nodes = sorted(n for n, s in arrivals.items() if s == step)
        seen = first_values[nodes[0]]
        print(
            f"  step {step}: {by_step[step]:3d} nodes hear value {seen:.0f} "
            f"(all at hop distance {step}: "
            f"{all(distance[n] == step for n in nodes)})"
        )
    reached = len(arrivals)
    in_ball = int(((distance > 0) & (distance <= value)).sum())
    print(f"  reached {reached} nodes; BFS ball of radius {value:.0f} holds {in_ball}")
    print(f"  packets on the wire per step: {per_step}\n")

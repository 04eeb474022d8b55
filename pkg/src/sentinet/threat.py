"""Traffic and intrusion model: packets that may carry intrusions, node
infections, and detection by type-matched checkers.

External packets enter at the gateway and walk a shortest path to a uniform
destination, one hop per step, inspected at every node on the way including
both ends. Internal attacks are introduced directly at a uniformly chosen
endpoint node (its own single-node path). An infected packet that survives
inspection all the way installs an infection at its destination; infections
sit on the node until a node checker of the matching type clears them.
Detection is exact type matching with no false positives or negatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .cells import Cell, CellKind
from .topology import NodeRole, Topology


@dataclass
class TrafficConfig:
    packets_per_step: int = 0
    infection_probability: float = 0.0
    internal_attack_rate: float = 0.0
    infections_per_step: float = 0.0

    def validate(self) -> None:
        if self.packets_per_step < 0:
            raise ValueError("packets_per_step must be non-negative")
        if not 0.0 <= self.infection_probability <= 1.0:
            raise ValueError("infection_probability must lie in [0, 1]")
        if self.internal_attack_rate < 0:
            raise ValueError("internal_attack_rate must be non-negative")
        if self.infections_per_step < 0:
            raise ValueError("infections_per_step must be non-negative")


@dataclass
class TrafficPacket:
    packet_id: int
    source: int
    destination: int
    path: list[int]
    position: int = 0
    payload: int | None = None

    @property
    def current_node(self) -> int:
        return self.path[self.position]

    @property
    def at_destination(self) -> bool:
        return self.position == len(self.path) - 1


@dataclass(frozen=True)
class Infection:
    node: int
    intrusion: int
    installed_at: int


@dataclass
class DirectInfection:
    node: int
    intrusion: int


class TrafficSource:
    """Deterministic per-step generator for packets and direct infections.

    Fractional rates are realised with carry-over accumulators, so e.g. a rate
    of 0.25 yields one event every fourth step exactly.
    """

    def __init__(self, config: TrafficConfig, topology: Topology, cell_types: int):
        config.validate()
        self.config = config
        self.topology = topology
        self.cell_types = cell_types
        self._next_packet_id = 0
        self._internal_carry = 0.0
        self._infection_carry = 0.0
        gateway = topology.gateway
        self._gateway_paths: dict[int, list[int]] = {}
        self._endpoints = [
            v
            for v, role in enumerate(topology.roles)
            if role in (NodeRole.WORKSTATION, NodeRole.SERVER)
        ]
        if not self._endpoints:
            self._endpoints = list(range(topology.node_count))
        self._gateway = gateway

    def _path_from_gateway(self, destination: int) -> list[int]:
        if destination not in self._gateway_paths:
            self._gateway_paths[destination] = self.topology.shortest_path(
                self._gateway, destination
            )
        return self._gateway_paths[destination]

    def _draw_payload(self, rng: np.random.Generator) -> int | None:
        if rng.random() < self.config.infection_probability:
            return int(rng.integers(1, self.cell_types + 1))
        return None

    def generate(
        self, timestep: int, rng: np.random.Generator
    ) -> tuple[list[TrafficPacket], list[DirectInfection]]:
        packets: list[TrafficPacket] = []
        n = self.topology.node_count
        for _ in range(self.config.packets_per_step):
            destination = int(rng.integers(0, n))
            if destination == self._gateway:
                destination = (destination + 1) % n
            packets.append(
                TrafficPacket(
                    packet_id=self._next_packet_id,
                    source=self._gateway,
                    destination=destination,
                    path=self._path_from_gateway(destination),
                    payload=self._draw_payload(rng),
                )
            )
            self._next_packet_id += 1

        self._internal_carry += self.config.internal_attack_rate
        while self._internal_carry >= 1.0:
            self._internal_carry -= 1.0
            node = self._endpoints[int(rng.integers(0, len(self._endpoints)))]
            packets.append(
                TrafficPacket(
                    packet_id=self._next_packet_id,
                    source=node,
                    destination=node,
                    path=[node],
                    payload=self._draw_payload(rng),
                )
            )
            self._next_packet_id += 1

        direct: list[DirectInfection] = []
        self._infection_carry += self.config.infections_per_step
        while self._infection_carry >= 1.0:
            self._infection_carry -= 1.0
            node = int(rng.integers(0, n))
            intrusion = int(rng.integers(1, self.cell_types + 1))
            direct.append(DirectInfection(node=node, intrusion=intrusion))
        return packets, direct


def inspect_packet(packet: TrafficPacket, resident_cells: Iterable[Cell]) -> bool:
    """True when the packet carries an intrusion some local packet checker knows."""
    if packet.payload is None:
        return False
    return any(
        c.kind is CellKind.PACKET_CHECKER and c.cell_type == packet.payload
        for c in resident_cells
    )


def packet_delivery_outcome(
    packet: TrafficPacket,
    detected: bool,
    active_infections: dict[tuple[int, int], Infection],
    timestep: int,
) -> Infection | None:
    """Resolve a packet at its destination; clean or caught packets vanish.

    A surviving infected packet installs an infection, unless the same
    (node, intrusion) pair is already active, which is kept unchanged.
    """
    if not packet.at_destination:
        raise ValueError("packet has not reached its destination")
    if detected or packet.payload is None:
        return None
    key = (packet.destination, packet.payload)
    if key in active_infections:
        return None
    infection = Infection(packet.destination, packet.payload, timestep)
    active_infections[key] = infection
    return infection


def check_node(
    cell: Cell, node: int, active_infections: dict[tuple[int, int], Infection]
) -> list[Infection]:
    """Clear and return the node's infections matching the checker's type."""
    if cell.kind is not CellKind.NODE_CHECKER:
        raise ValueError("only node checkers perform node checks")
    key = (node, cell.cell_type)
    found = active_infections.pop(key, None)
    return [found] if found is not None else []

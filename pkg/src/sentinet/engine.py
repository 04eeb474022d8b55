"""Discrete-time simulation loop with a fixed phase order per step.

Phases: (1) traffic movement and inspection, (2) node checks, (3) security
measurement and deficiency emission, (4) synchronous notification relay,
(5) trail fade, (6) cell movement per the active strategy, (7) metrics.

Strategies: `uninformed` cells wander with their resting probability and no
information; `centralized` cells wander the same way but an omniscient
manager teleports packet checkers onto deficits every step, paying
distance-priced control bandwidth; `protocols` enables the notification
and/or trail mechanisms, which inform movement locally.

A run is a pure function of its configuration: one master seed is split into
named, independent substreams (traffic, movement, selection) so toggling one
mechanism never perturbs another's draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .cells import MovementParams
from .metrics import MetricsReport
from .notify import NotifyParams
from .threat import Infection, TrafficConfig, TrafficPacket, TrafficSource
from .topology import NodeRole, Topology, TopologyConfig, generate_topology
from .trails import TrailParams, TrailState


class ConfigError(ValueError):
    """Invalid simulation configuration; the message names the offending key."""


_STREAM_TRAFFIC = 1
_STREAM_MOVEMENT = 2
_STREAM_SELECTION = 3


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


class StrategyKind(Enum):
    UNINFORMED = "uninformed"
    CENTRALIZED = "centralized"
    PROTOCOLS = "protocols"


@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind = StrategyKind.UNINFORMED
    notification_enabled: bool = False
    trails_enabled: bool = False

    def __post_init__(self) -> None:
        if self.kind is not StrategyKind.PROTOCOLS and (
            self.notification_enabled or self.trails_enabled
        ):
            raise ConfigError("strategy: only the protocols strategy takes protocol toggles")

    @classmethod
    def from_name(cls, name: str) -> "Strategy":
        table = {
            "uninformed": cls(StrategyKind.UNINFORMED),
            "centralized": cls(StrategyKind.CENTRALIZED),
            "notification": cls(StrategyKind.PROTOCOLS, notification_enabled=True),
            "trails": cls(StrategyKind.PROTOCOLS, trails_enabled=True),
            "protocols": cls(StrategyKind.PROTOCOLS, True, True),
        }
        if name not in table:
            raise ConfigError(f"strategy: unknown strategy {name!r}")
        return table[name]

    @property
    def name(self) -> str:
        if self.kind is not StrategyKind.PROTOCOLS:
            return self.kind.value
        if self.notification_enabled and self.trails_enabled:
            return "protocols"
        if self.notification_enabled:
            return "notification"
        if self.trails_enabled:
            return "trails"
        return "protocols"


@dataclass
class SimulationConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    cell_types: int = 60
    packet_checkers_per_type: int = 3
    node_checkers_per_type: int = 1
    security_value: float = 1.0
    min_security: float = 20.0
    min_security_by_role: dict[NodeRole, float] = field(default_factory=dict)
    min_security_by_node: dict[int, float] = field(default_factory=dict)
    movement: MovementParams = field(default_factory=MovementParams)
    trail_params: TrailParams = field(default_factory=TrailParams)
    notify_params: NotifyParams = field(default_factory=NotifyParams)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    strategy: Strategy = field(default_factory=Strategy)
    duration: int = 1000
    seed: int = 1
    start_fragment: int | None = None
    start_nodes: list[int] | None = None
    bridge_fallback: bool = False
    bridge_decay_step: float | None = None
    coverage_window: int | None = None

    def validate(self) -> None:
        if self.duration < 1:
            raise ConfigError("duration: must be at least 1")
        if self.cell_types < 1:
            raise ConfigError("cell_types: must be at least 1")
        if self.packet_checkers_per_type < 0:
            raise ConfigError("packet_checkers_per_type: must be non-negative")
        if self.node_checkers_per_type < 0:
            raise ConfigError("node_checkers_per_type: must be non-negative")
        if self.security_value <= 0:
            raise ConfigError("security_value: must be positive")
        if self.min_security < 0:
            raise ConfigError("min_security: must be non-negative")
        for role, value in self.min_security_by_role.items():
            if value < 0:
                raise ConfigError(f"min_security_{role.value}: must be non-negative")
        try:
            self.movement.validate()
        except ValueError as exc:
            raise ConfigError(f"movement: {exc}") from exc
        try:
            self.trail_params.validate()
        except ValueError as exc:
            raise ConfigError(f"trails: {exc}") from exc
        try:
            self.traffic.validate()
        except ValueError as exc:
            raise ConfigError(f"traffic: {exc}") from exc
        try:
            self.topology.validate()
        except ValueError as exc:
            raise ConfigError(f"topology: {exc}") from exc
        if self.bridge_decay_step is not None and self.bridge_decay_step <= 0:
            raise ConfigError("bridge_decay_step: must be positive")
        if self.coverage_window is not None and self.coverage_window < 1:
            raise ConfigError("coverage_window: must be at least 1")

    def default_coverage_window(self) -> int:
        if self.coverage_window is not None:
            return self.coverage_window
        if self.node_checkers_per_type == 0:
            return 0
        return max(1, round(4 * self.topology.node_count / self.node_checkers_per_type))


def plan_rebalance(counts: np.ndarray, required: np.ndarray) -> list[tuple[int, int, int]]:
    """Greedy transfer plan: biggest surplus feeds biggest deficit until one
    side runs dry. Ties resolve to the lower node id. Counts are cell units.
    """
    counts = counts.astype(np.int64).copy()
    required = np.ceil(required).astype(np.int64)
    moves: list[tuple[int, int, int]] = []
    while True:
        balance = counts - required
        src = int(np.argmax(balance))
        dst = int(np.argmin(balance))
        if balance[src] <= 0 or balance[dst] >= 0:
            return moves
        amount = int(min(balance[src], -balance[dst]))
        counts[src] -= amount
        counts[dst] += amount
        moves.append((src, dst, amount))


class Engine:
    """One simulation run. Construct, then call run(), or step() repeatedly."""

    def __init__(
        self,
        config: SimulationConfig,
        topology: Topology | None = None,
        record_traffic: bool = False,
        record_trails: bool = False,
    ):
        config.validate()
        self.config = config
        if topology is None:
            topo_cfg = config.topology
            if topo_cfg.seed is None:
                topo_cfg = replace(topo_cfg, seed=config.seed)
            topology = generate_topology(topo_cfg)
        self.topology = topology
        n = topology.node_count
        k = config.cell_types
        strategy = config.strategy
        self.notification_on = strategy.notification_enabled
        self.trails_on = strategy.trails_enabled
        self.centralized = strategy.kind is StrategyKind.CENTRALIZED

        self.min_security_node = np.full(n, config.min_security, dtype=np.float64)
        for v, role in enumerate(topology.roles):
            if role in config.min_security_by_role:
                self.min_security_node[v] = config.min_security_by_role[role]
        for v, value in config.min_security_by_node.items():
            if not 0 <= v < n:
                raise ConfigError(f"min_security_by_node: unknown node {v}")
            self.min_security_node[v] = value

        # Cells are id-ordered: packet checkers type-major, then node checkers.
        n_pc = k * config.packet_checkers_per_type
        n_nc = k * config.node_checkers_per_type
        self.n_pc, self.n_nc = n_pc, n_nc
        self.cell_type = np.empty(n_pc + n_nc, dtype=np.int64)
        for t in range(k):
            a = t * config.packet_checkers_per_type
            self.cell_type[a : a + config.packet_checkers_per_type] = t + 1
            b = n_pc + t * config.node_checkers_per_type
            self.cell_type[b : b + config.node_checkers_per_type] = t + 1

        start_nodes = config.start_nodes
        if start_nodes is None and config.start_fragment is not None:
            start_nodes = [
                v for v in range(n) if topology.fragment_of[v] == config.start_fragment
            ]
            if not start_nodes:
                raise ConfigError(f"start_fragment: fragment {config.start_fragment} is empty")
        if start_nodes is None:
            start_nodes = list(range(n))
        for v in start_nodes:
            if not 0 <= v < n:
                raise ConfigError(f"start_nodes: unknown node {v}")
        ids = np.arange(n_pc + n_nc)
        self.loc = np.asarray(start_nodes, dtype=np.int64)[ids % len(start_nodes)]

        self.pc_slice = slice(0, n_pc)
        self.nc_ids = list(range(n_pc, n_pc + n_nc))
        self.pc_counts_by_type = np.zeros((n, k + 1), dtype=np.int64)
        np.add.at(self.pc_counts_by_type, (self.loc[: n_pc], self.cell_type[: n_pc]), 1)

        self.trail_state: TrailState | None = None
        if self.trails_on:
            self.trail_state = TrailState(topology, config.trail_params, k)
            if config.bridge_fallback or config.bridge_decay_step is not None:
                endpoints = sorted(
                    {v for conn in topology.bridge_edges for v in conn.endpoints()}
                )
                if config.bridge_fallback:
                    self.trail_state.set_bridge_fallback(endpoints)
                if config.bridge_decay_step is not None:
                    for v in endpoints:
                        self.trail_state.set_node_decay_step(v, config.bridge_decay_step)

        self.traffic_source = TrafficSource(config.traffic, topology, k)
        self.in_flight: list[TrafficPacket] = []
        self.infections: dict[tuple[int, int], Infection] = {}

        self._rng_traffic = _substream(config.seed, _STREAM_TRAFFIC)
        self._rng_movement = _substream(config.seed, _STREAM_MOVEMENT)
        self._rng_selection = _substream(config.seed, _STREAM_SELECTION)

        # Notification state: the strongest packet delivered to each node this
        # step (value 0 marks none). _prev_* is what arrived last step and is
        # what gets relayed this step; nothing persists beyond that.
        self._prev_value = np.zeros(n, dtype=np.float64)
        self._prev_origin = np.zeros(n, dtype=np.int64)
        self._prev_link = np.full(n, -1, dtype=np.int64)
        self.notif_value = np.zeros(n, dtype=np.float64)
        self.notif_from = np.full(n, -1, dtype=np.int64)
        self._notif_origin = np.zeros(n, dtype=np.int64)
        self._notif_link = np.full(n, -1, dtype=np.int64)

        self._dist_from_gateway = topology.hop_distances(topology.gateway)
        self._notif_per_connection = np.zeros(len(topology.edges), dtype=np.int64)
        self.lacking = np.zeros(n, dtype=np.float64)
        self.t = 0

        duration = config.duration
        self._deficiency = np.zeros(duration, dtype=np.int64)
        self._notif_sent = np.zeros(duration, dtype=np.int64)
        self._detections = np.zeros(duration, dtype=np.int64)
        self._introduced = np.zeros(duration, dtype=np.int64)
        self._entity_counts = np.zeros((duration, n), dtype=np.int32)
        self._check_times: list[int] = []
        self._check_nodes: list[int] = []
        self._check_types: list[int] = []
        self.detected_packets = 0
        self.introduced_packets = 0
        self.delivered_packets = 0
        self.delivered_infected = 0
        self.infections_created = 0
        self.infections_cleared = 0
        self.control_bandwidth = 0.0
        self.notification_packets_total = 0
        self.max_link_load = 0

        self.record_traffic = record_traffic
        self.record_trails = record_trails
        self.traffic_log: list[tuple[int, int, int, int, int, str, int]] = []
        self.trail_log: list[tuple[int, int, int, int, float]] = []

    # ------------------------------------------------------------------
    # Phases
    # ------------------------------------------------------------------

    def _phase_traffic(self) -> None:
        t = self.t
        for packet in self.in_flight:
            packet.position += 1
        new_packets, direct = self.traffic_source.generate(t, self._rng_traffic)
        for packet in new_packets:
            if packet.payload is not None:
                self.introduced_packets += 1
                self._introduced[t] += 1
        self.in_flight.extend(new_packets)

        survivors: list[TrafficPacket] = []
        for packet in self.in_flight:
            node = packet.current_node
            detected = (
                packet.payload is not None
                and self.pc_counts_by_type[node, packet.payload] > 0
            )
            if detected:
                self.detected_packets += 1
                self._detections[t] += 1
                if self.record_traffic:
                    self._log_packet(packet, "detected", node)
                continue
            if packet.at_destination:
                self.delivered_packets += 1
                if packet.payload is not None:
                    self.delivered_infected += 1
                    key = (packet.destination, packet.payload)
                    if key not in self.infections:
                        self.infections[key] = Infection(
                            packet.destination, packet.payload, t
                        )
                        self.infections_created += 1
                    if self.record_traffic:
                        self._log_packet(packet, "installed", node)
                elif self.record_traffic:
                    self._log_packet(packet, "delivered", node)
                continue
            survivors.append(packet)
        self.in_flight = survivors

        for event in direct:
            key = (event.node, event.intrusion)
            if key not in self.infections:
                self.infections[key] = Infection(event.node, event.intrusion, t)
                self.infections_created += 1

    def _log_packet(self, packet: TrafficPacket, fate: str, node: int) -> None:
        self.traffic_log.append(
            (
                self.t,
                packet.packet_id,
                packet.source,
                packet.destination,
                packet.payload or 0,
                fate,
                node,
            )
        )

    def _phase_node_checks(self) -> None:
        t = self.t
        for cid in self.nc_ids:
            node = int(self.loc[cid])
            ctype = int(self.cell_type[cid])
            self._check_times.append(t)
            self._check_nodes.append(node)
            self._check_types.append(ctype)
            if self.infections.pop((node, ctype), None) is not None:
                self.infections_cleared += 1

    def _phase_security(self) -> np.ndarray:
        n = self.topology.node_count
        pc_locs = self.loc[self.pc_slice]
        security = (
            np.bincount(pc_locs, minlength=n).astype(np.float64)
            * self.config.security_value
        )
        np.maximum(self.min_security_node - security, 0.0, out=self.lacking)
        self._deficiency[self.t] = int(np.count_nonzero(self.lacking))
        return self.lacking

    def _phase_relay(self) -> None:
        """Forward last step's packets plus fresh emissions, deliver at once."""
        if not self.notification_on:
            return
        topo = self.topology
        params = self.config.notify_params
        indptr, links, neigh = topo.adj_indptr, topo.adj_links, topo.adj_neighbors
        new_value = np.zeros_like(self.notif_value)
        new_from = np.full_like(self.notif_from, -1)
        new_origin = np.zeros_like(self._notif_origin)
        new_link = np.full_like(self._notif_link, -1)

        active = set(np.nonzero(self._prev_value > 0)[0].tolist())
        active |= set(np.nonzero(self.lacking > 0)[0].tolist())
        sent = 0
        loads: dict[tuple[int, bool], int] = {}
        for node in active:
            own = float(self.lacking[node])
            relayed = float(self._prev_value[node])
            if own > 0 and (params.own_emission_wins or relayed <= own):
                value, origin, exclude = own, node, -1
            elif relayed > 0:
                value = relayed - 1.0
                if value <= params.forward_threshold:
                    continue
                origin, exclude = int(self._prev_origin[node]), int(self._prev_link[node])
            else:
                continue
            for k in range(int(indptr[node]), int(indptr[node + 1])):
                link = int(links[k])
                if link == exclude:
                    continue
                receiver = int(neigh[k])
                sent += 1
                self._notif_per_connection[link] += 1
                direction = (link, node < receiver)
                loads[direction] = loads.get(direction, 0) + 1
                better = value > new_value[receiver] or (
                    value == new_value[receiver]
                    and (origin, link) < (int(new_origin[receiver]), int(new_link[receiver]))
                )
                if better:
                    new_value[receiver] = value
                    new_origin[receiver] = origin
                    new_link[receiver] = link
                    new_from[receiver] = node

        self._notif_sent[self.t] = sent
        self.notification_packets_total += sent
        if loads:
            self.max_link_load = max(self.max_link_load, max(loads.values()))
        self._prev_value, self.notif_value = new_value, new_value
        self._prev_origin, self._notif_origin = new_origin, new_origin
        self._prev_link, self._notif_link = new_link, new_link
        self.notif_from = new_from

    def _phase_trail_decay(self) -> None:
        if self.trail_state is not None:
            self.trail_state.decay_all()
            if self.record_trails:
                state = self.trail_state
                rows = np.nonzero(state.values)
                for slot, ctype in zip(*rows):
                    node = int(np.searchsorted(state._indptr, slot, side="right")) - 1
                    self.trail_log.append(
                        (
                            self.t,
                            node,
                            int(state._links[slot]),
                            int(ctype),
                            float(state.values[slot, ctype]),
                        )
                    )

    def _phase_movement(self) -> None:
        self._move_packet_checkers()
        self._move_node_checkers()
        if self.centralized:
            self._centralized_assign()

    def _move_packet_checkers(self) -> None:
        n_pc = self.n_pc
        if n_pc == 0:
            return
        topo = self.topology
        params = self.config.movement
        locs = self.loc[:n_pc]
        u_move = self._rng_movement.random(n_pc)
        u_dest = self._rng_movement.random(n_pc)
        degrees = topo.degrees[locs]

        if self.notification_on:
            pinned = self.lacking[locs] > 0
            values = self.notif_value[locs]
            prob = np.minimum(
                params.base_probability + params.gain * values, params.max_probability
            )
        else:
            pinned = np.zeros(n_pc, dtype=bool)
            values = np.zeros(n_pc)
            prob = np.full(n_pc, params.base_probability)

        movers = (~pinned) & (u_move < prob) & (degrees > 0)
        if not movers.any():
            return
        dest = locs.copy()
        toward = movers & (values > 0)
        dest[toward] = self.notif_from[locs[toward]]
        wander = movers & ~(values > 0)
        if wander.any():
            offsets = (u_dest[wander] * degrees[wander]).astype(np.int64)
            dest[wander] = topo.adj_neighbors[topo.adj_indptr[locs[wander]] + offsets]

        moved = np.nonzero(movers)[0]
        types = self.cell_type[moved]
        np.add.at(self.pc_counts_by_type, (locs[moved], types), -1)
        np.add.at(self.pc_counts_by_type, (dest[moved], types), 1)
        self.loc[:n_pc] = np.where(movers, dest, locs)

    def _move_node_checkers(self) -> None:
        topo = self.topology
        rng = self._rng_selection
        base = self.config.movement.base_probability
        state = self.trail_state
        for cid in self.nc_ids:
            node = int(self.loc[cid])
            degree = topo.degree(node)
            if degree == 0:
                continue
            if self.trails_on and state is not None:
                ctype = int(self.cell_type[cid])
                conn = state.select_next_hop(node, ctype, rng)
                state.record_traversal(node, conn, ctype)
                self.loc[cid] = conn.other(node)
            else:
                if rng.random() < base:
                    start = int(topo.adj_indptr[node])
                    self.loc[cid] = int(
                        topo.adj_neighbors[start + int(rng.random() * degree)]
                    )

    def _centralized_assign(self) -> None:
        """Teleport packet checkers onto deficits; pay 2 * hops to the gateway
        per moved cell (status report plus command through the management
        point). Runs after the autonomous wander each step.
        """
        n = self.topology.node_count
        n_pc = self.n_pc
        if n_pc == 0:
            return
        counts = np.bincount(self.loc[:n_pc], minlength=n)
        required = self.min_security_node / self.config.security_value
        moves = plan_rebalance(counts, required)
        if not moves:
            return
        by_node: dict[int, list[int]] = {}
        order = np.argsort(self.loc[:n_pc], kind="stable")
        for cid in order:
            by_node.setdefault(int(self.loc[cid]), []).append(int(cid))
        for src, dst, amount in moves:
            pool = by_node.setdefault(src, [])
            chosen = pool[:amount]
            del pool[:amount]
            for cid in chosen:
                self.loc[cid] = dst
                ctype = int(self.cell_type[cid])
                self.pc_counts_by_type[src, ctype] -= 1
                self.pc_counts_by_type[dst, ctype] += 1
                by_node.setdefault(dst, []).append(cid)
            self.control_bandwidth += amount * 2.0 * max(0, int(self._dist_from_gateway[src]))

    # ------------------------------------------------------------------

    def step(self) -> None:
        if self.t >= self.config.duration:
            raise RuntimeError("run already complete")
        self._phase_traffic()
        self._phase_node_checks()
        self._phase_security()
        self._phase_relay()
        self._phase_trail_decay()
        self._phase_movement()
        self._entity_counts[self.t] = np.bincount(
            self.loc, minlength=self.topology.node_count
        )
        self.t += 1

    def run(self) -> MetricsReport:
        while self.t < self.config.duration:
            self.step()
        return self.report()

    def report(self) -> MetricsReport:
        control = (
            self.control_bandwidth
            if self.centralized
            else float(self.notification_packets_total)
        )
        return MetricsReport(
            duration=self.config.duration,
            node_count=self.topology.node_count,
            cell_types=self.config.cell_types,
            strategy=self.config.strategy.name,
            seed=self.config.seed,
            detected_packets=self.detected_packets,
            introduced_packets=self.introduced_packets,
            delivered_infected=self.delivered_infected,
            infections_created=self.infections_created,
            infections_cleared=self.infections_cleared,
            infections_active=len(self.infections),
            control_bandwidth=control,
            notification_packets_total=self.notification_packets_total,
            max_link_load=self.max_link_load,
            deficiency_series=self._deficiency[: self.t].copy(),
            notification_series=self._notif_sent[: self.t].copy(),
            notification_per_connection=self._notif_per_connection.copy(),
            detections_series=self._detections[: self.t].copy(),
            introduced_series=self._introduced[: self.t].copy(),
            entity_counts=self._entity_counts[: self.t].copy(),
            check_times=np.asarray(self._check_times, dtype=np.int64),
            check_nodes=np.asarray(self._check_nodes, dtype=np.int64),
            check_types=np.asarray(self._check_types, dtype=np.int64),
            coverage_window=self.config.default_coverage_window(),
        )


def run(config: SimulationConfig, topology: Topology | None = None) -> MetricsReport:
    """Execute one full run and return its metrics."""
    return Engine(config, topology=topology).run()

"""Scenario files: INI-style configuration for runs and sweeps.

Every key is optional and falls back to the library default; unknown sections
or keys are rejected so typos cannot silently change an experiment. The
[sweep] section lists seeds and strategy names for the sweep subcommand.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .cells import MovementParams
from .engine import ConfigError, SimulationConfig, Strategy
from .notify import NotifyParams
from .threat import TrafficConfig
from .topology import NodeRole, TopologyConfig
from .trails import TrailParams

_SCHEMA: dict[str, dict[str, str]] = {
    "topology": {
        "node_count": "int",
        "fragment_count": "int",
        "bridges_per_fragment_pair": "int",
        "workstation_fraction": "float",
        "server_fraction": "float",
        "router_fraction": "float",
        "backbone_redundancy": "float",
        "seed": "int",
    },
    "cells": {
        "cell_types": "int",
        "packet_checkers_per_type": "int",
        "node_checkers_per_type": "int",
        "security_value": "float",
        "start_fragment": "int",
    },
    "security": {
        "min_security": "float",
        "min_security_workstation": "float",
        "min_security_server": "float",
        "min_security_router": "float",
        "min_security_gateway": "float",
    },
    "movement": {
        "base_probability": "float",
        "gain": "float",
        "max_probability": "float",
    },
    "trails": {
        "increase_base": "float",
        "increase_scale": "float",
        "decay_step": "float",
        "value_cap": "float",
        "exponent_cap": "float",
        "bridge_fallback": "bool",
        "bridge_decay_step": "float",
    },
    "notify": {
        "forward_threshold": "float",
        "own_emission_wins": "bool",
    },
    "traffic": {
        "packets_per_step": "int",
        "infection_probability": "float",
        "internal_attack_rate": "float",
        "infections_per_step": "float",
    },
    "run": {
        "strategy": "str",
        "duration": "int",
        "seed": "int",
        "coverage_window": "int",
    },
    "sweep": {
        "seeds": "ints",
        "strategies": "strs",
    },
    "output": {
        "out_dir": "str",
    },
}

_ROLE_KEYS = {
    "min_security_workstation": NodeRole.WORKSTATION,
    "min_security_server": NodeRole.SERVER,
    "min_security_router": NodeRole.ROUTER,
    "min_security_gateway": NodeRole.GATEWAY,
}


@dataclass
class Scenario:
    config: SimulationConfig
    sweep_seeds: list[int] = field(default_factory=list)
    sweep_strategies: list[str] = field(default_factory=list)
    out_dir: str | None = None

    _raw: dict[str, dict[str, str]] = field(default_factory=dict, repr=False)

    def config_for(self, strategy_name: str, seed: int) -> SimulationConfig:
        """A fresh config with the strategy and seed swapped in."""
        fresh = load_dict(self._raw).config
        fresh.strategy = Strategy.from_name(strategy_name)
        fresh.seed = seed
        return fresh


def _parse_value(section: str, key: str, raw: str) -> object:
    kind = _SCHEMA[section][key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "ints":
            return [int(tok) for tok in raw.split()]
        if kind == "strs":
            return raw.split()
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def load_dict(sections: dict[str, dict[str, str]]) -> Scenario:
    """Build a Scenario from already-split section/key/value strings."""
    for section, entries in sections.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in entries:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    def get(section: str, key: str):
        raw = sections.get(section, {}).get(key)
        return None if raw is None else _parse_value(section, key, raw)

    topo_kwargs = {}
    for key in _SCHEMA["topology"]:
        value = get("topology", key)
        if value is not None:
            topo_kwargs[key] = value
    config = SimulationConfig(topology=TopologyConfig(**topo_kwargs))

    for key in ("cell_types", "packet_checkers_per_type", "node_checkers_per_type"):
        value = get("cells", key)
        if value is not None:
            setattr(config, key, value)
    value = get("cells", "security_value")
    if value is not None:
        config.security_value = value
    value = get("cells", "start_fragment")
    if value is not None:
        config.start_fragment = value

    value = get("security", "min_security")
    if value is not None:
        config.min_security = value
    for key, role in _ROLE_KEYS.items():
        value = get("security", key)
        if value is not None:
            config.min_security_by_role[role] = value

    movement = {}
    for key in _SCHEMA["movement"]:
        value = get("movement", key)
        if value is not None:
            movement[key] = value
    if movement:
        config.movement = MovementParams(**{**vars(MovementParams()), **movement})

    trail_kwargs = {}
    for key in ("increase_base", "increase_scale", "decay_step", "value_cap", "exponent_cap"):
        value = get("trails", key)
        if value is not None:
            trail_kwargs[key] = value
    if trail_kwargs:
        config.trail_params = TrailParams(**{**vars(TrailParams()), **trail_kwargs})
    value = get("trails", "bridge_fallback")
    if value is not None:
        config.bridge_fallback = value
    value = get("trails", "bridge_decay_step")
    if value is not None:
        config.bridge_decay_step = value

    notify_kwargs = {}
    for key in _SCHEMA["notify"]:
        value = get("notify", key)
        if value is not None:
            notify_kwargs[key] = value
    if notify_kwargs:
        config.notify_params = NotifyParams(**{**vars(NotifyParams()), **notify_kwargs})

    traffic_kwargs = {}
    for key in _SCHEMA["traffic"]:
        value = get("traffic", key)
        if value is not None:
            traffic_kwargs[key] = value
    if traffic_kwargs:
        config.traffic = TrafficConfig(**{**vars(TrafficConfig()), **traffic_kwargs})

    value = get("run", "strategy")
    if value is not None:
        config.strategy = Strategy.from_name(value)
    for key in ("duration", "seed"):
        value = get("run", key)
        if value is not None:
            setattr(config, key, value)
    value = get("run", "coverage_window")
    if value is not None:
        config.coverage_window = value

    config.validate()

    scenario = Scenario(
        config=config,
        sweep_seeds=get("sweep", "seeds") or [config.seed],
        sweep_strategies=get("sweep", "strategies") or [config.strategy.name],
        out_dir=get("output", "out_dir"),
    )
    scenario._raw = {s: dict(v) for s, v in sections.items()}
    for name in scenario.sweep_strategies:
        Strategy.from_name(name)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FileNotFoundError(path)
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return load_dict(sections)

"""Wiring: build the long-lived objects one service instance shares."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..correlator import HostMaps, parse_arp_file, parse_hosts_file
from ..notify import RuleEngine, parse_rules_file
from ..routing import RoutingTable, apply_route_overrides, compute_routing, parse_route_file
from ..simulator import FabricSimulator
from ..store import Store
from ..topology import FabricTopology, parse_topology
from .config import ServerConfig
from .pipeline import Pipeline, run_simulation
from .scenario import build_simulator, load_scenario


@dataclass
class AppState:
    config: ServerConfig
    topology: FabricTopology
    routing: RoutingTable
    maps: HostMaps
    store: Store
    engine: RuleEngine
    pipeline: Pipeline
    simulator: FabricSimulator | None = None
    started_at: float = field(default_factory=time.monotonic)
    _sim_thread: threading.Thread | None = None

    def uptime_s(self) -> float:
        return time.monotonic() - self.started_at

    def start_simulation(self) -> None:
        """Run the scenario in the background, paced for live viewing."""
        if self.simulator is None or self._sim_thread is not None:
            return
        intervals = self.config.sim_intervals or 60
        pace_s = (self.config.pace_ms or 0) / 1000.0
        self._sim_thread = threading.Thread(
            target=run_simulation,
            args=(self.pipeline, self.simulator, intervals, pace_s),
            daemon=True,
        )
        self._sim_thread.start()

    def wait_simulation(self, timeout: float | None = None) -> None:
        if self._sim_thread is not None:
            self._sim_thread.join(timeout)

    def close(self) -> None:
        self.store.close()


def _build_maps(config: ServerConfig, topology: FabricTopology) -> HostMaps:
    maps = HostMaps.from_topology(topology)
    hosts = dict(maps.hosts_map)
    arps = dict(maps.arp_map)
    if config.hosts_file:
        hosts.update(parse_hosts_file(Path(config.hosts_file).read_text()))
    if config.arp_file:
        arps.update(parse_arp_file(Path(config.arp_file).read_text()))
    return HostMaps(hosts, arps)


def make_state(config: ServerConfig) -> AppState:
    simulator: FabricSimulator | None = None
    if config.mode == "simulate":
        scenario = load_scenario(config.scenario_file)
        simulator = build_simulator(scenario)
        topology = simulator.topology
        routing = simulator.routing
        interval_ms = simulator.interval_ms
    else:
        topology = parse_topology(Path(config.topology_file).read_text())
        routing = compute_routing(topology)
        if config.route_file:
            overrides = parse_route_file(Path(config.route_file).read_text())
            routing = apply_route_overrides(routing, overrides)
        interval_ms = config.interval_ms

    maps = _build_maps(config, topology)
    store = Store(
        config.resolved_data_dir(),
        interval_ms=interval_ms,
        max_segments=config.max_segments,
        debug_raw=config.debug_raw,
        known_link_ids={l.id for l in topology.links},
        known_guids=set(topology.device_by_guid),
    )
    engine = RuleEngine(next_event_id=store.max_event_id() + 1)
    if config.rules_file:
        for rule in parse_rules_file(Path(config.rules_file).read_text()):
            engine.upsert_rule(rule)
    pipeline = Pipeline(
        topology,
        routing,
        maps,
        store,
        engine,
        interval_ms,
        error_counters_fn=simulator.error_counters_at if simulator else None,
        webhook_url=config.webhook_url,
    )
    return AppState(
        config=config,
        topology=topology,
        routing=routing,
        maps=maps,
        store=store,
        engine=engine,
        pipeline=pipeline,
        simulator=simulator,
    )

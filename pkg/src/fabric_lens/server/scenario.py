"""Scenario files: a fabric spec plus jobs, noise and fault injections.

A scenario is JSON. Hosts are referenced by generated order rather
than guid so files stay readable:

    {
      "fabric": {"edge_switches": 2, "root_switches": 2,
                 "hosts_per_edge": 2, "link_capacity_gbps": 100},
      "interval_ms": 1000,
      "seed": 7,
      "noise_max_bytes": 0,
      "jobs": [
        {"job_id": 1,
         "nodes": {"compute_indices": [0, 1, 2, 3]},
         "pattern": {"type": "alltoall", "bytes_per_pair": 1000},
         "start": 0, "end": 10}
      ],
      "faults": [
        {"interval": 1, "metric": "XmtDiscards", "link_id": 4, "value": 15}
      ]
    }

``fabric.preset`` accepts "osc" or "frontera" in place of explicit
fields. Node selectors: compute_indices, storage_indices, hostnames,
or guids (hex strings). Checkpoint targets use the same selectors
under ``pattern.osts``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..exceptions import InvalidJobSpec
from ..simulator import (
    AllToAll,
    Checkpoint,
    FabricSimulator,
    FatTreeSpec,
    JobSpec,
    Multicast,
    frontera_scale_spec,
    generate_fat_tree,
    osc_scale_spec,
)
from ..topology import COMPUTE, STORAGE, FabricTopology


@dataclass
class Scenario:
    spec: FatTreeSpec
    interval_ms: int = 5000
    seed: int = 0
    noise_max_bytes: int = 0
    jobs: list[dict] = field(default_factory=list)
    faults: list[dict] = field(default_factory=list)


_PRESETS = {"osc": osc_scale_spec, "frontera": frontera_scale_spec}


def _fabric_spec(raw: dict) -> FatTreeSpec:
    preset = raw.get("preset")
    if preset is not None:
        factory = _PRESETS.get(preset)
        if factory is None:
            raise InvalidJobSpec(f"unknown fabric preset {preset!r}")
        return factory()
    gbps = raw.get("link_capacity_gbps", 100)
    return FatTreeSpec(
        edge_switches=raw["edge_switches"],
        root_switches=raw["root_switches"],
        hosts_per_edge=raw["hosts_per_edge"],
        storage_hosts_per_edge=raw.get("storage_hosts_per_edge", 0),
        links_per_edge_root_pair=raw.get("links_per_edge_root_pair", 1),
        link_capacity=round(gbps * 1_000_000_000),
        extra_hosts=raw.get("extra_hosts", 0),
        extra_uplinks=raw.get("extra_uplinks", 0),
    )


def load_scenario(path: str | os.PathLike) -> Scenario:
    raw = json.loads(Path(path).read_text())
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> Scenario:
    if "fabric" not in raw:
        raise InvalidJobSpec("scenario is missing the fabric section")
    return Scenario(
        spec=_fabric_spec(raw["fabric"]),
        interval_ms=raw.get("interval_ms", 5000),
        seed=raw.get("seed", 0),
        noise_max_bytes=raw.get("noise_max_bytes", 0),
        jobs=raw.get("jobs", []),
        faults=raw.get("faults", []),
    )


def _select_hosts(topology: FabricTopology, selector: dict) -> tuple[int, ...]:
    if not isinstance(selector, dict):
        raise InvalidJobSpec(f"bad host selector {selector!r}")
    out: list[int] = []
    if "guids" in selector:
        out.extend(int(g, 16) for g in selector["guids"])
    if "hostnames" in selector:
        for name in selector["hostnames"]:
            host = topology.host_by_name.get(name)
            if host is None:
                raise InvalidJobSpec(f"unknown hostname {name!r}")
            out.append(host.guid)
    if "compute_indices" in selector or "storage_indices" in selector:
        compute = [h for h in topology.hosts if h.kind == COMPUTE]
        storage = [h for h in topology.hosts if h.kind == STORAGE]
        for idx in selector.get("compute_indices", ()):
            if not 0 <= idx < len(compute):
                raise InvalidJobSpec(f"compute index {idx} out of range")
            out.append(compute[idx].guid)
        for idx in selector.get("storage_indices", ()):
            if not 0 <= idx < len(storage):
                raise InvalidJobSpec(f"storage index {idx} out of range")
            out.append(storage[idx].guid)
    if not out:
        raise InvalidJobSpec(f"selector {selector!r} matched no hosts")
    return tuple(out)


def _job_spec(topology: FabricTopology, raw: dict) -> JobSpec:
    pattern_raw = raw.get("pattern", {})
    kind = pattern_raw.get("type")
    if kind == "alltoall":
        pattern = AllToAll(bytes_per_pair=pattern_raw["bytes_per_pair"])
    elif kind == "checkpoint":
        pattern = Checkpoint(
            bytes_per_proc=pattern_raw["bytes_per_proc"],
            ost_guids=_select_hosts(topology, pattern_raw["osts"]),
            direction=pattern_raw.get("direction", "write"),
            procs_per_node=pattern_raw.get("procs_per_node", 1),
        )
    elif kind == "multicast":
        pattern = Multicast(
            group_guids=_select_hosts(topology, pattern_raw["group"]),
            bytes_per_interval=pattern_raw["bytes_per_interval"],
        )
    else:
        raise InvalidJobSpec(f"unknown pattern type {kind!r}")
    return JobSpec(
        job_id=raw["job_id"],
        node_guids=_select_hosts(topology, raw["nodes"]),
        pattern=pattern,
        start=raw.get("start", 0),
        end=raw.get("end"),
    )


def build_simulator(scenario: Scenario) -> FabricSimulator:
    topology = generate_fat_tree(scenario.spec)
    sim = FabricSimulator(
        topology,
        interval_ms=scenario.interval_ms,
        noise_max_bytes=scenario.noise_max_bytes,
        seed=scenario.seed,
    )
    for raw in scenario.jobs:
        sim.schedule_job(_job_spec(topology, raw))
    for fault in scenario.faults:
        sim.inject_fault(
            fault["interval"], fault["metric"], fault["link_id"], fault["value"]
        )
    return sim

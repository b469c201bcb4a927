"""Synthetic fabric and workload generator.

Produces two-level fat trees plus per-interval telemetry batches whose
counter deltas exactly equal the sum of the routed flow bytes, which is
what makes attribution testable end to end. Time is discrete: records
for interval ``i`` are stamped ``i * interval_ms`` milliseconds after
epoch and counters are cumulative across intervals.
"""

from __future__ import annotations

import ipaddress
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Union

from .exceptions import (
    InvalidJobSpec,
    OverlappingJobId,
    UnknownGuid,
    UnknownLink,
)
from .routing import RoutingTable, compute_routing, job_subgraph, route_path
from .topology import (
    A2B,
    B2A,
    COMPUTE,
    EDGE,
    ROOT,
    STORAGE,
    FabricTopology,
    HostNode,
    Link,
    LinkEnd,
    SwitchNode,
    validate_topology,
)
from .wire import CounterSample, IoRecord, MpiRecord

MTU_BYTES = 4096

_SWITCH_GUID_BASE = 0x53 << 56
_HOST_GUID_BASE = 0x48 << 56


@dataclass(frozen=True)
class FatTreeSpec:
    """Shape of a generated two-level fat tree.

    ``extra_hosts`` spreads additional compute hosts across the first
    edge switches and ``extra_uplinks`` adds parallel edge-root links
    round robin over the pairs. They exist because real cluster inventories
    rarely factor into a uniform grid; with both at zero the tree is uniform.
    """

    edge_switches: int
    root_switches: int
    hosts_per_edge: int
    storage_hosts_per_edge: int = 0
    links_per_edge_root_pair: int = 1
    link_capacity: int = 100_000_000_000  # bits/s
    extra_hosts: int = 0
    extra_uplinks: int = 0

    def __post_init__(self):
        if self.edge_switches < 1 or self.root_switches < 1:
            raise ValueError("need at least one edge and one root switch")
        if self.hosts_per_edge < 1:
            raise ValueError("need at least one host per edge switch")
        if self.storage_hosts_per_edge < 0 or self.extra_hosts < 0 or self.extra_uplinks < 0:
            raise ValueError("counts cannot be negative")
        if self.links_per_edge_root_pair < 1:
            raise ValueError("need at least one link per edge-root pair")
        if self.link_capacity <= 0:
            raise ValueError("link capacity must be positive")

    def expected_counts(self) -> tuple[int, int, int]:
        """(hosts, switches, links) the generator will produce."""
        hosts = (
            self.edge_switches * (self.hosts_per_edge + self.storage_hosts_per_edge)
            + self.extra_hosts
        )
        switches = self.edge_switches + self.root_switches
        uplinks = (
            self.edge_switches * self.root_switches * self.links_per_edge_root_pair
            + self.extra_uplinks
        )
        return hosts, switches, hosts + uplinks


def osc_scale_spec() -> FatTreeSpec:
    """A campus scale tree: 1,738 hosts, 109 switches, 3,579 links."""
    return FatTreeSpec(
        edge_switches=90,
        root_switches=19,
        hosts_per_edge=19,
        extra_hosts=28,
        extra_uplinks=131,
        link_capacity=100_000_000_000,
    )


def frontera_scale_spec() -> FatTreeSpec:
    """A leadership scale tree: 8,811 hosts, 494 switches, 22,819 links."""
    return FatTreeSpec(
        edge_switches=464,
        root_switches=30,
        hosts_per_edge=18,
        extra_hosts=459,
        extra_uplinks=88,
        link_capacity=200_000_000_000,
    )


def _spread(total: int, buckets: int) -> list[int]:
    base, rem = divmod(total, buckets)
    return [base + (1 if i < rem else 0) for i in range(buckets)]


def generate_fat_tree(spec: FatTreeSpec) -> FabricTopology:
    """Deterministically build the fabric a spec describes."""
    e_count, r_count = spec.edge_switches, spec.root_switches

    extra_hosts = _spread(spec.extra_hosts, e_count)
    pair_extra = _spread(spec.extra_uplinks, e_count * r_count)

    hosts: list[HostNode] = []
    links: list[tuple[LinkEnd, LinkEnd]] = []
    next_port = [0] * (e_count + r_count)  # switch index -> ports used

    def take_port(switch_idx: int) -> int:
        next_port[switch_idx] += 1
        return next_port[switch_idx]

    lid = e_count + r_count  # host lids start after the switches
    compute_idx = 0
    storage_idx = 0
    compute_base = ipaddress.IPv4Address("10.0.0.1")
    storage_base = ipaddress.IPv4Address("10.128.0.1")

    for e in range(e_count):
        edge_guid = _SWITCH_GUID_BASE | e
        for _ in range(spec.hosts_per_edge + extra_hosts[e]):
            lid += 1
            guid = _HOST_GUID_BASE | len(hosts)
            hosts.append(HostNode(
                guid, lid, f"node-{compute_idx + 1:04d}",
                str(compute_base + compute_idx), COMPUTE,
            ))
            compute_idx += 1
            links.append((LinkEnd(guid, 1), LinkEnd(edge_guid, take_port(e))))
        for _ in range(spec.storage_hosts_per_edge):
            lid += 1
            guid = _HOST_GUID_BASE | len(hosts)
            hosts.append(HostNode(
                guid, lid, f"oss-{storage_idx + 1:04d}",
                str(storage_base + storage_idx), STORAGE,
            ))
            storage_idx += 1
            links.append((LinkEnd(guid, 1), LinkEnd(edge_guid, take_port(e))))

    for e in range(e_count):
        edge_guid = _SWITCH_GUID_BASE | e
        for r in range(r_count):
            root_idx = e_count + r
            root_guid = _SWITCH_GUID_BASE | root_idx
            count = spec.links_per_edge_root_pair + pair_extra[e * r_count + r]
            for _ in range(count):
                links.append((
                    LinkEnd(edge_guid, take_port(e)),
                    LinkEnd(root_guid, take_port(root_idx)),
                ))

    switches = [
        SwitchNode(_SWITCH_GUID_BASE | i, 1 + i, EDGE, next_port[i])
        for i in range(e_count)
    ] + [
        SwitchNode(_SWITCH_GUID_BASE | (e_count + j), 1 + e_count + j, ROOT,
                   next_port[e_count + j])
        for j in range(r_count)
    ]
    link_objs = tuple(
        Link(i, a, b, spec.link_capacity) for i, (a, b) in enumerate(links)
    )
    topo = FabricTopology(tuple(switches), tuple(hosts), link_objs)
    validate_topology(topo)
    return topo


# ------------------------------------------------------------------ jobs

@dataclass(frozen=True)
class AllToAll:
    """Every ordered pair of job nodes exchanges this many bytes per interval."""

    bytes_per_pair: int


@dataclass(frozen=True)
class Checkpoint:
    """Each process moves bytes_per_proc to or from every target per interval."""

    bytes_per_proc: int
    ost_guids: tuple[int, ...]
    direction: str = "write"  # write: client -> storage, read: storage -> client
    procs_per_node: int = 1


@dataclass(frozen=True)
class Multicast:
    """One copy of bytes_per_interval fans out from the first job node."""

    group_guids: tuple[int, ...]
    bytes_per_interval: int


Pattern = Union[AllToAll, Checkpoint, Multicast]


@dataclass(frozen=True)
class JobSpec:
    job_id: int
    node_guids: tuple[int, ...]
    pattern: Pattern
    start: int = 0
    end: int | None = None  # exclusive; None runs forever

    def active(self, interval: int) -> bool:
        if interval < self.start:
            return False
        return self.end is None or interval < self.end


@dataclass
class TelemetryBatch:
    """Everything the fabric emitted for one interval."""

    interval: int
    mpi_records: list[MpiRecord]
    io_records: list[IoRecord]
    counter_samples: list[CounterSample]

    def record_count(self) -> int:
        return len(self.mpi_records) + len(self.io_records) + len(self.counter_samples)


_TRUTH_CLASSES = ("mpi", "io", "multicast", "noise")


class FabricSimulator:
    """Replays scheduled jobs over a routed fabric, one interval at a time."""

    def __init__(
        self,
        topology: FabricTopology,
        routing: RoutingTable | None = None,
        interval_ms: int = 5000,
        noise_max_bytes: int = 0,
        seed: int = 0,
    ):
        self.topology = topology
        self.routing = routing if routing is not None else compute_routing(topology)
        self.interval_ms = interval_ms
        self.noise_max_bytes = noise_max_bytes
        self._rng = random.Random(seed)
        self.interval = 0
        self.jobs: dict[int, JobSpec] = {}
        # (guid, port) -> cumulative [xb, rb, xp, rp, uxb, urb, mxb, mrb]
        self._counters: dict[tuple[int, int], list[int]] = {}
        self._truth: dict[int, dict[tuple[int, str], dict[str, int]]] = {}
        self._faults: list[tuple[int, str, int, int]] = []  # interval, metric, link, value
        self._mcast_trees: dict[int, list[tuple[Link, str]]] = {}

    # -- scheduling ----------------------------------------------------

    def schedule_job(self, spec: JobSpec) -> int:
        if spec.job_id in self.jobs:
            raise OverlappingJobId(spec.job_id)
        if not spec.node_guids:
            raise InvalidJobSpec("job has no nodes")
        if len(set(spec.node_guids)) != len(spec.node_guids):
            raise InvalidJobSpec("job lists a node twice")
        for guid in spec.node_guids:
            if guid not in self.topology.host_by_guid:
                raise UnknownGuid(guid, "job node")
        if spec.start < 0 or (spec.end is not None and spec.end <= spec.start):
            raise InvalidJobSpec("job window is empty")
        p = spec.pattern
        if isinstance(p, AllToAll):
            if p.bytes_per_pair < 0:
                raise InvalidJobSpec("negative bytes_per_pair")
            if len(spec.node_guids) < 2:
                raise InvalidJobSpec("alltoall needs at least two nodes")
        elif isinstance(p, Checkpoint):
            if p.bytes_per_proc < 0 or p.procs_per_node < 1:
                raise InvalidJobSpec("bad checkpoint sizing")
            if p.direction not in ("write", "read"):
                raise InvalidJobSpec(f"bad checkpoint direction {p.direction!r}")
            if not p.ost_guids:
                raise InvalidJobSpec("checkpoint has no storage targets")
            for guid in p.ost_guids:
                host = self.topology.host_by_guid.get(guid)
                if host is None:
                    raise UnknownGuid(guid, "storage target")
                if host.kind != STORAGE:
                    raise InvalidJobSpec(
                        f"storage target {host.hostname} is a {host.kind} host"
                    )
        elif isinstance(p, Multicast):
            if p.bytes_per_interval < 0:
                raise InvalidJobSpec("negative multicast volume")
            if not p.group_guids:
                raise InvalidJobSpec("multicast group is empty")
            for guid in p.group_guids:
                if guid not in self.topology.host_by_guid:
                    raise UnknownGuid(guid, "multicast member")
        else:
            raise InvalidJobSpec(f"unknown pattern {type(p).__name__}")
        self.jobs[spec.job_id] = spec
        return spec.job_id

    def inject_fault(self, interval: int, metric: str, link_id: int, value: int) -> None:
        """Pin an error counter to ``value`` from ``interval`` onward."""
        if link_id not in self.topology.link_by_id:
            raise UnknownLink(link_id)
        self._faults.append((interval, metric, link_id, value))

    def error_counters_at(self, interval: int) -> dict[tuple[str, int], int]:
        """Latest injected value per (metric, link) visible at an interval."""
        out: dict[tuple[str, int], int] = {}
        for at, metric, link_id, value in sorted(self._faults, key=lambda f: f[0]):
            if at <= interval:
                out[(metric, link_id)] = value
        return out

    # -- advancing time ------------------------------------------------

    def advance(self, n: int = 1) -> list[TelemetryBatch]:
        if n < 1:
            raise ValueError("advance at least one interval")
        return [self._run_interval() for _ in range(n)]

    def ground_truth(self, interval: int) -> dict[tuple[int, str], dict[str, int]]:
        """Per (link id, direction) class bytes booked for a past interval."""
        return self._truth[interval]

    def _run_interval(self) -> TelemetryBatch:
        i = self.interval
        ts = i * self.interval_ms * 1_000_000
        truth: dict[tuple[int, str], dict[str, int]] = {}
        self._truth[i] = truth
        mpi_records: list[MpiRecord] = []
        io_records: list[IoRecord] = []

        for job_id in sorted(self.jobs):
            job = self.jobs[job_id]
            if not job.active(i):
                continue
            p = job.pattern
            if isinstance(p, AllToAll):
                nodes = [self.topology.host_by_guid[g] for g in job.node_guids]
                for ri, src in enumerate(nodes):
                    for rj, dst in enumerate(nodes):
                        if ri == rj:
                            continue
                        mpi_records.append(MpiRecord(
                            ts, job_id, ri, rj, src.guid, dst.guid,
                            p.bytes_per_pair, 0, self.interval_ms,
                        ))
                        self._book_flow(truth, src.lid, dst.lid, p.bytes_per_pair, "mpi")
            elif isinstance(p, Checkpoint):
                for ni, node_guid in enumerate(job.node_guids):
                    node = self.topology.host_by_guid[node_guid]
                    for proc in range(p.procs_per_node):
                        rank = ni * p.procs_per_node + proc
                        for ost_guid in p.ost_guids:
                            oss = self.topology.host_by_guid[ost_guid]
                            if p.direction == "write":
                                stats = (0, 0, 0, 0,
                                         1, p.bytes_per_proc, p.bytes_per_proc, p.bytes_per_proc)
                                self._book_flow(truth, node.lid, oss.lid, p.bytes_per_proc, "io")
                            else:
                                stats = (1, p.bytes_per_proc, p.bytes_per_proc, p.bytes_per_proc,
                                         0, 0, 0, 0)
                                self._book_flow(truth, oss.lid, node.lid, p.bytes_per_proc, "io")
                            io_records.append(IoRecord(
                                ts, job_id, rank, 10_000 + rank, node.guid,
                                f"{oss.hostname}-ost0", oss.ip,
                                *stats, self.interval_ms,
                            ))
            else:
                for link, direction in self._multicast_tree(job):
                    self._book_hop(truth, link, direction, p.bytes_per_interval,
                                   "multicast")

        if self.noise_max_bytes > 0:
            for link in self.topology.links:
                for direction in (A2B, B2A):
                    jitter = self._rng.randint(0, self.noise_max_bytes)
                    if jitter:
                        self._book_hop(truth, link, direction, jitter, "noise")

        samples = [
            CounterSample(ts, guid, port, *self._counters[(guid, port)])
            for guid, port in sorted(self._counters)
        ]
        self.interval = i + 1
        return TelemetryBatch(i, mpi_records, io_records, samples)

    # -- booking -------------------------------------------------------

    def _book_flow(self, truth, src_lid: int, dst_lid: int, nbytes: int, klass: str):
        if nbytes == 0 or src_lid == dst_lid:
            return
        for hop in route_path(self.topology, self.routing, src_lid, dst_lid):
            link = self.topology.link_by_id[hop.link_id]
            self._book_hop(truth, link, hop.direction, nbytes, klass)

    def _book_hop(self, truth, link: Link, direction: str, nbytes: int, klass: str):
        tx, rx = link.tx_end(direction), link.rx_end(direction)
        ctx = self._counters.setdefault((tx.guid, tx.port), [0] * 8)
        crx = self._counters.setdefault((rx.guid, rx.port), [0] * 8)
        pkts = math.ceil(nbytes / MTU_BYTES)
        ctx[0] += nbytes
        crx[1] += nbytes
        if klass != "noise":
            ctx[2] += pkts
            crx[3] += pkts
        if klass in ("mpi", "io"):
            ctx[4] += nbytes
            crx[5] += nbytes
        elif klass == "multicast":
            ctx[6] += nbytes
            crx[7] += nbytes
        slot = truth.setdefault(
            (link.id, direction), dict.fromkeys(_TRUTH_CLASSES, 0)
        )
        slot[klass] += nbytes

    # -- multicast spanning tree ----------------------------------------

    def _multicast_tree(self, job: JobSpec) -> list[tuple[Link, str]]:
        cached = self._mcast_trees.get(job.job_id)
        if cached is not None:
            return cached
        pattern = job.pattern
        assert isinstance(pattern, Multicast)
        source = job.node_guids[0]
        members = set(pattern.group_guids) - {source}
        scope = {source, *pattern.group_guids}
        view = job_subgraph(self.topology, self.routing, sorted(scope))

        adjacency: dict[int, list[tuple[int, Link]]] = {}
        for link_id in view.link_ids:
            link = self.topology.link_by_id[link_id]
            adjacency.setdefault(link.end_a.guid, []).append((link.end_b.guid, link))
            adjacency.setdefault(link.end_b.guid, []).append((link.end_a.guid, link))
        for guid in adjacency:
            adjacency[guid].sort(
                key=lambda pair: (self.topology.device_by_guid[pair[0]].lid, pair[1].id)
            )

        parent: dict[int, tuple[int, Link]] = {}
        seen = {source}
        frontier = [source]
        while frontier:
            nxt: list[int] = []
            for guid in frontier:
                for peer, link in adjacency.get(guid, ()):
                    if peer in seen:
                        continue
                    seen.add(peer)
                    parent[peer] = (guid, link)
                    nxt.append(peer)
            frontier = nxt

        keep: list[tuple[Link, str]] = []
        kept_ids: set[int] = set()
        for member in sorted(members, key=lambda g: self.topology.host_by_guid[g].lid):
            node = member
            while node != source and node in parent:
                up, link = parent[node]
                if link.id not in kept_ids:
                    kept_ids.add(link.id)
                    direction = A2B if link.end_a.guid == up else B2A
                    keep.append((link, direction))
                node = up
        self._mcast_trees[job.job_id] = keep
        return keep

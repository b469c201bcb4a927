"""Cross layer correlation: map telemetry onto fabric links.

Counter deltas are authoritative for total, unicast and multicast bytes
per link direction. Agent records are authoritative for the MPI and
storage split: each MpiRecord books bytes_sent along the forward route
from src to dst (bytes_recv along the same links reversed) and each
IoRecord books write_sum on the client to server route and read_sum on
the server to client route. Storage records whose server ip cannot be
resolved land in a quarantine bucket instead of being dropped.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .exceptions import (
    CounterRegression,
    MalformedLine,
    TooFewNodes,
    UnknownGuid,
    UnresolvedHost,
)
from .routing import RoutingTable, route_path
from .simulator import TelemetryBatch
from .topology import A2B, B2A, FabricTopology, HostNode, LinkEnd
from .vizmodel import RADAR_AXES, capacity_bytes_per_interval
from .wire import CounterSample, IoRecord


@dataclass(frozen=True)
class HostMaps:
    """Name resolution inputs: an /etc/hosts style map plus an arp table."""

    hosts_map: dict[str, str]  # ip -> hostname
    arp_map: dict[str, int]    # ip -> device guid

    @classmethod
    def from_topology(cls, topology: FabricTopology) -> "HostMaps":
        return cls(
            hosts_map={h.ip: h.hostname for h in topology.hosts},
            arp_map={h.ip: h.guid for h in topology.hosts},
        )


def parse_hosts_file(text: str) -> dict[str, str]:
    """``<ip> <hostname> [aliases...]`` lines; first hostname wins."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 2:
            raise MalformedLine(line_no, "expected: <ip> <hostname> [aliases...]")
        out.setdefault(fields[0], fields[1])
    return out


def parse_arp_file(text: str) -> dict[str, int]:
    """``<ip> <guid-hex16>`` lines."""
    out: dict[str, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise MalformedLine(line_no, "expected: <ip> <guid-hex16>")
        try:
            out[fields[0]] = int(fields[1], 16)
        except ValueError:
            raise MalformedLine(line_no, f"bad guid {fields[1]!r}") from None
    return out


def resolve_host(maps: HostMaps, topology: FabricTopology, ip: str) -> str:
    """Resolve an ip to a hostname, falling back to arp plus the topology."""
    name = maps.hosts_map.get(ip)
    if name is not None:
        return name
    guid = maps.arp_map.get(ip)
    if guid is not None:
        host = topology.host_by_guid.get(guid)
        if host is not None:
            return host.hostname
    raise UnresolvedHost(ip)


@dataclass
class JobBytes:
    mpi: int = 0
    io: int = 0


@dataclass
class DirectionStats:
    total_bytes: int = 0
    mpi_bytes: int = 0
    io_bytes: int = 0
    unicast_bytes: int = 0
    multicast_bytes: int = 0
    per_job: dict[int, JobBytes] = field(default_factory=dict)

    def job(self, job_id: int) -> JobBytes:
        slot = self.per_job.get(job_id)
        if slot is None:
            slot = self.per_job[job_id] = JobBytes()
        return slot

    def attributed(self) -> int:
        return self.mpi_bytes + self.io_bytes


@dataclass
class LinkBreakdown:
    link_id: int
    interval: int
    a2b: DirectionStats = field(default_factory=DirectionStats)
    b2a: DirectionStats = field(default_factory=DirectionStats)

    def direction(self, name: str) -> DirectionStats:
        return self.a2b if name == A2B else self.b2a

    def job_totals(self) -> dict[int, JobBytes]:
        out: dict[int, JobBytes] = {}
        for stats in (self.a2b, self.b2a):
            for job_id, jb in stats.per_job.items():
                slot = out.setdefault(job_id, JobBytes())
                slot.mpi += jb.mpi
                slot.io += jb.io
        return out


@dataclass
class AttributionResult:
    interval: int
    breakdowns: list[LinkBreakdown]
    quarantined: list[IoRecord] = field(default_factory=list)

    def by_link(self) -> dict[int, LinkBreakdown]:
        return {b.link_id: b for b in self.breakdowns}


def _counter_delta(
    sample: CounterSample, prev: CounterSample | None
) -> dict[str, int]:
    fields = ("xmit_bytes", "rcv_bytes", "xmit_pkts", "rcv_pkts",
              "unicast_xmit_bytes", "unicast_rcv_bytes",
              "multicast_xmit_bytes", "multicast_rcv_bytes")
    out: dict[str, int] = {}
    for name in fields:
        now = getattr(sample, name)
        before = getattr(prev, name) if prev is not None else 0
        if now < before:
            raise CounterRegression(sample.device_guid, sample.port, name)
        out[name] = now - before
    return out


def attribute(
    topology: FabricTopology,
    routing: RoutingTable,
    batch: TelemetryBatch,
    maps: HostMaps,
    prev_counters: dict[tuple[int, int], CounterSample] | None = None,
) -> AttributionResult:
    """Book one interval's records and counter deltas onto links.

    ``prev_counters`` holds the prior sample per (guid, port); deltas are
    measured against it, or from zero on first sight. Only links that
    saw traffic appear in the result.
    """
    acc: dict[int, LinkBreakdown] = {}

    def slot(link_id: int) -> LinkBreakdown:
        bd = acc.get(link_id)
        if bd is None:
            bd = acc[link_id] = LinkBreakdown(link_id, batch.interval)
        return bd

    def book_records(src: HostNode, dst: HostNode, nbytes: int, klass: str, job_id: int):
        if nbytes == 0 or src.lid == dst.lid:
            return
        for hop in route_path(topology, routing, src.lid, dst.lid):
            stats = slot(hop.link_id).direction(hop.direction)
            if klass == "mpi":
                stats.mpi_bytes += nbytes
                stats.job(job_id).mpi += nbytes
            else:
                stats.io_bytes += nbytes
                stats.job(job_id).io += nbytes

    def book_reverse(src: HostNode, dst: HostNode, nbytes: int, job_id: int):
        # bytes_recv rides the same links as the forward path, reversed
        if nbytes == 0 or src.lid == dst.lid:
            return
        for hop in route_path(topology, routing, src.lid, dst.lid):
            direction = B2A if hop.direction == A2B else A2B
            stats = slot(hop.link_id).direction(direction)
            stats.mpi_bytes += nbytes
            stats.job(job_id).mpi += nbytes

    for rec in batch.mpi_records:
        src = topology.host_by_guid.get(rec.src_guid)
        dst = topology.host_by_guid.get(rec.dst_guid)
        if src is None:
            raise UnknownGuid(rec.src_guid, "mpi src")
        if dst is None:
            raise UnknownGuid(rec.dst_guid, "mpi dst")
        book_records(src, dst, rec.bytes_sent, "mpi", rec.job_id)
        book_reverse(src, dst, rec.bytes_recv, rec.job_id)

    quarantined: list[IoRecord] = []
    for rec in batch.io_records:
        client = topology.host_by_guid.get(rec.node_guid)
        if client is None:
            raise UnknownGuid(rec.node_guid, "io client")
        try:
            oss_name = resolve_host(maps, topology, rec.oss_ip)
            oss = topology.host_by_name.get(oss_name)
            if oss is None:
                raise UnresolvedHost(rec.oss_ip)
        except UnresolvedHost:
            quarantined.append(rec)
            continue
        book_records(client, oss, rec.write_sum, "io", rec.job_id)
        book_records(oss, client, rec.read_sum, "io", rec.job_id)

    # counter deltas: the transmitting end is authoritative for a
    # direction's totals; the receiving end only fills gaps.
    tx_seen: set[tuple[int, int]] = set()
    rcv_fallback: dict[tuple[int, str], dict[str, int]] = {}
    prev_counters = prev_counters or {}
    for sample in batch.counter_samples:
        key = (sample.device_guid, sample.port)
        if sample.device_guid not in topology.device_by_guid:
            raise UnknownGuid(sample.device_guid, "counter sample")
        link = topology.port_map.get(LinkEnd(*key))
        if link is None:
            raise UnknownGuid(sample.device_guid, f"port {sample.port} has no link")
        delta = _counter_delta(sample, prev_counters.get(key))
        out_dir = A2B if link.end_a.guid == sample.device_guid else B2A
        in_dir = B2A if out_dir == A2B else A2B
        if delta["xmit_bytes"] or delta["unicast_xmit_bytes"] or delta["multicast_xmit_bytes"]:
            stats = slot(link.id).direction(out_dir)
            stats.total_bytes += delta["xmit_bytes"]
            stats.unicast_bytes += delta["unicast_xmit_bytes"]
            stats.multicast_bytes += delta["multicast_xmit_bytes"]
        tx_seen.add((link.id, out_dir))
        rcv_fallback[(link.id, in_dir)] = delta

    for (link_id, direction), delta in rcv_fallback.items():
        if (link_id, direction) in tx_seen:
            continue
        if not (delta["rcv_bytes"] or delta["unicast_rcv_bytes"] or delta["multicast_rcv_bytes"]):
            continue
        stats = slot(link_id).direction(direction)
        stats.total_bytes += delta["rcv_bytes"]
        stats.unicast_bytes += delta["unicast_rcv_bytes"]
        stats.multicast_bytes += delta["multicast_rcv_bytes"]

    breakdowns = [acc[k] for k in sorted(acc)]
    return AttributionResult(batch.interval, breakdowns, quarantined)


# -------------------------------------------------------- device rollups

@dataclass
class DeviceClassTotals:
    """Per device class byte totals over one or more intervals."""

    unicast_sent: int = 0
    unicast_recv: int = 0
    multicast_sent: int = 0
    multicast_recv: int = 0
    mpi_sent: int = 0
    mpi_recv: int = 0
    io_sent: int = 0
    io_recv: int = 0
    total_sent: int = 0
    total_recv: int = 0

    def axis_values(self) -> tuple[int, ...]:
        return tuple(getattr(self, axis) for axis in RADAR_AXES)

    def add(self, other: "DeviceClassTotals") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


def device_class_totals(
    topology: FabricTopology, breakdowns: list[LinkBreakdown]
) -> dict[int, DeviceClassTotals]:
    """Roll link direction stats up to the devices at each end."""
    out: dict[int, DeviceClassTotals] = {}

    def totals(guid: int) -> DeviceClassTotals:
        t = out.get(guid)
        if t is None:
            t = out[guid] = DeviceClassTotals()
        return t

    for bd in breakdowns:
        link = topology.link_by_id[bd.link_id]
        for direction in (A2B, B2A):
            stats = bd.direction(direction)
            tx = totals(link.tx_end(direction).guid)
            rx = totals(link.rx_end(direction).guid)
            tx.total_sent += stats.total_bytes
            tx.unicast_sent += stats.unicast_bytes
            tx.multicast_sent += stats.multicast_bytes
            tx.mpi_sent += stats.mpi_bytes
            tx.io_sent += stats.io_bytes
            rx.total_recv += stats.total_bytes
            rx.unicast_recv += stats.unicast_bytes
            rx.multicast_recv += stats.multicast_bytes
            rx.mpi_recv += stats.mpi_bytes
            rx.io_recv += stats.io_bytes
    return out


# ----------------------------------------------------------- radar math

@dataclass(frozen=True)
class RadarVector:
    """Eight axis values in [0, 1], ordered as vizmodel.RADAR_AXES."""

    mode: str  # absolute | relative
    values: tuple[float, ...]

    def __post_init__(self):
        if self.mode not in ("absolute", "relative"):
            raise ValueError(f"bad radar mode {self.mode!r}")
        if len(self.values) != len(RADAR_AXES):
            raise ValueError(f"expected {len(RADAR_AXES)} values")


def radar_values(
    totals: DeviceClassTotals,
    link_capacities_bps: list[int],
    interval_seconds: float,
    mode: str = "absolute",
) -> RadarVector:
    """Normalize class totals for radar display.

    absolute: every axis is divided by the device's attached capacity in
    bytes over the window. relative: sent axes are divided by total_sent
    and recv axes by total_recv. A zero denominator yields zero, and all
    values clamp into [0, 1].
    """
    raw = totals.axis_values()
    if mode == "absolute":
        cap = sum(
            capacity_bytes_per_interval(c, interval_seconds)
            for c in link_capacities_bps
        )
        denoms = [cap] * len(raw)
    elif mode == "relative":
        denoms = [
            float(totals.total_sent if axis.endswith("_sent") else totals.total_recv)
            for axis in RADAR_AXES
        ]
    else:
        raise ValueError(f"bad radar mode {mode!r}")
    values = tuple(
        0.0 if d <= 0 else min(1.0, max(0.0, v / d))
        for v, d in zip(raw, denoms)
    )
    return RadarVector(mode, values)


# --------------------------------------------------------- shared links

@dataclass(frozen=True)
class SharedLinkReport:
    link_id: int
    first_interval: int
    last_interval: int
    job_bytes: dict[int, int]      # job id -> bytes over the contended intervals
    utilization: float             # worst single direction fraction seen


def shared_links(
    breakdowns: list[LinkBreakdown],
    min_fraction_per_job: float,
    capacities_bps: dict[int, int],
    interval_seconds: float,
) -> list[SharedLinkReport]:
    """Links where two or more jobs each clear the contention floor.

    A link qualifies for an interval when, in at least one direction,
    two distinct jobs each moved at least min_fraction_per_job of the
    direction's interval capacity.
    """
    hits: dict[int, dict[int, dict[int, int]]] = {}  # link -> interval -> job -> bytes
    peak: dict[int, float] = {}
    for bd in breakdowns:
        cap_bps = capacities_bps.get(bd.link_id)
        if cap_bps is None:
            raise UnknownGuid(bd.link_id, "no capacity for link")
        floor = min_fraction_per_job * capacity_bytes_per_interval(
            cap_bps, interval_seconds
        )
        for direction in (A2B, B2A):
            stats = bd.direction(direction)
            heavy = {
                job_id: jb.mpi + jb.io
                for job_id, jb in stats.per_job.items()
                if jb.mpi + jb.io >= floor and jb.mpi + jb.io > 0
            }
            if len(heavy) < 2:
                continue
            per_interval = hits.setdefault(bd.link_id, {}).setdefault(bd.interval, {})
            for job_id, nbytes in heavy.items():
                per_interval[job_id] = per_interval.get(job_id, 0) + nbytes
            frac = stats.total_bytes / capacity_bytes_per_interval(
                cap_bps, interval_seconds
            )
            peak[bd.link_id] = max(peak.get(bd.link_id, 0.0), frac)

    reports = []
    for link_id in sorted(hits):
        intervals = hits[link_id]
        job_bytes: dict[int, int] = {}
        for per_job in intervals.values():
            for job_id, nbytes in per_job.items():
                job_bytes[job_id] = job_bytes.get(job_id, 0) + nbytes
        reports.append(SharedLinkReport(
            link_id,
            min(intervals),
            max(intervals),
            dict(sorted(job_bytes.items())),
            peak[link_id],
        ))
    return reports


# -------------------------------------------------------------- outliers

def outlier_nodes(
    vectors: dict[int, RadarVector], delta: float
) -> list[int]:
    """Hosts whose radar vector strays from the per axis median.

    Deviation is the largest absolute per axis difference; strictly
    greater than ``delta`` flags the host. Needs three or more hosts.
    """
    if len(vectors) < 3:
        raise TooFewNodes(len(vectors))
    modes = {v.mode for v in vectors.values()}
    if len(modes) > 1:
        raise ValueError(f"mixed radar modes: {sorted(modes)}")
    axis_count = len(RADAR_AXES)
    medians = [
        statistics.median(v.values[i] for v in vectors.values())
        for i in range(axis_count)
    ]
    flagged = [
        guid
        for guid, vec in vectors.items()
        if max(abs(vec.values[i] - medians[i]) for i in range(axis_count)) > delta
    ]
    return sorted(flagged)

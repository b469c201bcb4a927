"""Fabric topology model: switches, hosts, links, and the file format.

The on-disk format is line oriented text. ``#`` starts a comment, blank
lines are ignored, and three record kinds exist:

    switch <guid-hex16> <lid-dec> <edge|root> <port_count>
    host   <guid-hex16> <lid-dec> <hostname> <ip> <compute|storage>
    link   <guidA-hex16>:<portA> <guidB-hex16>:<portB> <capacity_gbps>

Link ids are assigned in file order starting at zero, so a serialize /
parse round trip reproduces the same object.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

from .exceptions import (
    DanglingLinkEndpoint,
    DuplicateGuid,
    DuplicateLid,
    MalformedLine,
    PortConflict,
    TopologyInvariantError,
    UnknownGuid,
)

EDGE = "edge"
ROOT = "root"
COMPUTE = "compute"
STORAGE = "storage"

# Direction labels for traffic over a link, named after its endpoints.
A2B = "a2b"
B2A = "b2a"
DIRECTIONS = (A2B, B2A)


class LinkEnd(NamedTuple):
    guid: int
    port: int


@dataclass(frozen=True)
class SwitchNode:
    guid: int
    lid: int
    kind: str  # edge | root
    port_count: int


@dataclass(frozen=True)
class HostNode:
    guid: int
    lid: int
    hostname: str
    ip: str
    kind: str = COMPUTE  # compute | storage


@dataclass(frozen=True)
class Link:
    id: int
    end_a: LinkEnd
    end_b: LinkEnd
    capacity_bps: int

    def end_of(self, guid: int) -> LinkEnd:
        if self.end_a.guid == guid:
            return self.end_a
        if self.end_b.guid == guid:
            return self.end_b
        raise UnknownGuid(guid, f"not an endpoint of link {self.id}")

    def other_end(self, guid: int) -> LinkEnd:
        if self.end_a.guid == guid:
            return self.end_b
        if self.end_b.guid == guid:
            return self.end_a
        raise UnknownGuid(guid, f"not an endpoint of link {self.id}")

    def tx_end(self, direction: str) -> LinkEnd:
        """Endpoint that transmits when traffic flows in ``direction``."""
        return self.end_a if direction == A2B else self.end_b

    def rx_end(self, direction: str) -> LinkEnd:
        return self.end_b if direction == A2B else self.end_a


@dataclass(frozen=True)
class FabricTopology:
    switches: tuple[SwitchNode, ...]
    hosts: tuple[HostNode, ...]
    links: tuple[Link, ...]

    # -- lookups are built lazily and cached; the dataclass stays frozen --

    @cached_property
    def device_by_guid(self) -> dict[int, SwitchNode | HostNode]:
        out: dict[int, SwitchNode | HostNode] = {s.guid: s for s in self.switches}
        out.update({h.guid: h for h in self.hosts})
        return out

    @cached_property
    def host_by_lid(self) -> dict[int, HostNode]:
        return {h.lid: h for h in self.hosts}

    @cached_property
    def host_by_guid(self) -> dict[int, HostNode]:
        return {h.guid: h for h in self.hosts}

    @cached_property
    def host_by_name(self) -> dict[str, HostNode]:
        return {h.hostname: h for h in self.hosts}

    @cached_property
    def switch_by_guid(self) -> dict[int, SwitchNode]:
        return {s.guid: s for s in self.switches}

    @cached_property
    def device_by_lid(self) -> dict[int, SwitchNode | HostNode]:
        out: dict[int, SwitchNode | HostNode] = {s.lid: s for s in self.switches}
        out.update(self.host_by_lid)
        return out

    @cached_property
    def link_by_id(self) -> dict[int, Link]:
        return {l.id: l for l in self.links}

    @cached_property
    def links_at(self) -> dict[int, tuple[Link, ...]]:
        acc: dict[int, list[Link]] = {d: [] for d in self.device_by_guid}
        for l in self.links:
            acc[l.end_a.guid].append(l)
            acc[l.end_b.guid].append(l)
        return {g: tuple(ls) for g, ls in acc.items()}

    @cached_property
    def port_map(self) -> dict[LinkEnd, Link]:
        return {end: l for l in self.links for end in (l.end_a, l.end_b)}

    @cached_property
    def host_link(self) -> dict[int, Link]:
        """Host guid to its single attach link."""
        out: dict[int, Link] = {}
        for h in self.hosts:
            ls = self.links_at.get(h.guid, ())
            if len(ls) == 1:
                out[h.guid] = ls[0]
        return out

    @cached_property
    def host_edge_guid(self) -> dict[int, int]:
        """Host lid to the guid of the edge switch it hangs off."""
        out: dict[int, int] = {}
        for h in self.hosts:
            link = self.host_link.get(h.guid)
            if link is not None:
                out[h.lid] = link.other_end(h.guid).guid
        return out

    def edge_switches(self) -> list[SwitchNode]:
        return [s for s in self.switches if s.kind == EDGE]

    def root_switches(self) -> list[SwitchNode]:
        return [s for s in self.switches if s.kind == ROOT]

    def counts(self) -> tuple[int, int, int]:
        """(hosts, switches, links)"""
        return len(self.hosts), len(self.switches), len(self.links)


@dataclass(frozen=True)
class ViewGroup:
    """A collapsed set of compute hosts hanging off one edge switch."""

    group_id: str
    switch_guid: int
    members: tuple[int, ...]  # host guids


@dataclass(frozen=True)
class GroupLink:
    """Stand-in for the attach links of a collapsed host group."""

    group_id: str
    switch_guid: int
    link_count: int
    capacity_bps: int  # summed member capacity


@dataclass(frozen=True)
class TopologyView:
    device_guids: tuple[int, ...]
    link_ids: tuple[int, ...]
    groups: tuple[ViewGroup, ...] = ()
    group_links: tuple[GroupLink, ...] = ()


def validate_topology(t: FabricTopology) -> None:
    """Check every structural fabric rule, raising on the first violation."""
    lids: set[int] = set()
    guids: set[int] = set()
    for dev in list(t.switches) + list(t.hosts):
        if dev.lid in lids:
            raise DuplicateLid(dev.lid)
        if dev.guid in guids:
            raise DuplicateGuid(dev.guid)
        lids.add(dev.lid)
        guids.add(dev.guid)

    seen_ports: set[LinkEnd] = set()
    seen_link_ids: set[int] = set()
    for l in t.links:
        if l.id in seen_link_ids:
            raise TopologyInvariantError(f"duplicate link id {l.id}")
        seen_link_ids.add(l.id)
        if l.capacity_bps <= 0:
            raise TopologyInvariantError(f"link {l.id} has non-positive capacity")
        if l.end_a.guid == l.end_b.guid:
            raise TopologyInvariantError(f"link {l.id} connects a device to itself")
        for end in (l.end_a, l.end_b):
            if end.guid not in t.device_by_guid:
                raise DanglingLinkEndpoint(end.guid)
            if end in seen_ports:
                raise PortConflict(end.guid, end.port)
            seen_ports.add(end)

    for h in t.hosts:
        attached = t.links_at.get(h.guid, ())
        if len(attached) != 1:
            raise TopologyInvariantError(
                f"host {h.hostname} has {len(attached)} links, expected exactly 1"
            )
        peer = attached[0].other_end(h.guid).guid
        peer_dev = t.device_by_guid[peer]
        if not isinstance(peer_dev, SwitchNode) or peer_dev.kind != EDGE:
            raise TopologyInvariantError(
                f"host {h.hostname} must attach to an edge switch"
            )

    for s in t.switches:
        attached = t.links_at.get(s.guid, ())
        if s.port_count < len(attached):
            raise TopologyInvariantError(
                f"switch {s.guid:#018x} has {len(attached)} links but only "
                f"{s.port_count} ports"
            )
        host_links = [
            l for l in attached
            if isinstance(t.device_by_guid[l.other_end(s.guid).guid], HostNode)
        ]
        if s.kind == ROOT and host_links:
            raise TopologyInvariantError(
                f"root switch {s.guid:#018x} has a host link"
            )
        if s.kind == EDGE and not host_links:
            raise TopologyInvariantError(
                f"edge switch {s.guid:#018x} has no host link"
            )


def _parse_guid(token: str, line_no: int) -> int:
    try:
        value = int(token, 16)
    except ValueError:
        raise MalformedLine(line_no, f"bad guid {token!r}") from None
    if not 0 <= value < 1 << 64:
        raise MalformedLine(line_no, f"guid {token!r} out of 64-bit range")
    return value


def _parse_endpoint(token: str, line_no: int) -> LinkEnd:
    guid_s, sep, port_s = token.partition(":")
    if not sep:
        raise MalformedLine(line_no, f"endpoint {token!r} is not guid:port")
    try:
        port = int(port_s)
    except ValueError:
        raise MalformedLine(line_no, f"bad port in {token!r}") from None
    if port < 0:
        raise MalformedLine(line_no, f"negative port in {token!r}")
    return LinkEnd(_parse_guid(guid_s, line_no), port)


def parse_topology(text: str) -> FabricTopology:
    """Parse the topology file format, validating every fabric rule."""
    switches: list[SwitchNode] = []
    hosts: list[HostNode] = []
    raw_links: list[tuple[int, LinkEnd, LinkEnd, int]] = []
    lids: set[int] = set()
    guids: set[int] = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        tag = fields[0]
        if tag == "switch":
            if len(fields) != 5:
                raise MalformedLine(line_no, "switch needs guid, lid, kind, port_count")
            guid = _parse_guid(fields[1], line_no)
            try:
                lid = int(fields[2])
                port_count = int(fields[4])
            except ValueError:
                raise MalformedLine(line_no, "lid and port_count must be integers") from None
            kind = fields[3]
            if kind not in (EDGE, ROOT):
                raise MalformedLine(line_no, f"switch kind must be edge or root, got {kind!r}")
            if lid <= 0 or port_count <= 0:
                raise MalformedLine(line_no, "lid and port_count must be positive")
            if lid in lids:
                raise DuplicateLid(lid)
            if guid in guids:
                raise DuplicateGuid(guid)
            lids.add(lid)
            guids.add(guid)
            switches.append(SwitchNode(guid, lid, kind, port_count))
        elif tag == "host":
            if len(fields) != 6:
                raise MalformedLine(line_no, "host needs guid, lid, hostname, ip, kind")
            guid = _parse_guid(fields[1], line_no)
            try:
                lid = int(fields[2])
            except ValueError:
                raise MalformedLine(line_no, "lid must be an integer") from None
            hostname, ip, kind = fields[3], fields[4], fields[5]
            if kind not in (COMPUTE, STORAGE):
                raise MalformedLine(line_no, f"host kind must be compute or storage, got {kind!r}")
            if lid <= 0:
                raise MalformedLine(line_no, "lid must be positive")
            try:
                ipaddress.ip_address(ip)
            except ValueError:
                raise MalformedLine(line_no, f"bad ip {ip!r}") from None
            if lid in lids:
                raise DuplicateLid(lid)
            if guid in guids:
                raise DuplicateGuid(guid)
            lids.add(lid)
            guids.add(guid)
            hosts.append(HostNode(guid, lid, hostname, ip, kind))
        elif tag == "link":
            if len(fields) != 4:
                raise MalformedLine(line_no, "link needs two endpoints and capacity_gbps")
            end_a = _parse_endpoint(fields[1], line_no)
            end_b = _parse_endpoint(fields[2], line_no)
            try:
                gbps = float(fields[3])
            except ValueError:
                raise MalformedLine(line_no, f"bad capacity {fields[3]!r}") from None
            if gbps <= 0:
                raise MalformedLine(line_no, "capacity must be positive")
            raw_links.append((line_no, end_a, end_b, round(gbps * 1_000_000_000)))
        else:
            raise MalformedLine(line_no, f"unknown record kind {tag!r}")

    links: list[Link] = []
    seen_ports: set[LinkEnd] = set()
    for link_id, (line_no, end_a, end_b, bps) in enumerate(raw_links):
        for end in (end_a, end_b):
            if end.guid not in guids:
                raise DanglingLinkEndpoint(end.guid)
            if end in seen_ports:
                raise PortConflict(end.guid, end.port)
            seen_ports.add(end)
        links.append(Link(link_id, end_a, end_b, bps))

    topo = FabricTopology(tuple(switches), tuple(hosts), tuple(links))
    validate_topology(topo)
    return topo


def _format_gbps(bps: int) -> str:
    gbps = bps / 1_000_000_000
    return f"{gbps:g}"


def serialize_topology(t: FabricTopology) -> str:
    """Inverse of parse_topology; link order carries the link ids."""
    out = ["# fabric topology"]
    for s in t.switches:
        out.append(f"switch {s.guid:016x} {s.lid} {s.kind} {s.port_count}")
    for h in t.hosts:
        out.append(f"host {h.guid:016x} {h.lid} {h.hostname} {h.ip} {h.kind}")
    for l in sorted(t.links, key=lambda l: l.id):
        out.append(
            f"link {l.end_a.guid:016x}:{l.end_a.port} "
            f"{l.end_b.guid:016x}:{l.end_b.port} {_format_gbps(l.capacity_bps)}"
        )
    return "\n".join(out) + "\n"


def cluster_compute_view(t: FabricTopology) -> TopologyView:
    """Collapse the compute hosts under each edge switch into one group.

    Switch to switch links and storage hosts are kept as is. A topology
    without hosts comes back unchanged.
    """
    grouped: dict[int, list[HostNode]] = {}
    for h in t.hosts:
        if h.kind != COMPUTE:
            continue
        edge_guid = t.host_edge_guid.get(h.lid)
        if edge_guid is not None:
            grouped.setdefault(edge_guid, []).append(h)

    hidden_hosts: set[int] = set()
    groups: list[ViewGroup] = []
    group_links: list[GroupLink] = []
    for edge_guid in sorted(grouped):
        members = sorted(grouped[edge_guid], key=lambda h: h.lid)
        edge = t.switch_by_guid[edge_guid]
        gid = f"grp-{edge.lid}"
        groups.append(ViewGroup(gid, edge_guid, tuple(h.guid for h in members)))
        cap = sum(t.host_link[h.guid].capacity_bps for h in members)
        group_links.append(GroupLink(gid, edge_guid, len(members), cap))
        hidden_hosts.update(h.guid for h in members)

    devices = [s.guid for s in t.switches]
    devices += [h.guid for h in t.hosts if h.guid not in hidden_hosts]
    link_ids = [
        l.id
        for l in t.links
        if l.end_a.guid not in hidden_hosts and l.end_b.guid not in hidden_hosts
    ]
    return TopologyView(
        tuple(devices), tuple(link_ids), tuple(groups), tuple(group_links)
    )

"""Static destination based routing over two-level fat trees.

Each switch gets one output port per destination host lid. Auto
computed tables follow the mod rule: an edge switch sends non-local
traffic up the uplink at index ``dst_lid mod uplink_count`` with
uplinks ordered by ascending link id, and a root switch picks among
its parallel links to the destination's edge switch the same way.
Other shapes must supply tables through the route file format:

    route <switch-guid-hex16> <dst-lid> <out-port>
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .exceptions import (
    MalformedLine,
    RoutingLoop,
    UnknownGuid,
    UnknownLid,
    UnroutableTopology,
)
from .topology import (
    A2B,
    B2A,
    EDGE,
    ROOT,
    FabricTopology,
    HostNode,
    Link,
    LinkEnd,
    SwitchNode,
    TopologyView,
)


class PathHop(NamedTuple):
    link_id: int
    direction: str  # a2b | b2a, relative to the link's endpoints


Path = tuple[PathHop, ...]


@dataclass(frozen=True)
class RoutingTable:
    """switch guid -> destination host lid -> output port."""

    entries: dict[int, dict[int, int]]

    def out_port(self, switch_guid: int, dst_lid: int) -> int:
        by_lid = self.entries.get(switch_guid)
        if by_lid is None:
            raise UnknownGuid(switch_guid, "no routing entries")
        port = by_lid.get(dst_lid)
        if port is None:
            raise UnknownLid(dst_lid)
        return port

    def entry_count(self) -> int:
        return sum(len(v) for v in self.entries.values())


def _check_fat_tree(t: FabricTopology) -> tuple[list[SwitchNode], list[SwitchNode]]:
    edges = t.edge_switches()
    roots = t.root_switches()
    edge_guids = {s.guid for s in edges}
    root_guids = {s.guid for s in roots}
    pair_links: set[tuple[int, int]] = set()
    for l in t.links:
        kinds = []
        for end in (l.end_a, l.end_b):
            dev = t.device_by_guid.get(end.guid)
            if dev is None:
                raise UnknownGuid(end.guid)
            if isinstance(dev, HostNode):
                kinds.append("host")
            else:
                kinds.append(dev.kind)
        pair = frozenset(kinds)
        if pair == {"host", EDGE} or (kinds == ["host"] * 2):
            continue
        if pair == {EDGE, ROOT}:
            a, b = l.end_a.guid, l.end_b.guid
            e, r = (a, b) if a in edge_guids else (b, a)
            pair_links.add((e, r))
            continue
        raise UnroutableTopology(
            f"link {l.id} joins {kinds[0]} and {kinds[1]}; only host-edge and "
            "edge-root links can be auto-routed"
        )
    if not roots and len(edges) > 1:
        raise UnroutableTopology("multiple edge switches but no root layer")
    for e in edges:
        for r in roots:
            if (e.guid, r.guid) not in pair_links:
                raise UnroutableTopology(
                    f"edge {e.guid:#018x} has no link to root {r.guid:#018x}"
                )
    return edges, roots


def compute_routing(t: FabricTopology) -> RoutingTable:
    """Build the complete mod-rule table for a two-level fat tree."""
    edges, roots = _check_fat_tree(t)
    host_lids = sorted(t.host_by_lid)
    entries: dict[int, dict[int, int]] = {}

    for sw in edges:
        local: dict[int, int] = {}
        uplink_ports: list[int] = []
        for l in sorted(t.links_at[sw.guid], key=lambda l: l.id):
            near = l.end_of(sw.guid)
            far = t.device_by_guid[l.other_end(sw.guid).guid]
            if isinstance(far, HostNode):
                local[far.lid] = near.port
            else:
                uplink_ports.append(near.port)
        table: dict[int, int] = {}
        for lid in host_lids:
            if lid in local:
                table[lid] = local[lid]
            else:
                if not uplink_ports:
                    raise UnroutableTopology(
                        f"edge {sw.guid:#018x} has no uplink for lid {lid}"
                    )
                table[lid] = uplink_ports[lid % len(uplink_ports)]
        entries[sw.guid] = table

    for sw in roots:
        down_by_edge: dict[int, list[int]] = {}
        for l in sorted(t.links_at[sw.guid], key=lambda l: l.id):
            near = l.end_of(sw.guid)
            far_guid = l.other_end(sw.guid).guid
            down_by_edge.setdefault(far_guid, []).append(near.port)
        table = {}
        for lid in host_lids:
            edge_guid = t.host_edge_guid[lid]
            ports = down_by_edge[edge_guid]
            table[lid] = ports[lid % len(ports)]
        entries[sw.guid] = table

    return RoutingTable(entries)


def parse_route_file(text: str) -> dict[int, dict[int, int]]:
    """Parse route override lines into switch guid -> lid -> port."""
    overrides: dict[int, dict[int, int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4 or fields[0] != "route":
            raise MalformedLine(line_no, "expected: route <guid> <dst-lid> <port>")
        try:
            guid = int(fields[1], 16)
            lid = int(fields[2])
            port = int(fields[3])
        except ValueError:
            raise MalformedLine(line_no, "guid is hex, lid and port are decimal") from None
        overrides.setdefault(guid, {})[lid] = port
    return overrides


def apply_route_overrides(
    table: RoutingTable, overrides: dict[int, dict[int, int]]
) -> RoutingTable:
    merged = {g: dict(v) for g, v in table.entries.items()}
    for guid, by_lid in overrides.items():
        merged.setdefault(guid, {}).update(by_lid)
    return RoutingTable(merged)


def serialize_routing(table: RoutingTable) -> str:
    out = ["# routing table"]
    for guid in sorted(table.entries):
        by_lid = table.entries[guid]
        for lid in sorted(by_lid):
            out.append(f"route {guid:016x} {lid} {by_lid[lid]}")
    return "\n".join(out) + "\n"


def route_path(
    t: FabricTopology, table: RoutingTable, src_lid: int, dst_lid: int
) -> Path:
    """Walk the table from one host to another, returning the hop list.

    A host routing to itself yields the empty path. The walk is bounded
    by the device count, so a corrupt table raises instead of spinning.
    """
    src = t.host_by_lid.get(src_lid)
    dst = t.host_by_lid.get(dst_lid)
    if src is None:
        raise UnknownLid(src_lid)
    if dst is None:
        raise UnknownLid(dst_lid)
    if src_lid == dst_lid:
        return ()

    hops: list[PathHop] = []
    attach = t.host_link.get(src.guid)
    if attach is None:
        raise UnroutableTopology(f"host {src.hostname} has no attach link")
    direction = A2B if attach.end_a.guid == src.guid else B2A
    hops.append(PathHop(attach.id, direction))
    current = attach.other_end(src.guid).guid

    limit = len(t.switches) + len(t.hosts) + 1
    while len(hops) < limit:
        dev = t.device_by_guid[current]
        if isinstance(dev, HostNode):
            if dev.lid == dst_lid:
                return tuple(hops)
            raise RoutingLoop(src_lid, dst_lid)
        port = table.out_port(current, dst_lid)
        link = t.port_map.get(LinkEnd(current, port))
        if link is None:
            raise UnroutableTopology(
                f"switch {current:#018x} routes lid {dst_lid} out port {port}, "
                "which has no link"
            )
        direction = A2B if link.end_a.guid == current else B2A
        hops.append(PathHop(link.id, direction))
        current = link.other_end(current).guid
    raise RoutingLoop(src_lid, dst_lid)


def path_switch_guids(t: FabricTopology, path: Path) -> list[int]:
    """Switch guids visited by a path, in travel order."""
    out: list[int] = []
    for hop in path:
        link = t.link_by_id[hop.link_id]
        rx = link.rx_end(hop.direction).guid
        if isinstance(t.device_by_guid[rx], SwitchNode):
            out.append(rx)
    return out


def path_edge_switch_guids(t: FabricTopology, path: Path) -> list[int]:
    return [
        g for g in path_switch_guids(t, path)
        if t.switch_by_guid[g].kind == EDGE
    ]


def job_subgraph(
    t: FabricTopology, table: RoutingTable, node_guids: Iterable[int]
) -> TopologyView:
    """Hosts of a job plus every device and link its pairwise routes touch."""
    nodes: list[HostNode] = []
    for guid in node_guids:
        host = t.host_by_guid.get(guid)
        if host is None:
            raise UnknownGuid(guid, "job node is not a fabric host")
        nodes.append(host)

    devices: set[int] = set()
    link_ids: set[int] = set()
    for h in nodes:
        devices.add(h.guid)
        attach = t.host_link.get(h.guid)
        if attach is not None:
            link_ids.add(attach.id)
            devices.add(attach.other_end(h.guid).guid)

    ordered = sorted(nodes, key=lambda h: h.lid)
    for a in ordered:
        for b in ordered:
            if a.lid == b.lid:
                continue
            for hop in route_path(t, table, a.lid, b.lid):
                link = t.link_by_id[hop.link_id]
                link_ids.add(link.id)
                devices.add(link.end_a.guid)
                devices.add(link.end_b.guid)
    return TopologyView(tuple(sorted(devices)), tuple(sorted(link_ids)))

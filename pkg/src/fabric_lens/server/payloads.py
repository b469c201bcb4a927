"""Pure builders turning core objects into JSON-ready dicts.

Guids travel as 16-hex-digit strings since doubles cannot hold them.
Everything here is side-effect free so response shapes can be unit
tested without a running server.
"""

from __future__ import annotations

from ..correlator import DeviceClassTotals, LinkBreakdown, radar_values
from ..notify import NotificationRule, format_scope
from ..store import JobRecord, LinkSeries, Store
from ..topology import (
    EDGE,
    FabricTopology,
    Link,
    TopologyView,
)
from ..vizmodel import (
    RADAR_AXES,
    band_legend,
    color_band,
    fan_control_points,
    radar_axis_angles,
    utilization_fraction,
)

METRIC_FIELDS = ("total", "mpi", "io", "unicast", "multicast")


def hexguid(guid: int) -> str:
    return f"{guid:016x}"


# ------------------------------------------------------------- topology

def _link_bundles(links: list[Link]) -> dict[int, dict]:
    """Fan-out assignment for parallel links sharing both endpoints.

    Each member gets its 1-based index k out of n siblings; the curve
    parameter t = k/n is all a renderer needs to place control points,
    because the control point is affine in k/n.
    """
    by_pair: dict[tuple[int, int], list[Link]] = {}
    for link in links:
        pair = tuple(sorted((link.end_a.guid, link.end_b.guid)))
        by_pair.setdefault(pair, []).append(link)
    out: dict[int, dict] = {}
    for pair, members in by_pair.items():
        n = len(members)
        if n < 2:
            continue
        members.sort(key=lambda l: l.id)
        for k, link in enumerate(members, start=1):
            out[link.id] = {
                "key": f"{hexguid(pair[0])}-{hexguid(pair[1])}",
                "n": n,
                "k": k,
                "t": k / n,
            }
    return out


def _device_row(topology: FabricTopology, guid: int) -> dict:
    dev = topology.device_by_guid[guid]
    row = {"guid": hexguid(guid), "lid": dev.lid, "kind": dev.kind}
    if hasattr(dev, "hostname"):
        row["hostname"] = dev.hostname
        row["ip"] = dev.ip
        row["tier"] = 2
    else:
        row["port_count"] = dev.port_count
        row["tier"] = 1 if dev.kind == EDGE else 0
    return row


def _link_row(link: Link, bundles: dict[int, dict]) -> dict:
    return {
        "id": link.id,
        "a": {"guid": hexguid(link.end_a.guid), "port": link.end_a.port},
        "b": {"guid": hexguid(link.end_b.guid), "port": link.end_b.port},
        "capacity_gbps": link.capacity_bps / 1e9,
        "bundle": bundles.get(link.id),
    }


def topology_payload(
    topology: FabricTopology, view: TopologyView | None = None
) -> dict:
    if view is None:
        guids = [d.guid for d in list(topology.switches) + list(topology.hosts)]
        links = list(topology.links)
        groups, group_links = (), ()
    else:
        guids = list(view.device_guids)
        links = [topology.link_by_id[i] for i in view.link_ids]
        groups, group_links = view.groups, view.group_links
    bundles = _link_bundles(links)
    return {
        "devices": [_device_row(topology, g) for g in guids],
        "links": [_link_row(l, bundles) for l in links],
        "groups": [
            {
                "id": g.group_id,
                "switch": hexguid(g.switch_guid),
                "members": [hexguid(m) for m in g.members],
            }
            for g in groups
        ],
        "group_links": [
            {
                "group": gl.group_id,
                "switch": hexguid(gl.switch_guid),
                "link_count": gl.link_count,
                "capacity_gbps": gl.capacity_bps / 1e9,
            }
            for gl in group_links
        ],
        "counts": {
            "switches": len(topology.switches),
            "hosts": len(topology.hosts),
            "links": len(topology.links),
            "shown_devices": len(guids),
            "shown_links": len(links),
        },
    }


# ------------------------------------------------------- link utilization

def _direction_bytes(bd: LinkBreakdown, metric: str) -> tuple[int, int]:
    field = f"{metric}_bytes"
    return getattr(bd.a2b, field), getattr(bd.b2a, field)


def utilization_rows(
    topology: FabricTopology,
    series: LinkSeries,
    metric: str,
    interval_seconds: float,
) -> list[dict]:
    if metric not in METRIC_FIELDS:
        raise ValueError(f"unknown metric {metric!r}")
    rows: list[dict] = []
    for bd in series.rows:
        link = topology.link_by_id[bd.link_id]
        a2b, b2a = _direction_bytes(bd, metric)
        total_a2b = bd.a2b.total_bytes or bd.a2b.attributed()
        total_b2a = bd.b2a.total_bytes or bd.b2a.attributed()
        fraction = utilization_fraction(
            total_a2b, total_b2a, link.capacity_bps, interval_seconds)
        band = color_band(fraction)
        rows.append({
            "link": bd.link_id,
            "interval": bd.interval,
            "a2b": a2b,
            "b2a": b2a,
            "utilization": fraction,
            "band": band.name,
            "color": band.color,
        })
    return rows


def breakdown_payload(
    topology: FabricTopology, series: LinkSeries, interval_seconds: float
) -> dict:
    intervals = []
    for bd in series.rows:
        link = topology.link_by_id[bd.link_id]
        def side(stats):
            return {
                "total": stats.total_bytes or stats.attributed(),
                "mpi": stats.mpi_bytes,
                "io": stats.io_bytes,
                "unicast": stats.unicast_bytes,
                "multicast": stats.multicast_bytes,
                "jobs": {
                    str(j): {"mpi": jb.mpi, "io": jb.io}
                    for j, jb in sorted(stats.per_job.items())
                },
            }
        fraction = utilization_fraction(
            bd.a2b.total_bytes or bd.a2b.attributed(),
            bd.b2a.total_bytes or bd.b2a.attributed(),
            link.capacity_bps, interval_seconds)
        band = color_band(fraction)
        intervals.append({
            "interval": bd.interval,
            "a2b": side(bd.a2b),
            "b2a": side(bd.b2a),
            "utilization": fraction,
            "band": band.name,
            "color": band.color,
        })
    return {"intervals": intervals, "gaps": list(series.gaps)}


# ------------------------------------------------------------- radar view

def _attached_capacities(topology: FabricTopology, guid: int) -> list[int]:
    return [l.capacity_bps for l in topology.links_at.get(guid, ())]


def radar_payload(
    topology: FabricTopology,
    guid: int,
    rows: list[tuple[int, DeviceClassTotals]],
    mode: str,
    interval_seconds: float,
) -> dict:
    totals = DeviceClassTotals()
    for _interval, t in rows:
        totals.add(t)
    window_s = interval_seconds * max(len(rows), 1)
    vector = radar_values(
        totals, _attached_capacities(topology, guid), window_s, mode)
    angles = radar_axis_angles(len(RADAR_AXES))
    return {
        "guid": hexguid(guid),
        "mode": mode,
        "intervals": [r[0] for r in rows],
        "axes": [
            {"axis": axis, "angle": angles[i], "value": vector.values[i]}
            for i, axis in enumerate(RADAR_AXES)
        ],
    }


def all_devices_radar(
    topology: FabricTopology,
    store: Store,
    start: int,
    end: int,
    mode: str,
    interval_seconds: float,
) -> list[dict]:
    out = []
    for guid in sorted(topology.device_by_guid):
        rows = store.query_device(start, end, guid)
        out.append(radar_payload(topology, guid, rows, mode, interval_seconds))
    return out


# ----------------------------------------------------------- replay / live

def _frame_link(topology: FabricTopology, bd: LinkBreakdown,
                interval_seconds: float) -> dict:
    link = topology.link_by_id[bd.link_id]
    def side(stats):
        return {
            "total": stats.total_bytes or stats.attributed(),
            "mpi": stats.mpi_bytes,
            "io": stats.io_bytes,
            "unicast": stats.unicast_bytes,
            "multicast": stats.multicast_bytes,
        }
    a2b, b2a = side(bd.a2b), side(bd.b2a)
    fraction = utilization_fraction(
        a2b["total"], b2a["total"], link.capacity_bps, interval_seconds)
    band = color_band(fraction)
    return {
        "link": bd.link_id,
        "a2b": a2b,
        "b2a": b2a,
        "utilization": fraction,
        "band": band.name,
        "color": band.color,
    }


def live_frame(
    topology: FabricTopology,
    interval: int,
    interval_ms: int,
    breakdowns: list[LinkBreakdown],
    events: list[dict],
) -> dict:
    interval_s = interval_ms / 1000.0
    return {
        "interval": interval,
        "ts": interval * interval_ms * 1_000_000,
        "links": [_frame_link(topology, bd, interval_s) for bd in breakdowns],
        "events": events,
    }


def replay_frames(
    topology: FabricTopology,
    store: Store,
    start: int,
    end: int,
    step: int,
    interval_ms: int,
) -> list[dict]:
    if step < 1:
        raise ValueError("step must be positive")
    frames = []
    for interval in range(start, end + 1, step):
        series = store.query_links(interval, interval)
        events = store.query_events(interval, interval)
        frames.append(live_frame(
            topology, interval, interval_ms, series.rows, events))
    return frames


# ------------------------------------------------------------ small stuff

def job_payload(topology: FabricTopology, job: JobRecord) -> dict:
    return {
        "id": job.job_id,
        "nodes": [hexguid(g) for g in job.node_guids],
        "hostnames": [
            topology.host_by_guid[g].hostname
            for g in job.node_guids if g in topology.host_by_guid
        ],
        "first_interval": job.first_interval,
        "last_interval": job.last_interval,
        "source": job.source,
    }


def rule_payload(rule: NotificationRule) -> dict:
    return {
        "id": rule.rule_id,
        "metric": rule.metric,
        "comparator": rule.comparator,
        "threshold": rule.threshold,
        "scope": format_scope(rule.scope),
        "period": rule.period,
    }


def fan_payload(x1: float, y1: float, x2: float, y2: float, n: int) -> dict:
    points = fan_control_points((x1, y1), (x2, y2), n)
    return {
        "n": n,
        "points": [{"k": k, "t": k / n, "x": p[0], "y": p[1]}
                   for k, p in enumerate(points, start=1)],
    }


def legend_payload() -> list[dict]:
    return band_legend()

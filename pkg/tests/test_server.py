"""Service-level tests: config, scenarios, HTTP surface, UDP ingest, CLI.

One simulated deployment is built per module and shared read-only by
the endpoint tests; mutating tests (rules CRUD) restore what they
touch.
"""

from __future__ import annotations

import json
import math
import socket
import time

import httpx
import pytest
from fastapi.testclient import TestClient

from fabric_lens.correlator import HostMaps
from fabric_lens.exceptions import BindFailure, InvalidJobSpec
from fabric_lens.notify import RuleEngine
from fabric_lens.routing import job_subgraph
from fabric_lens.simulator import FatTreeSpec, generate_fat_tree
from fabric_lens.store import Store
from fabric_lens.topology import parse_topology
from fabric_lens.vizmodel import band_legend, color_band
from fabric_lens.wire import MpiRecord, encode_record
from fabric_lens.server import cli
from fabric_lens.server.api import create_app
from fabric_lens.server.config import DATA_DIR_ENV, ServerConfig, load_config
from fabric_lens.server.ingest import UdpListener
from fabric_lens.server.pipeline import Pipeline, run_simulation
from fabric_lens.server.scenario import (
    build_simulator,
    load_scenario,
    scenario_from_dict,
)
from fabric_lens.server.state import make_state

from .oracles import fan_point_exact

INTERVALS = 6

_FABRIC = {
    "edge_switches": 2,
    "root_switches": 2,
    "hosts_per_edge": 2,
    "storage_hosts_per_edge": 1,
    "links_per_edge_root_pair": 2,
    "link_capacity_gbps": 100,
}


def _switch_switch_link_id() -> int:
    spec = FatTreeSpec(
        edge_switches=2, root_switches=2, hosts_per_edge=2,
        storage_hosts_per_edge=1, links_per_edge_root_pair=2,
    )
    topology = generate_fat_tree(spec)
    switch_guids = {s.guid for s in topology.switches}
    for link in topology.links:
        if link.end_a.guid in switch_guids and link.end_b.guid in switch_guids:
            return link.id
    raise AssertionError("no switch-switch link in generated tree")


def _scenario_dict() -> dict:
    return {
        "fabric": dict(_FABRIC),
        "interval_ms": 1000,
        "seed": 11,
        "jobs": [
            {
                "job_id": 1,
                "nodes": {"compute_indices": [0, 1, 2, 3]},
                "pattern": {"type": "alltoall", "bytes_per_pair": 50_000},
                "start": 0,
            },
            {
                "job_id": 2,
                "nodes": {"compute_indices": [0, 1]},
                "pattern": {
                    "type": "checkpoint",
                    "bytes_per_proc": 200_000,
                    "osts": {"storage_indices": [0]},
                },
                "start": 1,
                "end": 4,
            },
        ],
        "faults": [
            {
                "interval": 2,
                "metric": "XmtDiscards",
                "link_id": _switch_switch_link_id(),
                "value": 25,
            }
        ],
    }


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    scenario_path = root / "scenario.json"
    scenario_path.write_text(json.dumps(_scenario_dict()))
    rules_path = root / "rules.conf"
    rules_path.write_text("rule XmtDiscards exceeds 10 all\n")
    config = ServerConfig(
        mode="simulate",
        scenario_file=str(scenario_path),
        rules_file=str(rules_path),
        data_dir=str(root / "data"),
    )
    state = make_state(config)
    run_simulation(state.pipeline, state.simulator, INTERVALS)
    client = TestClient(create_app(state))
    yield state, client
    state.close()


# ---------------------------------------------------------------- config


class TestConfig:
    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "mode": "simulate", "scenario_file": "s.json",
            "http_port": 9000, "interval_ms": 250,
        }))
        config = load_config(path)
        assert config.mode == "simulate"
        assert config.http_port == 9000
        assert config.interval_ms == 250
        assert config.ingest_port == 9900  # default survives partial files

    def test_live_requires_topology(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mode": "live"}))
        with pytest.raises(ValueError, match="topology_file"):
            load_config(path)

    def test_simulate_requires_scenario(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mode": "simulate"}))
        with pytest.raises(ValueError, match="scenario_file"):
            load_config(path)

    @pytest.mark.parametrize("field,value", [
        ("http_port", 70000),
        ("ingest_port", -1),
        ("interval_ms", 99),
        ("mode", "replay"),
    ])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(Exception):
            ServerConfig(**{field: value})

    def test_data_dir_env_override(self, tmp_path, monkeypatch):
        config = ServerConfig(data_dir=str(tmp_path / "a"))
        assert config.resolved_data_dir() == tmp_path / "a"
        monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path / "b"))
        assert config.resolved_data_dir() == tmp_path / "b"


# -------------------------------------------------------------- scenario


class TestScenario:
    def test_missing_fabric(self):
        with pytest.raises(InvalidJobSpec, match="fabric"):
            scenario_from_dict({"jobs": []})

    def test_unknown_preset(self):
        with pytest.raises(InvalidJobSpec, match="preset"):
            scenario_from_dict({"fabric": {"preset": "summit"}})

    def test_preset_accepted(self):
        scenario = scenario_from_dict({"fabric": {"preset": "osc"}})
        assert scenario.spec.edge_switches == 90

    def test_defaults(self):
        scenario = scenario_from_dict({"fabric": dict(_FABRIC)})
        assert scenario.interval_ms == 5000
        assert scenario.seed == 0
        assert scenario.jobs == [] and scenario.faults == []

    def test_capacity_gbps_conversion(self):
        raw = dict(_FABRIC, link_capacity_gbps=0.05)
        scenario = scenario_from_dict({"fabric": raw})
        assert scenario.spec.link_capacity == 50_000_000

    @pytest.mark.parametrize("nodes,msg", [
        ({"hostnames": ["node-9999"]}, "hostname"),
        ({"compute_indices": [99]}, "out of range"),
        ({"storage_indices": [5]}, "out of range"),
        ({}, "matched no hosts"),
        ("node-0001", "selector"),
    ])
    def test_bad_selectors(self, nodes, msg):
        raw = _scenario_dict()
        raw["jobs"][0]["nodes"] = nodes
        with pytest.raises(InvalidJobSpec, match=msg):
            build_simulator(scenario_from_dict(raw))

    def test_unknown_pattern(self):
        raw = _scenario_dict()
        raw["jobs"][0]["pattern"] = {"type": "stencil"}
        with pytest.raises(InvalidJobSpec, match="pattern"):
            build_simulator(scenario_from_dict(raw))

    def test_selector_forms_agree(self):
        topology = generate_fat_tree(FatTreeSpec(
            edge_switches=2, root_switches=2, hosts_per_edge=2,
            storage_hosts_per_edge=1, links_per_edge_root_pair=2,
        ))
        first = topology.host_by_name["node-0001"]
        raw = _scenario_dict()
        raw["jobs"] = [{
            "job_id": 7,
            "nodes": {
                "hostnames": ["node-0002"],
                "guids": [f"{first.guid:016x}"],
            },
            "pattern": {"type": "alltoall", "bytes_per_pair": 10},
        }]
        raw["faults"] = []
        sim = build_simulator(scenario_from_dict(raw))
        job = sim.jobs[7]
        assert first.guid in job.node_guids
        assert topology.host_by_name["node-0002"].guid in job.node_guids

    def test_build_simulator_wires_faults(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(_scenario_dict()))
        sim = build_simulator(load_scenario(path))
        assert set(sim.jobs) == {1, 2}
        assert sim.error_counters_at(2)  # injected fault is visible
        assert not sim.error_counters_at(1)


# ----------------------------------------------------------------- state


class TestState:
    def test_live_mode_wiring(self, tmp_path, reference_text):
        topo_path = tmp_path / "fabric.topo"
        topo_path.write_text(reference_text)
        rules_path = tmp_path / "rules.conf"
        rules_path.write_text("rule RcvErrors exceeds 5 all\n")
        hosts_path = tmp_path / "hosts.map"
        hosts_path.write_text("10.9.9.9 spare-host\n")
        config = ServerConfig(
            mode="live",
            topology_file=str(topo_path),
            rules_file=str(rules_path),
            hosts_file=str(hosts_path),
            data_dir=str(tmp_path / "data"),
            interval_ms=500,
        )
        state = make_state(config)
        try:
            assert len(state.topology.hosts) == 4
            assert state.pipeline.interval_ms == 500
            assert [r.metric for r in state.engine.rules()] == ["RcvErrors"]
            assert state.maps.hosts_map["10.9.9.9"] == "spare-host"
            # topology-derived names still resolve
            assert any(v for v in state.maps.hosts_map.values())
            assert state.simulator is None
        finally:
            state.close()

    def test_data_dir_env_applies(self, tmp_path, monkeypatch, reference_text):
        topo_path = tmp_path / "fabric.topo"
        topo_path.write_text(reference_text)
        override = tmp_path / "elsewhere"
        monkeypatch.setenv(DATA_DIR_ENV, str(override))
        config = ServerConfig(
            mode="live", topology_file=str(topo_path),
            data_dir=str(tmp_path / "ignored"),
        )
        state = make_state(config)
        try:
            assert state.store.data_dir == override
            assert (override / "meta.json").exists()
            assert not (tmp_path / "ignored").exists()
        finally:
            state.close()


# ------------------------------------------------------------- endpoints


class TestHealthStats:
    def test_health(self, service):
        _, client = service
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["mode"] == "simulate"
        assert body["interval_ms"] == 1000
        assert body["uptime_s"] >= 0

    def test_stats(self, service):
        state, client = service
        body = client.get("/api/stats").json()
        assert body["pipeline"]["committed_intervals"] == INTERVALS
        assert body["pipeline"]["decode_errors"] == 0
        assert body["pipeline"]["records"] == body["pipeline"]["datagrams"]
        assert body["store"]["last_interval"] == INTERVALS - 1
        assert body["store"]["committed_intervals"] == INTERVALS
        assert body["fabric"]["links"] == len(state.topology.links)
        assert body["watermark"] == INTERVALS - 1


class TestTopologyEndpoint:
    def test_full_payload(self, service):
        state, client = service
        body = client.get("/api/topology").json()
        assert body["counts"]["links"] == len(state.topology.links)
        assert body["counts"]["shown_devices"] == (
            len(state.topology.switches) + len(state.topology.hosts))
        kinds = {d["kind"] for d in body["devices"]}
        assert {"edge", "root", "compute", "storage"} <= kinds
        for device in body["devices"]:
            assert len(device["guid"]) == 16
            assert device["tier"] in (0, 1, 2)

    def test_parallel_links_bundled(self, service):
        _, client = service
        body = client.get("/api/topology").json()
        bundled = [l for l in body["links"] if l["bundle"]]
        # 2 edges x 2 roots x 2 parallel links, all bundled
        assert len(bundled) == 8
        for link in bundled:
            assert link["bundle"]["n"] == 2
            assert link["bundle"]["k"] in (1, 2)
            assert link["bundle"]["t"] == link["bundle"]["k"] / 2
        attach = [l for l in body["links"] if not l["bundle"]]
        assert len(attach) == 6  # one per host

    def test_clustered_view(self, service):
        _, client = service
        body = client.get("/api/topology", params={"clustered": "true"}).json()
        assert body["groups"]
        member_count = sum(len(g["members"]) for g in body["groups"])
        assert member_count == 4  # compute hosts fold into groups
        assert all(gl["link_count"] >= 1 for gl in body["group_links"])

    def test_job_view(self, service):
        state, client = service
        body = client.get("/api/topology", params={"job": 1}).json()
        job = next(j for j in state.pipeline.jobs() if j.job_id == 1)
        view = job_subgraph(state.topology, state.routing, job.node_guids)
        assert body["counts"]["shown_links"] == len(view.link_ids)
        assert body["counts"]["shown_devices"] == len(view.device_guids)

    def test_unknown_job_view(self, service):
        _, client = service
        assert client.get("/api/topology", params={"job": 999}).status_code == 404


class TestLinkSeries:
    def test_pagination_envelope(self, service):
        _, client = service
        body = client.get("/api/links/utilization").json()
        assert set(body) == {
            "total", "limit", "offset", "rows", "metric", "from", "to", "gaps"}
        assert body["metric"] == "total"
        assert body["from"] == 0 and body["to"] == INTERVALS - 1
        assert body["gaps"] == []
        assert body["total"] == len(body["rows"])  # fits default limit

        page = client.get(
            "/api/links/utilization", params={"limit": 5, "offset": 2}).json()
        assert page["total"] == body["total"]
        assert len(page["rows"]) == 5
        assert page["rows"] == body["rows"][2:7]

        everything = client.get(
            "/api/links/utilization", params={"limit": 0}).json()
        assert len(everything["rows"]) == everything["total"]

    def test_row_shape(self, service):
        _, client = service
        rows = client.get("/api/links/utilization").json()["rows"]
        assert rows
        for row in rows:
            assert row["a2b"] >= 0 and row["b2a"] >= 0
            band = color_band(row["utilization"])
            assert row["band"] == band.name
            assert row["color"] == band.color

    def test_metric_selects_class(self, service):
        _, client = service
        total = client.get(
            "/api/links/utilization", params={"limit": 0}).json()["rows"]
        mpi = client.get(
            "/api/links/utilization",
            params={"metric": "mpi", "limit": 0}).json()["rows"]
        assert len(total) == len(mpi)
        pairs = list(zip(total, mpi))
        assert any(t["a2b"] != m["a2b"] for t, m in pairs)
        assert all(t["a2b"] >= m["a2b"] for t, m in pairs)

    def test_links_filter(self, service):
        state, client = service
        link_id = state.topology.links[0].id
        rows = client.get(
            "/api/links/utilization",
            params={"links": str(link_id), "limit": 0}).json()["rows"]
        assert rows and all(r["link"] == link_id for r in rows)

    def test_job_filter_stays_on_job_links(self, service):
        state, client = service
        job = next(j for j in state.pipeline.jobs() if j.job_id == 1)
        view = job_subgraph(state.topology, state.routing, job.node_guids)
        rows = client.get(
            "/api/links/utilization",
            params={"job": 1, "limit": 0}).json()["rows"]
        assert rows
        assert {r["link"] for r in rows} <= set(view.link_ids)

    @pytest.mark.parametrize("params,status", [
        ({"metric": "bogus"}, 400),
        ({"links": "1,x"}, 400),
        ({"links": "999999"}, 404),
        ({"from": 5, "to": 2}, 400),
        ({"limit": -1}, 422),
    ])
    def test_rejects(self, service, params, status):
        _, client = service
        resp = client.get("/api/links/utilization", params=params)
        assert resp.status_code == status

    def test_breakdown(self, service):
        state, client = service
        host = state.topology.hosts[0]
        link_id = state.topology.host_link[host.guid].id
        body = client.get(f"/api/links/{link_id}/breakdown").json()
        assert body["link"] == link_id
        assert len(body["intervals"]) == INTERVALS
        for row in body["intervals"]:
            for side in (row["a2b"], row["b2a"]):
                assert set(side) == {
                    "total", "mpi", "io", "unicast", "multicast", "jobs"}
            assert 0 <= row["utilization"]
        # alltoall traffic from this host carries its job id
        tagged = [r for r in body["intervals"] if r["a2b"]["jobs"]]
        assert tagged and "1" in tagged[0]["a2b"]["jobs"]

    def test_breakdown_unknown_link(self, service):
        _, client = service
        assert client.get("/api/links/999999/breakdown").status_code == 404


class TestRadarEndpoints:
    def test_device_radar(self, service):
        state, client = service
        guid = f"{state.topology.hosts[0].guid:016x}"
        body = client.get(f"/api/devices/{guid}/radarpie").json()
        assert body["guid"] == guid
        assert body["mode"] == "absolute"
        assert body["intervals"] == list(range(INTERVALS))
        assert len(body["axes"]) == 8
        assert body["axes"][0]["angle"] == pytest.approx(-math.pi / 2)
        assert all(0 <= a["value"] <= 1 for a in body["axes"])
        assert any(a["value"] > 0 for a in body["axes"])

    def test_relative_mode_partitions(self, service):
        # cast and class are two partitions of the same traffic, so each
        # pair of sent axes accounts for the whole sent volume
        state, client = service
        guid = f"{state.topology.hosts[0].guid:016x}"
        body = client.get(
            f"/api/devices/{guid}/radarpie", params={"mode": "relative"}).json()
        values = {a["axis"]: a["value"] for a in body["axes"]}
        assert values["unicast_sent"] + values["multicast_sent"] == pytest.approx(1.0)
        assert values["mpi_sent"] + values["io_sent"] == pytest.approx(1.0)
        assert values["unicast_recv"] + values["multicast_recv"] == pytest.approx(1.0)
        assert values["mpi_recv"] + values["io_recv"] == pytest.approx(1.0)

    def test_all_devices_paginated(self, service):
        state, client = service
        body = client.get("/api/devices/radarpie", params={"limit": 3}).json()
        total = len(state.topology.switches) + len(state.topology.hosts)
        assert body["total"] == total
        assert len(body["rows"]) == 3
        guids = [r["guid"] for r in body["rows"]]
        assert guids == sorted(guids)

    @pytest.mark.parametrize("path,params,status", [
        ("/api/devices/radarpie", {"mode": "sideways"}, 400),
        ("/api/devices/zz/radarpie", {}, 400),
        ("/api/devices/00000000deadbeef/radarpie", {}, 404),
    ])
    def test_rejects(self, service, path, params, status):
        _, client = service
        assert client.get(path, params=params).status_code == status


class TestJobsEndpoint:
    def test_listing(self, service):
        state, client = service
        rows = client.get("/api/jobs").json()
        assert [r["id"] for r in rows] == [1, 2]
        alltoall = rows[0]
        assert len(alltoall["nodes"]) == 4
        assert alltoall["hostnames"] == sorted(alltoall["hostnames"])
        assert alltoall["source"] == "scheduler"
        assert alltoall["first_interval"] == 0
        checkpoint = rows[1]
        assert checkpoint["first_interval"] == 1
        assert checkpoint["last_interval"] == 3  # end interval is exclusive

    def test_detail_and_missing(self, service):
        _, client = service
        assert client.get("/api/jobs/2").json()["id"] == 2
        assert client.get("/api/jobs/999").status_code == 404


class TestRulesCrud:
    def test_lifecycle(self, service):
        _, client = service
        before = client.get("/api/rules").json()
        assert [r["metric"] for r in before] == ["XmtDiscards"]

        created = client.post("/api/rules", json={
            "metric": "LinkUtilization", "comparator": "exceeds",
            "threshold": 0.5, "scope": "all", "period": 2,
        })
        assert created.status_code == 201
        rule_id = created.json()["id"]
        assert rule_id != before[0]["id"]
        assert created.json()["period"] == 2

        fetched = client.get(f"/api/rules/{rule_id}").json()
        assert fetched == created.json()

        updated = client.put(f"/api/rules/{rule_id}", json={
            "metric": "LinkUtilization", "comparator": "drops_below",
            "threshold": 0.1, "scope": "links:1,2",
        })
        assert updated.status_code == 200
        assert updated.json()["comparator"] == "drops_below"
        assert updated.json()["scope"] == "links:1,2"
        assert len(client.get("/api/rules").json()) == 2

        assert client.delete(f"/api/rules/{rule_id}").status_code == 204
        assert client.delete(f"/api/rules/{rule_id}").status_code == 404
        assert client.get(f"/api/rules/{rule_id}").status_code == 404
        assert client.get("/api/rules").json() == before

    @pytest.mark.parametrize("body,status", [
        ({"metric": "XmtDiscards", "comparator": "exceeds",
          "threshold": 1, "scope": "planet:9"}, 400),
        ({"metric": "Nonsense", "comparator": "exceeds",
          "threshold": 1}, 400),
        ({"metric": "XmtDiscards", "comparator": "exceeds",
          "threshold": -1}, 400),
        ({"metric": "XmtDiscards", "comparator": "exceeds",
          "threshold": 1, "period": 0}, 422),
        ({"metric": "XmtDiscards"}, 422),
    ])
    def test_rejects(self, service, body, status):
        _, client = service
        resp = client.post("/api/rules", json=body)
        assert resp.status_code == status

    def test_put_unknown_rule(self, service):
        _, client = service
        resp = client.put("/api/rules/12345", json={
            "metric": "XmtDiscards", "comparator": "exceeds", "threshold": 1})
        assert resp.status_code == 404


class TestEventsEndpoint:
    def test_fault_produces_events(self, service):
        _, client = service
        body = client.get("/api/events").json()
        rows = body["rows"]
        # fault latches at interval 2, rule fires every interval after
        assert len(rows) == INTERVALS - 2
        assert sorted(r["interval"] for r in rows) == [2, 3, 4, 5]
        fault_link = _switch_switch_link_id()
        for row in rows:
            assert row["kind"] == "link"
            assert row["subject"] == fault_link
            assert row["value"] == 25
            assert "XmtDiscards" in row["detail"]

    def test_filters(self, service):
        _, client = service
        rows = client.get("/api/events").json()["rows"]
        rule_id = rows[0]["rule"]
        subject = rows[0]["subject"]
        filtered = client.get(
            "/api/events", params={"rule": rule_id}).json()["rows"]
        assert len(filtered) == len(rows)
        assert client.get(
            "/api/events", params={"rule": rule_id + 99}).json()["rows"] == []
        by_subject = client.get(
            "/api/events", params={"subject": subject}).json()["rows"]
        assert {r["subject"] for r in by_subject} == {subject}
        windowed = client.get(
            "/api/events", params={"from": 3, "to": 3}).json()["rows"]
        assert [r["interval"] for r in windowed] == [3]


class TestReplayDumpLive:
    def test_replay_steps(self, service):
        _, client = service
        body = client.get("/api/replay", params={"step": 2}).json()
        assert body["step"] == 2
        assert [f["interval"] for f in body["frames"]] == [0, 2, 4]
        frame = body["frames"][0]
        assert frame["ts"] == 0
        assert frame["links"]
        for link in frame["links"]:
            assert set(link) == {
                "link", "a2b", "b2a", "utilization", "band", "color"}

    def test_replay_full_range(self, service):
        _, client = service
        body = client.get("/api/replay").json()
        assert len(body["frames"]) == INTERVALS

    def test_dump_matches_store(self, service):
        state, client = service
        resp = client.get("/api/dump")
        assert resp.headers["content-type"].startswith("application/x-ndjson")
        expected = "".join(
            line + "\n" for line in state.store.dump(0, INTERVALS - 1))
        assert resp.text == expected
        for line in resp.text.splitlines():
            json.loads(line)

    def test_live_sse(self, service):
        _, client = service
        resp = client.get("/api/live", params={"max_frames": 2})
        assert resp.headers["content-type"].startswith("text/event-stream")
        frames = [
            json.loads(line[len("data: "):])
            for line in resp.text.splitlines() if line.startswith("data: ")
        ]
        assert len(frames) == 2
        assert frames[0]["interval"] < frames[1]["interval"]
        assert {"interval", "ts", "links", "events"} <= set(frames[0])


class TestVizEndpoints:
    def test_fan_point_matches_oracle(self, service):
        _, client = service
        body = client.get("/api/viz/fan-point", params={
            "x1": 0, "y1": 0, "x2": 10, "y2": 4, "n": 4, "k": 3}).json()
        ex, ey = fan_point_exact((0, 0), (10, 4), 4, 3)
        assert body["x"] == pytest.approx(float(ex), abs=1e-12)
        assert body["y"] == pytest.approx(float(ey), abs=1e-12)
        assert body["t"] == 0.75

    def test_fan_bundle(self, service):
        _, client = service
        body = client.get("/api/viz/fan", params={
            "x1": 0, "y1": 0, "x2": 8, "y2": 0, "n": 4}).json()
        assert body["n"] == 4
        assert [p["k"] for p in body["points"]] == [1, 2, 3, 4]
        assert [p["t"] for p in body["points"]] == [0.25, 0.5, 0.75, 1.0]

    def test_fan_rejects_bad_k(self, service):
        _, client = service
        resp = client.get("/api/viz/fan-point", params={
            "x1": 0, "y1": 0, "x2": 1, "y2": 1, "n": 2, "k": 5})
        assert resp.status_code == 400
        # a bundle of one has no control points at all
        resp = client.get("/api/viz/fan-point", params={
            "x1": 0, "y1": 0, "x2": 1, "y2": 1, "n": 1, "k": 1})
        assert resp.status_code == 400

    def test_legend(self, service):
        _, client = service
        assert client.get("/api/viz/legend").json() == band_legend()


# ------------------------------------------------------------- udp ingest


def _small_pipeline(tmp_path):
    topology = generate_fat_tree(FatTreeSpec(
        edge_switches=2, root_switches=2, hosts_per_edge=2))
    from fabric_lens.routing import compute_routing
    store = Store(tmp_path / "data", interval_ms=1000)
    return Pipeline(
        topology, compute_routing(topology), HostMaps.from_topology(topology),
        store, RuleEngine(), 1000,
    ), topology


class TestUdpIngest:
    def test_datagrams_reach_pipeline(self, tmp_path):
        pipeline, topology = _small_pipeline(tmp_path)
        listener = UdpListener("127.0.0.1", 0, pipeline)
        listener.start()
        try:
            host, port = listener.address
            a, b = topology.hosts[0].guid, topology.hosts[1].guid
            record = MpiRecord(
                timestamp_ns=0, job_id=5, rank=0, peer_rank=1,
                src_guid=a, dst_guid=b, bytes_sent=1000, bytes_recv=0,
                interval_ms=1000,
            )
            with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
                sock.sendto(encode_record(record), (host, port))
                sock.sendto(b"not a telemetry frame", (host, port))
            deadline = time.monotonic() + 5.0
            while pipeline.stats.datagrams < 2:
                assert time.monotonic() < deadline, "datagrams never arrived"
                time.sleep(0.01)
            assert pipeline.stats.records == 1
            assert pipeline.stats.decode_errors == 1
        finally:
            listener.stop()
            pipeline.store.close()

    def test_port_already_bound(self, tmp_path):
        pipeline, _ = _small_pipeline(tmp_path)
        with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as holder:
            holder.bind(("127.0.0.1", 0))
            port = holder.getsockname()[1]
            with pytest.raises(BindFailure):
                UdpListener("127.0.0.1", port, pipeline)
        pipeline.store.close()


# -------------------------------------------------------------------- cli


class TestCli:
    def test_parser_basics(self):
        parser = cli.build_parser()
        args = parser.parse_args(
            ["simulate", "--scenario", "s.json", "--intervals", "5"])
        assert args.command == "simulate" and args.intervals == 5
        with pytest.raises(SystemExit):
            parser.parse_args([])
        with pytest.raises(SystemExit):
            parser.parse_args(["query"])  # needs a sub-subject

    def test_gen_topology_round_trips(self, tmp_path, capsys):
        out = tmp_path / "fabric.topo"
        rc = cli.main([
            "gen-topology", "--edge-switches", "3", "--root-switches", "2",
            "--hosts-per-edge", "4", "--links-per-pair", "2",
            "--capacity-gbps", "25", "-o", str(out),
        ])
        assert rc == 0
        topology = parse_topology(out.read_text())
        assert len(topology.switches) == 5
        assert len(topology.hosts) == 12
        assert len(topology.links) == 12 + 3 * 2 * 2
        assert topology.links[0].capacity_bps == 25_000_000_000
        assert "switches=5 hosts=12" in capsys.readouterr().err

    def test_gen_topology_stdout(self, capsys):
        rc = cli.main([
            "gen-topology", "--edge-switches", "2", "--root-switches", "1",
            "--hosts-per-edge", "1"])
        assert rc == 0
        captured = capsys.readouterr()
        assert len(parse_topology(captured.out).hosts) == 2

    def test_simulate_writes_store(self, tmp_path, capsys):
        scenario_path = tmp_path / "scenario.json"
        scenario_path.write_text(json.dumps(_scenario_dict()))
        data_dir = tmp_path / "out"
        rc = cli.main([
            "simulate", "--scenario", str(scenario_path),
            "--intervals", "4", "--data-dir", str(data_dir),
        ])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["intervals"] == 4
        assert summary["records"] > 0
        assert summary["data_dir"] == str(data_dir)
        store = Store(data_dir, interval_ms=1000)
        try:
            assert store.last_interval() == 3
        finally:
            store.close()

    def test_query_and_dump_against_service(self, service, tmp_path,
                                            capsys, monkeypatch):
        _, client = service

        def fake_get(url, params=None, timeout=None):
            return client.get(url, params=params)

        def fake_stream(method, url, params=None, timeout=None):
            return client.stream(method, url, params=params)

        monkeypatch.setattr(httpx, "get", fake_get)
        monkeypatch.setattr(httpx, "stream", fake_stream)

        rc = cli.main(["query", "links", "--from", "0", "--to", "1"])
        assert rc == 0
        body = json.loads(capsys.readouterr().out)
        assert body["rows"] and body["from"] == 0

        rc = cli.main(["query", "links", "--metric", "bogus"])
        captured = capsys.readouterr()
        assert rc == 1 and "error 400" in captured.err

        rc = cli.main(["query", "events"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["rows"]

        out_path = tmp_path / "dump.ndjson"
        rc = cli.main(["dump", "-o", str(out_path)])
        assert rc == 0
        lines = out_path.read_text().splitlines()
        assert lines and all(json.loads(l) for l in lines)

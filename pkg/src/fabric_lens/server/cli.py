"""Command line entry point.

``serve`` and ``simulate`` run in-process; ``query`` and ``dump`` are
thin HTTP clients so they work against any running instance.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..correlator import HostMaps
from ..notify import RuleEngine
from ..simulator import FatTreeSpec, frontera_scale_spec, generate_fat_tree, osc_scale_spec
from ..store import Store
from ..topology import serialize_topology
from .config import ServerConfig, load_config
from .pipeline import Pipeline, run_simulation
from .scenario import build_simulator, load_scenario

DEFAULT_SERVER = "http://127.0.0.1:8177"


def _add_serve(sub) -> None:
    p = sub.add_parser("serve", help="run the collection and query service")
    p.add_argument("--config", required=True, help="JSON config file")


def _add_simulate(sub) -> None:
    p = sub.add_parser("simulate", help="replay a scenario into a data directory")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--intervals", type=int, default=None,
                   help="how many intervals to run (default 60)")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument("--data-dir", default=None, help="where to write the store")
    p.add_argument("--pace-ms", type=int, default=0,
                   help="wall milliseconds per interval, 0 for flat out")


def _add_gen_topology(sub) -> None:
    p = sub.add_parser("gen-topology", help="emit a synthetic fat tree")
    p.add_argument("--preset", choices=("osc", "frontera"), default=None)
    p.add_argument("--edge-switches", type=int, default=4)
    p.add_argument("--root-switches", type=int, default=2)
    p.add_argument("--hosts-per-edge", type=int, default=8)
    p.add_argument("--storage-hosts-per-edge", type=int, default=0)
    p.add_argument("--links-per-pair", type=int, default=1)
    p.add_argument("--capacity-gbps", type=float, default=100.0)
    p.add_argument("-o", "--output", default=None, help="file, default stdout")


def _add_query(sub) -> None:
    p = sub.add_parser("query", help="read from a running service")
    p.add_argument("--server", default=DEFAULT_SERVER)
    what = p.add_subparsers(dest="what", required=True)

    links = what.add_parser("links", help="per link utilization rows")
    links.add_argument("--from", dest="start", type=int, default=None)
    links.add_argument("--to", dest="end", type=int, default=None)
    links.add_argument("--metric", default="total")
    links.add_argument("--job", type=int, default=None)

    device = what.add_parser("device", help="one device's class profile")
    device.add_argument("guid", help="16 hex digits")
    device.add_argument("--mode", default="absolute",
                        choices=("absolute", "relative"))
    device.add_argument("--from", dest="start", type=int, default=None)
    device.add_argument("--to", dest="end", type=int, default=None)

    events = what.add_parser("events", help="rule engine events")
    events.add_argument("--from", dest="start", type=int, default=None)
    events.add_argument("--to", dest="end", type=int, default=None)
    events.add_argument("--rule", type=int, default=None)


def _add_dump(sub) -> None:
    p = sub.add_parser("dump", help="canonical interval rows as NDJSON")
    p.add_argument("--server", default=DEFAULT_SERVER)
    p.add_argument("--from", dest="start", type=int, default=None)
    p.add_argument("--to", dest="end", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="file, default stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fabric-lens",
        description="cross layer fabric monitoring: collect, attribute, serve",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_serve(sub)
    _add_simulate(sub)
    _add_gen_topology(sub)
    _add_query(sub)
    _add_dump(sub)
    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .ingest import UdpListener
    from .state import make_state

    config = load_config(args.config)
    state = make_state(config)
    app = create_app(state)
    listener = None
    if config.mode == "live":
        listener = UdpListener(
            config.ingest_host, config.ingest_port, state.pipeline)
        listener.start()
        print(f"ingest listening on udp://{listener.address[0]}:{listener.address[1]}",
              file=sys.stderr)
    else:
        state.start_simulation()
    try:
        uvicorn.run(app, host=config.http_host, port=config.http_port,
                    log_level="warning")
    finally:
        if listener is not None:
            listener.stop()
        state.close()
    return 0


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    sim = build_simulator(scenario)
    config = ServerConfig(mode="simulate", scenario_file=args.scenario,
                          data_dir=args.data_dir or "./fabric-lens-data")
    store = Store(
        config.resolved_data_dir(),
        interval_ms=scenario.interval_ms,
        known_link_ids={l.id for l in sim.topology.links},
        known_guids=set(sim.topology.device_by_guid),
    )
    engine = RuleEngine(next_event_id=store.max_event_id() + 1)
    pipeline = Pipeline(
        sim.topology, sim.routing, HostMaps.from_topology(sim.topology),
        store, engine, scenario.interval_ms,
        error_counters_fn=sim.error_counters_at,
    )
    intervals = args.intervals if args.intervals is not None else 60
    run_simulation(pipeline, sim, intervals, pace_s=args.pace_ms / 1000.0)
    summary = {
        "intervals": pipeline.stats.committed_intervals,
        "records": pipeline.stats.records,
        "events": pipeline.stats.events_emitted,
        "storage_bytes": store.storage_bytes(),
        "data_dir": str(config.resolved_data_dir()),
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_gen_topology(args) -> int:
    if args.preset == "osc":
        spec = osc_scale_spec()
    elif args.preset == "frontera":
        spec = frontera_scale_spec()
    else:
        spec = FatTreeSpec(
            edge_switches=args.edge_switches,
            root_switches=args.root_switches,
            hosts_per_edge=args.hosts_per_edge,
            storage_hosts_per_edge=args.storage_hosts_per_edge,
            links_per_edge_root_pair=args.links_per_pair,
            link_capacity=round(args.capacity_gbps * 1_000_000_000),
        )
    topology = generate_fat_tree(spec)
    text = serialize_topology(topology)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(
        f"switches={len(topology.switches)} hosts={len(topology.hosts)} "
        f"links={len(topology.links)}",
        file=sys.stderr,
    )
    return 0


def _range_params(args) -> dict:
    params = {}
    if args.start is not None:
        params["from"] = args.start
    if args.end is not None:
        params["to"] = args.end
    return params


def _cmd_query(args) -> int:
    import httpx

    if args.what == "links":
        params = _range_params(args)
        params["metric"] = args.metric
        if args.job is not None:
            params["job"] = args.job
        url = f"{args.server}/api/links/utilization"
    elif args.what == "device":
        params = _range_params(args)
        params["mode"] = args.mode
        url = f"{args.server}/api/devices/{args.guid}/radarpie"
    else:
        params = _range_params(args)
        if args.rule is not None:
            params["rule"] = args.rule
        url = f"{args.server}/api/events"
    resp = httpx.get(url, params=params, timeout=30.0)
    if resp.status_code != 200:
        print(f"error {resp.status_code}: {resp.text}", file=sys.stderr)
        return 1
    print(json.dumps(resp.json(), indent=2, sort_keys=True))
    return 0


def _cmd_dump(args) -> int:
    import httpx

    params = _range_params(args)
    url = f"{args.server}/api/dump"
    out = open(args.output, "w") if args.output else sys.stdout
    try:
        with httpx.stream("GET", url, params=params, timeout=60.0) as resp:
            if resp.status_code != 200:
                resp.read()
                print(f"error {resp.status_code}: {resp.text}", file=sys.stderr)
                return 1
            for chunk in resp.iter_text():
                out.write(chunk)
    finally:
        if args.output:
            out.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "simulate": _cmd_simulate,
        "gen-topology": _cmd_gen_topology,
        "query": _cmd_query,
        "dump": _cmd_dump,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

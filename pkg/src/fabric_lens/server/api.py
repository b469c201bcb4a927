"""HTTP surface. Read paths hit the store; writes go through the rule
engine. The pipeline itself is fed by UDP or the simulation runner, not
by HTTP."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel, Field

from ..exceptions import (
    FabricLensError,
    UnknownGuid,
    UnknownJob,
    UnknownLink,
)
from ..notify import NotificationRule, parse_scope
from ..routing import job_subgraph
from ..store import JobRecord
from ..topology import cluster_compute_view
from ..vizmodel import fan_control_point
from . import payloads
from .state import AppState

_NOT_FOUND = (UnknownLink, UnknownJob, UnknownGuid)


class RuleBody(BaseModel):
    metric: str
    comparator: str
    threshold: float
    scope: str = "all"
    period: int = Field(default=1, ge=1)


def _paginate(rows: list, limit: int, offset: int) -> dict:
    total = len(rows)
    window = rows[offset:] if limit == 0 else rows[offset:offset + limit]
    return {"total": total, "limit": limit, "offset": offset, "rows": window}


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="fabric-lens", version="0.1.0")
    app.state.fabric = state
    topology = state.topology
    interval_s = state.pipeline.interval_ms / 1000.0

    @app.exception_handler(FabricLensError)
    async def domain_error(_req: Request, exc: FabricLensError):
        status = 404 if isinstance(exc, _NOT_FOUND) else 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    def _window(from_: int | None, to: int | None) -> tuple[int, int]:
        last = state.store.last_interval()
        if to is None:
            to = last if last is not None else 0
        if from_ is None:
            from_ = 0
        if to < from_:
            raise HTTPException(400, f"empty range [{from_}, {to}]")
        return from_, to

    def _guid(text: str) -> int:
        try:
            guid = int(text, 16)
        except ValueError:
            raise HTTPException(400, f"bad guid {text!r}") from None
        if guid not in topology.device_by_guid:
            raise HTTPException(404, f"unknown device {text}")
        return guid

    def _merged_jobs() -> list[JobRecord]:
        by_id = {j.job_id: j for j in state.store.jobs()}
        for j in state.pipeline.jobs():
            old = by_id.get(j.job_id)
            if old is None:
                by_id[j.job_id] = j
            else:
                by_id[j.job_id] = JobRecord(
                    j.job_id,
                    tuple(sorted(set(old.node_guids) | set(j.node_guids))),
                    min(old.first_interval, j.first_interval),
                    max(old.last_interval, j.last_interval),
                    "scheduler" if "scheduler" in (old.source, j.source)
                    else j.source,
                )
        return [by_id[k] for k in sorted(by_id)]

    # -- health and stats ------------------------------------------------

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "mode": state.config.mode,
            "interval_ms": state.pipeline.interval_ms,
            "uptime_s": round(state.uptime_s(), 3),
        }

    @app.get("/api/stats")
    def stats():
        store = state.store
        return {
            "pipeline": state.pipeline.stats.to_dict(),
            "store": {
                "storage_bytes": store.storage_bytes(),
                "committed_intervals": len(store.committed_intervals()),
                "last_interval": store.last_interval(),
            },
            "fabric": {
                "switches": len(topology.switches),
                "hosts": len(topology.hosts),
                "links": len(topology.links),
            },
            "watermark": state.pipeline.watermark(),
        }

    # -- topology ----------------------------------------------------------

    @app.get("/api/topology")
    def get_topology(
        job: int | None = None, clustered: bool = False,
    ):
        view = None
        if job is not None:
            record = next(
                (j for j in _merged_jobs() if j.job_id == job), None)
            if record is None:
                raise HTTPException(404, f"unknown job {job}")
            view = job_subgraph(topology, state.routing, record.node_guids)
        elif clustered:
            view = cluster_compute_view(topology)
        return payloads.topology_payload(topology, view)

    # -- link series -------------------------------------------------------

    @app.get("/api/links/utilization")
    def links_utilization(
        metric: str = "total",
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
        links: str | None = None,
        job: int | None = None,
        limit: int = Query(1000, ge=0),
        offset: int = Query(0, ge=0),
    ):
        start, end = _window(from_, to)
        link_ids = None
        if links:
            try:
                link_ids = [int(x) for x in links.split(",")]
            except ValueError:
                raise HTTPException(400, f"bad links filter {links!r}") from None
        if metric not in payloads.METRIC_FIELDS:
            raise HTTPException(400, f"unknown metric {metric!r}")
        series = state.store.query_links(start, end, link_ids, job)
        rows = payloads.utilization_rows(topology, series, metric, interval_s)
        page = _paginate(rows, limit, offset)
        page.update({"metric": metric, "from": start, "to": end,
                     "gaps": series.gaps})
        return page

    @app.get("/api/links/{link_id}/breakdown")
    def link_breakdown(
        link_id: int,
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
    ):
        start, end = _window(from_, to)
        if link_id not in topology.link_by_id:
            raise HTTPException(404, f"unknown link {link_id}")
        series = state.store.query_links(start, end, [link_id])
        body = payloads.breakdown_payload(topology, series, interval_s)
        body.update({"link": link_id, "from": start, "to": end})
        return body

    # -- device radar ------------------------------------------------------

    def _check_mode(mode: str) -> str:
        if mode not in ("absolute", "relative"):
            raise HTTPException(400, f"unknown radar mode {mode!r}")
        return mode

    @app.get("/api/devices/radarpie")
    def radar_all(
        mode: str = "absolute",
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
        limit: int = Query(1000, ge=0),
        offset: int = Query(0, ge=0),
    ):
        start, end = _window(from_, to)
        rows = payloads.all_devices_radar(
            topology, state.store, start, end, _check_mode(mode), interval_s)
        page = _paginate(rows, limit, offset)
        page.update({"mode": mode, "from": start, "to": end})
        return page

    @app.get("/api/devices/{guid}/radarpie")
    def radar_device(
        guid: str,
        mode: str = "absolute",
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
    ):
        start, end = _window(from_, to)
        g = _guid(guid)
        rows = state.store.query_device(start, end, g)
        return payloads.radar_payload(
            topology, g, rows, _check_mode(mode), interval_s)

    # -- jobs ----------------------------------------------------------------

    @app.get("/api/jobs")
    def jobs():
        return [payloads.job_payload(topology, j) for j in _merged_jobs()]

    @app.get("/api/jobs/{job_id}")
    def job_detail(job_id: int):
        record = next((j for j in _merged_jobs() if j.job_id == job_id), None)
        if record is None:
            raise HTTPException(404, f"unknown job {job_id}")
        return payloads.job_payload(topology, record)

    # -- rules and events --------------------------------------------------

    @app.get("/api/rules")
    def rules():
        return [payloads.rule_payload(r) for r in state.engine.rules()]

    @app.post("/api/rules", status_code=201)
    def create_rule(body: RuleBody):
        rule = NotificationRule(
            metric=body.metric,
            comparator=body.comparator,
            threshold=body.threshold,
            scope=parse_scope(body.scope),
            period=body.period,
        )
        rule_id = state.engine.upsert_rule(rule)
        return payloads.rule_payload(state.engine.get_rule(rule_id))

    @app.get("/api/rules/{rule_id}")
    def get_rule(rule_id: int):
        rule = state.engine.get_rule(rule_id)
        if rule is None:
            raise HTTPException(404, f"unknown rule {rule_id}")
        return payloads.rule_payload(rule)

    @app.put("/api/rules/{rule_id}")
    def update_rule(rule_id: int, body: RuleBody):
        if state.engine.get_rule(rule_id) is None:
            raise HTTPException(404, f"unknown rule {rule_id}")
        rule = NotificationRule(
            metric=body.metric,
            comparator=body.comparator,
            threshold=body.threshold,
            scope=parse_scope(body.scope),
            period=body.period,
            rule_id=rule_id,
        )
        state.engine.upsert_rule(rule)
        return payloads.rule_payload(state.engine.get_rule(rule_id))

    @app.delete("/api/rules/{rule_id}", status_code=204)
    def delete_rule(rule_id: int):
        if not state.engine.delete_rule(rule_id):
            raise HTTPException(404, f"unknown rule {rule_id}")
        return Response(status_code=204)

    @app.get("/api/events")
    def events(
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
        rule: int | None = None,
        subject: str | None = None,
        job: int | None = None,
        limit: int = Query(1000, ge=0),
        offset: int = Query(0, ge=0),
    ):
        start, end = _window(from_, to)
        rows = state.store.query_events(start, end, rule, subject, job)
        page = _paginate(rows, limit, offset)
        page.update({"from": start, "to": end})
        return page

    # -- replay, dump, live ------------------------------------------------

    @app.get("/api/replay")
    def replay(
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
        step: int = Query(1, ge=1),
    ):
        start, end = _window(from_, to)
        frames = payloads.replay_frames(
            topology, state.store, start, end, step,
            state.pipeline.interval_ms)
        return {"from": start, "to": end, "step": step, "frames": frames}

    @app.get("/api/dump")
    def dump(
        from_: int | None = Query(None, alias="from"),
        to: int | None = None,
    ):
        start, end = _window(from_, to)

        def lines():
            for line in state.store.dump(start, end):
                yield line + "\n"

        return StreamingResponse(lines(), media_type="application/x-ndjson")

    @app.get("/api/live")
    def live(max_frames: int = Query(0, ge=0)):
        def stream():
            last = -1
            sent = 0
            while True:
                frames = state.pipeline.wait_frames(last, timeout=1.0)
                if not frames:
                    yield ": keepalive\n\n"
                    continue
                for frame in frames:
                    last = max(last, frame["interval"])
                    yield f"data: {json.dumps(frame, separators=(',', ':'))}\n\n"
                    sent += 1
                    if max_frames and sent >= max_frames:
                        return

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- viz helpers ---------------------------------------------------------

    @app.get("/api/viz/fan-point")
    def fan_point(
        x1: float, y1: float, x2: float, y2: float,
        n: int = Query(..., ge=1), k: int = Query(..., ge=1),
    ):
        try:
            x, y = fan_control_point((x1, y1), (x2, y2), n, k)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        return {"x": x, "y": y, "n": n, "k": k, "t": k / n}

    @app.get("/api/viz/fan")
    def fan(x1: float, y1: float, x2: float, y2: float, n: int = Query(..., ge=1)):
        return payloads.fan_payload(x1, y1, x2, y2, n)

    @app.get("/api/viz/legend")
    def legend():
        return payloads.legend_payload()

    # -- static UI -----------------------------------------------------------

    ui_dir = state.config.ui_dir
    if ui_dir is None:
        candidate = Path.cwd() / "frontend" / "dist"
        if candidate.is_dir():
            ui_dir = str(candidate)
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

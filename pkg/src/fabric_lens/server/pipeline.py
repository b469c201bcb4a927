"""Ingest pipeline: datagrams in, committed interval rows out.

Records are bucketed by ``timestamp_ns // interval_ns``. The watermark
is the newest interval seen so far; records older than the grace window
behind it are dropped and counted. An interval commits once the
watermark has moved far enough past it that nothing in-grace can still
arrive, so commits happen in order exactly once.

Counter samples with unknown endpoints or regressed values are filtered
out before attribution and surface only in the stats, never as
exceptions: one bad agent must not stall the fabric view.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..correlator import (
    HostMaps,
    attribute,
    device_class_totals,
)
from ..exceptions import WireError
from ..notify import Event, IntervalSnapshot, LinkIntervalStats, RuleEngine
from ..routing import RoutingTable
from ..simulator import FabricSimulator, TelemetryBatch
from ..store import GRACE_INTERVALS, JobRecord, Store
from ..topology import LinkEnd, FabricTopology
from ..wire import (
    CounterSample,
    IoRecord,
    MpiRecord,
    decode_record,
    encode_record,
)

_COUNTER_FIELDS = (
    "xmit_bytes", "rcv_bytes", "xmit_pkts", "rcv_pkts",
    "unicast_xmit_bytes", "unicast_rcv_bytes",
    "multicast_xmit_bytes", "multicast_rcv_bytes",
)


@dataclass
class _Bucket:
    mpi: list[MpiRecord] = field(default_factory=list)
    io: list[IoRecord] = field(default_factory=list)
    samples: list[CounterSample] = field(default_factory=list)


@dataclass
class PipelineStats:
    datagrams: int = 0
    records: int = 0
    decode_errors: int = 0
    late_drops: int = 0
    counter_regressions: int = 0
    unknown_endpoint_drops: int = 0
    quarantined_records: int = 0
    committed_intervals: int = 0
    events_emitted: int = 0
    webhook_failures: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Pipeline:
    """Single-writer commit path shared by the UDP listener and the
    simulation runner. Thread-safe; readers go through the store."""

    def __init__(
        self,
        topology: FabricTopology,
        routing: RoutingTable,
        maps: HostMaps,
        store: Store,
        engine: RuleEngine,
        interval_ms: int,
        error_counters_fn: Callable[[int], dict[tuple[str, int], int]] | None = None,
        webhook_url: str | None = None,
        frame_ring: int = 256,
    ):
        self.topology = topology
        self.routing = routing
        self.maps = maps
        self.store = store
        self.engine = engine
        self.interval_ms = interval_ms
        self.interval_ns = interval_ms * 1_000_000
        self.error_counters_fn = error_counters_fn
        self.webhook_url = webhook_url
        self.stats = PipelineStats()
        self._lock = threading.RLock()
        self._buckets: dict[int, _Bucket] = {}
        # Resuming over an existing store: everything at or before its
        # tail is settled, and the counter baselines that produced it are
        # gone, so re-attributing those intervals would corrupt them.
        # Start the watermark far enough ahead that they read as late.
        last = store.last_interval()
        self._watermark: int | None = (
            None if last is None else last + GRACE_INTERVALS + 1)
        self._prev_counters: dict[tuple[int, int], CounterSample] = {}
        self._jobs: dict[int, JobRecord] = {}
        self._frames: deque[dict] = deque(maxlen=frame_ring)
        self._frame_cond = threading.Condition(self._lock)

    # -- feeding -----------------------------------------------------------

    def feed_datagram(self, data: bytes) -> None:
        with self._lock:
            self.stats.datagrams += 1
            try:
                record = decode_record(data)
            except WireError:
                self.stats.decode_errors += 1
                return
            self.store.append_raw(data)
            self._feed(record)

    def feed_record(self, record: MpiRecord | IoRecord | CounterSample) -> None:
        with self._lock:
            self._feed(record)

    def _feed(self, record) -> None:
        self.stats.records += 1
        interval = record.timestamp_ns // self.interval_ns
        if self._watermark is not None and interval < self._watermark - GRACE_INTERVALS:
            self.stats.late_drops += 1
            return
        bucket = self._buckets.setdefault(interval, _Bucket())
        if isinstance(record, MpiRecord):
            bucket.mpi.append(record)
            self._note_job(record.job_id, (record.src_guid, record.dst_guid), interval)
        elif isinstance(record, IoRecord):
            bucket.io.append(record)
            self._note_job(record.job_id, (record.node_guid,), interval)
        else:
            bucket.samples.append(record)
        if self._watermark is None or interval > self._watermark:
            self._watermark = interval
            self._commit_ready()

    def ensure_interval(self, interval: int) -> None:
        """Make an empty interval commit instead of reading as a gap."""
        with self._lock:
            if self._watermark is not None and interval < self._watermark - GRACE_INTERVALS:
                return
            self._buckets.setdefault(interval, _Bucket())
            if self._watermark is None or interval > self._watermark:
                self._watermark = interval
                self._commit_ready()

    def register_job(
        self, job_id: int, node_guids: Iterable[int], interval: int,
        source: str = "scheduler",
    ) -> None:
        with self._lock:
            self._note_job(job_id, node_guids, interval, source)

    def _note_job(
        self, job_id: int, guids: Iterable[int], interval: int,
        source: str = "agent",
    ) -> None:
        guids = {g for g in guids if g in self.topology.host_by_guid}
        old = self._jobs.get(job_id)
        if old is None:
            self._jobs[job_id] = JobRecord(
                job_id, tuple(sorted(guids)), interval, interval, source)
            return
        # scheduler registrations are authoritative over sniffed membership
        src = "scheduler" if "scheduler" in (old.source, source) else old.source
        self._jobs[job_id] = JobRecord(
            job_id,
            tuple(sorted(set(old.node_guids) | guids)),
            min(old.first_interval, interval),
            max(old.last_interval, interval),
            src,
        )

    # -- committing ----------------------------------------------------------

    def _commit_ready(self) -> None:
        if self._watermark is None:
            return
        cutoff = self._watermark - GRACE_INTERVALS - 1
        for interval in sorted(i for i in self._buckets if i <= cutoff):
            self._commit(interval)

    def flush(self, through: int | None = None) -> None:
        """Commit everything pending (up to ``through`` if given).

        The simulation runner calls this once the source is exhausted;
        nothing further can arrive so the grace window is moot.
        """
        with self._lock:
            for interval in sorted(self._buckets):
                if through is not None and interval > through:
                    break
                self._commit(interval)

    def _commit(self, interval: int) -> None:
        bucket = self._buckets.pop(interval, None)
        if bucket is None:
            return
        samples = self._filter_samples(bucket.samples)
        batch = TelemetryBatch(interval, bucket.mpi, bucket.io, samples)
        result = attribute(
            self.topology, self.routing, batch, self.maps, self._prev_counters)
        self.stats.quarantined_records += len(result.quarantined)
        for s in samples:
            self._prev_counters[(s.device_guid, s.port)] = s
        devices = device_class_totals(self.topology, result.breakdowns)
        snapshot = self._snapshot(interval, result.breakdowns)
        events = self.engine.evaluate_interval(snapshot)
        self.stats.events_emitted += len(events)
        jobs = [self._jobs[j] for j in sorted(self._touched_jobs(result.breakdowns))]
        self.store.append(
            interval,
            breakdowns=result.breakdowns,
            device_totals=devices,
            events=[e.to_dict() for e in events],
            jobs=jobs,
        )
        self.stats.committed_intervals += 1
        self._frames.append(self._frame(interval, result.breakdowns, events))
        self._frame_cond.notify_all()
        if events and self.webhook_url:
            self._post_webhook(events)

    def _filter_samples(self, samples: list[CounterSample]) -> list[CounterSample]:
        ok: list[CounterSample] = []
        for s in samples:
            end = LinkEnd(s.device_guid, s.port)
            if s.device_guid not in self.topology.device_by_guid \
                    or end not in self.topology.port_map:
                self.stats.unknown_endpoint_drops += 1
                continue
            prev = self._prev_counters.get((s.device_guid, s.port))
            if prev is not None and any(
                getattr(s, f) < getattr(prev, f) for f in _COUNTER_FIELDS
            ):
                self.stats.counter_regressions += 1
                continue
            ok.append(s)
        return ok

    def _touched_jobs(self, breakdowns) -> set[int]:
        touched: set[int] = set()
        for bd in breakdowns:
            touched.update(bd.a2b.per_job)
            touched.update(bd.b2a.per_job)
        return {j for j in touched if j in self._jobs}

    def _snapshot(self, interval: int, breakdowns) -> IntervalSnapshot:
        interval_s = self.interval_ms / 1000.0
        links: dict[int, LinkIntervalStats] = {}
        job_links: dict[int, set[int]] = {}
        for bd in breakdowns:
            link = self.topology.link_by_id[bd.link_id]
            jobs = sorted(set(bd.a2b.per_job) | set(bd.b2a.per_job))
            links[bd.link_id] = LinkIntervalStats(
                bytes_a2b=bd.a2b.total_bytes or bd.a2b.attributed(),
                bytes_b2a=bd.b2a.total_bytes or bd.b2a.attributed(),
                mpi_a2b=bd.a2b.mpi_bytes,
                mpi_b2a=bd.b2a.mpi_bytes,
                io_a2b=bd.a2b.io_bytes,
                io_b2a=bd.b2a.io_bytes,
                capacity_bps=link.capacity_bps,
                job_ids=tuple(jobs),
            )
            for job_id in jobs:
                job_links.setdefault(job_id, set()).add(bd.link_id)
        error_counters = (
            self.error_counters_fn(interval) if self.error_counters_fn else {}
        )
        return IntervalSnapshot(
            interval=interval,
            interval_seconds=interval_s,
            timestamp_ns=interval * self.interval_ns,
            links=links,
            error_counters=dict(error_counters),
            job_links=job_links,
        )

    def _frame(self, interval: int, breakdowns, events: list[Event]) -> dict:
        from .payloads import live_frame
        return live_frame(
            self.topology, interval, self.interval_ms, breakdowns,
            [e.to_dict() for e in events],
        )

    def _post_webhook(self, events: list[Event]) -> None:
        url = self.webhook_url

        def post():
            try:
                import httpx
                httpx.post(url, json=[e.to_dict() for e in events], timeout=5.0)
            except Exception:
                self.stats.webhook_failures += 1

        threading.Thread(target=post, daemon=True).start()

    # -- reading ---------------------------------------------------------

    def wait_frames(self, after_interval: int, timeout: float = 1.0) -> list[dict]:
        """Frames committed after ``after_interval``, blocking up to
        ``timeout`` seconds when none are ready yet."""
        deadline = threading.TIMEOUT_MAX if timeout is None else timeout
        with self._frame_cond:
            frames = [f for f in self._frames if f["interval"] > after_interval]
            if frames:
                return frames
            self._frame_cond.wait(deadline)
            return [f for f in self._frames if f["interval"] > after_interval]

    def watermark(self) -> int | None:
        with self._lock:
            return self._watermark

    def jobs(self) -> list[JobRecord]:
        with self._lock:
            return [self._jobs[k] for k in sorted(self._jobs)]


def run_simulation(
    pipeline: Pipeline,
    sim: FabricSimulator,
    intervals: int,
    pace_s: float = 0.0,
) -> None:
    """Drive the pipeline from a simulator through the byte codec.

    Every record is encoded and fed back as a datagram so the whole
    wire path is exercised, not just the in-memory objects.
    """
    import time

    for job in sim.jobs.values():
        pipeline.register_job(job.job_id, job.node_guids, job.start)
    for _ in range(intervals):
        batch = sim.advance(1)[0]
        for record in batch.mpi_records:
            pipeline.feed_datagram(encode_record(record))
        for record in batch.io_records:
            pipeline.feed_datagram(encode_record(record))
        for record in batch.counter_samples:
            pipeline.feed_datagram(encode_record(record))
        pipeline.ensure_interval(batch.interval)
        if pace_s > 0:
            time.sleep(pace_s)
    pipeline.flush()

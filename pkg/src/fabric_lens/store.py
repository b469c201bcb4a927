"""Embedded interval store.

Append only, segmented by interval range, with the whole index held in
memory and rebuilt by scanning segments at startup. One append call
persists one interval's rows as a single NDJSON line, fsynced before
returning, so a crash can only lose work that append never acknowledged.
A torn trailing line from a mid-write crash is discarded during rebuild.

Late appends within a two interval grace window merge into the existing
interval; anything older is rejected. Identical re-appends are idempotent
because rows replace by key (link id, device guid, event id).
"""

from __future__ import annotations

import errno
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .correlator import DeviceClassTotals, DirectionStats, JobBytes, LinkBreakdown
from .exceptions import StorageFull, StoreError, TooLate, UnknownGuid, UnknownJob, UnknownLink

GRACE_INTERVALS = 2
DEFAULT_INTERVAL_MS = 5000
MIN_INTERVAL_MS = 100
FORMAT_VERSION = 1


@dataclass(frozen=True)
class JobRecord:
    job_id: int
    node_guids: tuple[int, ...]
    first_interval: int
    last_interval: int
    source: str = "agent"  # agent | simulator


@dataclass
class _IntervalData:
    links: dict[int, LinkBreakdown] = field(default_factory=dict)
    devices: dict[int, DeviceClassTotals] = field(default_factory=dict)
    events: dict[int, dict] = field(default_factory=dict)


@dataclass(frozen=True)
class LinkSeries:
    rows: list[LinkBreakdown]   # ordered by (interval, link id)
    gaps: list[int]             # intervals in range never committed


def _stats_row(s: DirectionStats) -> list:
    return [s.total_bytes, s.mpi_bytes, s.io_bytes, s.unicast_bytes, s.multicast_bytes]


def _jobs_row(s: DirectionStats) -> dict:
    return {str(j): [b.mpi, b.io] for j, b in sorted(s.per_job.items())}


def _stats_from(row: list, jobs: dict) -> DirectionStats:
    per_job = {int(j): JobBytes(m, i) for j, (m, i) in jobs.items()}
    return DirectionStats(row[0], row[1], row[2], row[3], row[4], per_job)


def _link_row(bd: LinkBreakdown) -> list:
    return [bd.link_id, _stats_row(bd.a2b), _stats_row(bd.b2a),
            _jobs_row(bd.a2b), _jobs_row(bd.b2a)]


def _link_from(row: list, interval: int) -> LinkBreakdown:
    return LinkBreakdown(
        row[0], interval,
        _stats_from(row[1], row[3]),
        _stats_from(row[2], row[4]),
    )


_DEVICE_FIELDS = tuple(DeviceClassTotals.__dataclass_fields__)


def _device_row(guid: int, t: DeviceClassTotals) -> list:
    return [guid] + [getattr(t, f) for f in _DEVICE_FIELDS]


def _device_from(row: list) -> tuple[int, DeviceClassTotals]:
    return row[0], DeviceClassTotals(*row[1:])


class Store:
    def __init__(
        self,
        data_dir: str | os.PathLike,
        interval_ms: int = DEFAULT_INTERVAL_MS,
        segment_intervals: int = 1000,
        max_segments: int | None = None,
        debug_raw: bool = False,
        known_link_ids: set[int] | None = None,
        known_guids: set[int] | None = None,
    ):
        if interval_ms < MIN_INTERVAL_MS:
            raise StoreError(
                f"interval_ms {interval_ms} below minimum {MIN_INTERVAL_MS}"
            )
        if segment_intervals < 1:
            raise StoreError("segment_intervals must be positive")
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.interval_ms = interval_ms
        self.segment_intervals = segment_intervals
        self.max_segments = max_segments
        self.debug_raw = debug_raw
        self.known_link_ids = known_link_ids
        self.known_guids = known_guids
        self._lock = threading.RLock()
        self._data: dict[int, _IntervalData] = {}
        self._jobs: dict[int, JobRecord] = {}
        self._last: int | None = None
        self._max_event_id = 0
        self._load_meta()
        self._rebuild()

    # -- disk layout -----------------------------------------------------

    def _meta_path(self) -> Path:
        return self.data_dir / "meta.json"

    def _segment_path(self, segment: int) -> Path:
        return self.data_dir / f"seg-{segment:08d}.ndjson"

    def _segments_on_disk(self) -> list[Path]:
        return sorted(self.data_dir.glob("seg-*.ndjson"))

    def _load_meta(self) -> None:
        path = self._meta_path()
        if path.exists():
            meta = json.loads(path.read_text())
            if meta.get("format") != FORMAT_VERSION:
                raise StoreError(f"unsupported store format {meta.get('format')}")
            if meta.get("interval_ms") != self.interval_ms:
                raise StoreError(
                    f"store was created with interval_ms={meta.get('interval_ms')}, "
                    f"opened with {self.interval_ms}"
                )
            self.segment_intervals = meta.get("segment_intervals", self.segment_intervals)
        else:
            payload = {
                "format": FORMAT_VERSION,
                "interval_ms": self.interval_ms,
                "segment_intervals": self.segment_intervals,
            }
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(payload, sort_keys=True))
            os.replace(tmp, path)

    def _rebuild(self) -> None:
        for seg in self._segments_on_disk():
            text = seg.read_bytes()
            for line in text.split(b"\n"):
                if not line.strip():
                    continue
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError:
                    # torn tail from a crash mid-write; the interval was
                    # never acknowledged, so dropping it is correct
                    continue
                self._merge(payload)
        if self._data:
            self._last = max(self._data)

    # -- appends ---------------------------------------------------------

    def append(
        self,
        interval: int,
        breakdowns: list[LinkBreakdown] = (),
        device_totals: dict[int, DeviceClassTotals] | None = None,
        events: list[dict] = (),
        jobs: list[JobRecord] = (),
    ) -> None:
        if interval < 0:
            raise StoreError("interval must be non-negative")
        with self._lock:
            if self._last is not None and interval < self._last - GRACE_INTERVALS:
                raise TooLate(interval, self._last, GRACE_INTERVALS)
            payload: dict = {"i": interval}
            if breakdowns:
                payload["links"] = [_link_row(b) for b in breakdowns]
            if device_totals:
                payload["devices"] = [
                    _device_row(g, t) for g, t in sorted(device_totals.items())
                ]
            if events:
                payload["events"] = list(events)
            if jobs:
                payload["jobs"] = [
                    [j.job_id, list(j.node_guids), j.first_interval,
                     j.last_interval, j.source]
                    for j in jobs
                ]
            line = json.dumps(payload, separators=(",", ":"), sort_keys=True)
            self._write_line(interval, line)
            self._merge(payload)
            self._last = interval if self._last is None else max(self._last, interval)
            self._enforce_retention()

    def append_raw(self, frame: bytes) -> None:
        """Debug mode only: keep raw datagrams next to the derived rows."""
        if not self.debug_raw:
            return
        path = self.data_dir / "raw.bin"
        with self._lock, open(path, "ab") as f:
            f.write(len(frame).to_bytes(4, "little") + frame)

    def _write_line(self, interval: int, line: str) -> None:
        path = self._segment_path(interval // self.segment_intervals)
        try:
            with open(path, "ab") as f:
                f.write(line.encode("utf-8") + b"\n")
                f.flush()
                os.fsync(f.fileno())
        except OSError as exc:
            if exc.errno == errno.ENOSPC:
                raise StorageFull(str(exc)) from exc
            raise

    def _merge(self, payload: dict) -> None:
        interval = payload["i"]
        data = self._data.setdefault(interval, _IntervalData())
        for row in payload.get("links", ()):
            bd = _link_from(row, interval)
            data.links[bd.link_id] = bd
        for row in payload.get("devices", ()):
            guid, totals = _device_from(row)
            data.devices[guid] = totals
        for ev in payload.get("events", ()):
            data.events[ev["id"]] = ev
            self._max_event_id = max(self._max_event_id, ev["id"])
        for row in payload.get("jobs", ()):
            job = JobRecord(row[0], tuple(row[1]), row[2], row[3], row[4])
            old = self._jobs.get(job.job_id)
            if old is not None:
                job = JobRecord(
                    job.job_id,
                    tuple(sorted(set(old.node_guids) | set(job.node_guids))),
                    min(old.first_interval, job.first_interval),
                    max(old.last_interval, job.last_interval),
                    job.source,
                )
            self._jobs[job.job_id] = job

    def _enforce_retention(self) -> None:
        if self.max_segments is None:
            return
        segments = self._segments_on_disk()
        while len(segments) > self.max_segments:
            victim = segments.pop(0)
            seg_idx = int(victim.stem.split("-")[1])
            victim.unlink()
            lo = seg_idx * self.segment_intervals
            hi = lo + self.segment_intervals
            for i in [i for i in self._data if lo <= i < hi]:
                del self._data[i]

    # -- queries -----------------------------------------------------------

    def last_interval(self) -> int | None:
        with self._lock:
            return self._last

    def committed_intervals(self) -> list[int]:
        with self._lock:
            return sorted(self._data)

    def max_event_id(self) -> int:
        with self._lock:
            return self._max_event_id

    def query_links(
        self,
        start: int,
        end: int,
        link_ids: list[int] | None = None,
        job_id: int | None = None,
    ) -> LinkSeries:
        """Rows for intervals in [start, end], plus the list of gaps."""
        if end < start:
            raise StoreError(f"empty range [{start}, {end}]")
        if link_ids is not None and self.known_link_ids is not None:
            for lid in link_ids:
                if lid not in self.known_link_ids:
                    raise UnknownLink(lid)
        if job_id is not None and job_id not in self._jobs:
            raise UnknownJob(job_id)
        wanted = set(link_ids) if link_ids is not None else None
        rows: list[LinkBreakdown] = []
        gaps: list[int] = []
        with self._lock:
            for i in range(start, end + 1):
                data = self._data.get(i)
                if data is None:
                    gaps.append(i)
                    continue
                for link_id in sorted(data.links):
                    if wanted is not None and link_id not in wanted:
                        continue
                    bd = data.links[link_id]
                    if job_id is not None and job_id not in bd.job_totals():
                        continue
                    rows.append(bd)
        return LinkSeries(rows, gaps)

    def query_device(self, start: int, end: int, guid: int) -> list[tuple[int, DeviceClassTotals]]:
        if end < start:
            raise StoreError(f"empty range [{start}, {end}]")
        if self.known_guids is not None and guid not in self.known_guids:
            raise UnknownGuid(guid)
        out: list[tuple[int, DeviceClassTotals]] = []
        with self._lock:
            for i in range(start, end + 1):
                data = self._data.get(i)
                if data is not None and guid in data.devices:
                    out.append((i, data.devices[guid]))
        return out

    def query_events(
        self,
        start: int,
        end: int,
        rule_id: int | None = None,
        subject: str | None = None,
        job_id: int | None = None,
    ) -> list[dict]:
        out: list[dict] = []
        with self._lock:
            for i in range(start, end + 1):
                data = self._data.get(i)
                if data is None:
                    continue
                for ev_id in sorted(data.events):
                    ev = data.events[ev_id]
                    if rule_id is not None and ev.get("rule") != rule_id:
                        continue
                    if subject is not None and str(ev.get("subject")) != subject:
                        continue
                    if job_id is not None and job_id not in ev.get("jobs", ()):
                        continue
                    out.append(ev)
        return out

    def jobs(self) -> list[JobRecord]:
        with self._lock:
            return [self._jobs[j] for j in sorted(self._jobs)]

    def job(self, job_id: int) -> JobRecord:
        with self._lock:
            record = self._jobs.get(job_id)
            if record is None:
                raise UnknownJob(job_id)
            return record

    def dump(self, start: int, end: int):
        """Canonical NDJSON lines for [start, end], one per committed interval."""
        with self._lock:
            intervals = [i for i in sorted(self._data) if start <= i <= end]
        for i in intervals:
            data = self._data[i]
            payload = {
                "interval": i,
                "links": [_link_row(data.links[k]) for k in sorted(data.links)],
                "devices": [
                    _device_row(g, data.devices[g]) for g in sorted(data.devices)
                ],
                "events": [data.events[k] for k in sorted(data.events)],
            }
            yield json.dumps(payload, separators=(",", ":"), sort_keys=True)

    def storage_bytes(self) -> int:
        return sum(p.stat().st_size for p in self._segments_on_disk())

    def close(self) -> None:
        pass

"""Threshold rules and the events they raise.

Rules compare one metric per subject per interval against a threshold.
Counter style metrics (LinkDowned, XmtDiscards, RcvErrors, VL15Dropped)
compare the sampled cumulative value; byte and utilization metrics are
per interval; MpiLustreCoexist fires when both traffic classes clear
the threshold fraction of link capacity in the same interval. At most
one event exists per (rule, subject, interval).

Rules bootstrap file, one per line:

    rule <metric> <exceeds|drops_below|equals> <threshold> <scope> [period:N]

where scope is ``all``, ``links:1,2,3`` or ``job:42``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

from .exceptions import InvalidThreshold, MalformedLine, UnknownScope

ERROR_COUNTER_METRICS = ("LinkDowned", "XmtDiscards", "RcvErrors", "VL15Dropped")
METRICS = ERROR_COUNTER_METRICS + (
    "BytesSent",
    "BytesReceived",
    "LinkUtilization",
    "MpiLustreCoexist",
)
COMPARATORS = ("exceeds", "drops_below", "equals")

_FLOAT_METRICS = ("LinkUtilization", "MpiLustreCoexist")
_EQUALS_EPS = 1e-9


@dataclass(frozen=True)
class Scope:
    kind: str  # all | links | job
    link_ids: tuple[int, ...] = ()
    job_id: int | None = None

    def __post_init__(self):
        if self.kind not in ("all", "links", "job"):
            raise UnknownScope(f"scope kind {self.kind!r}")
        if self.kind == "links" and not self.link_ids:
            raise UnknownScope("links scope needs at least one link id")
        if self.kind == "job" and self.job_id is None:
            raise UnknownScope("job scope needs a job id")


def parse_scope(token: str) -> Scope:
    if token == "all":
        return Scope("all")
    kind, sep, rest = token.partition(":")
    if not sep:
        raise UnknownScope(f"bad scope {token!r}")
    if kind == "links":
        try:
            ids = tuple(int(x) for x in rest.split(",") if x)
        except ValueError:
            raise UnknownScope(f"bad link list {rest!r}") from None
        return Scope("links", link_ids=ids)
    if kind == "job":
        try:
            return Scope("job", job_id=int(rest))
        except ValueError:
            raise UnknownScope(f"bad job id {rest!r}") from None
    raise UnknownScope(f"scope kind {kind!r}")


def format_scope(scope: Scope) -> str:
    if scope.kind == "all":
        return "all"
    if scope.kind == "links":
        return "links:" + ",".join(str(i) for i in scope.link_ids)
    return f"job:{scope.job_id}"


@dataclass(frozen=True)
class NotificationRule:
    metric: str
    comparator: str
    threshold: float
    scope: Scope
    period: int = 1        # evaluate on intervals divisible by this
    rule_id: int | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise UnknownScope(f"unknown metric {self.metric!r}")
        if self.comparator not in COMPARATORS:
            raise UnknownScope(f"unknown comparator {self.comparator!r}")
        th = self.threshold
        if not isinstance(th, (int, float)) or isinstance(th, bool) or th < 0:
            raise InvalidThreshold(th)
        if self.period < 1:
            raise InvalidThreshold(self.period)


@dataclass(frozen=True)
class Event:
    event_id: int
    timestamp_ns: int
    rule_id: int
    subject_kind: str  # link | device | job
    subject_id: int | str
    value: float | int | list
    detail: str
    interval: int
    job_ids: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.event_id,
            "ts": self.timestamp_ns,
            "rule": self.rule_id,
            "kind": self.subject_kind,
            "subject": self.subject_id,
            "value": self.value,
            "detail": self.detail,
            "interval": self.interval,
            "jobs": list(self.job_ids),
        }


@dataclass
class LinkIntervalStats:
    bytes_a2b: int = 0
    bytes_b2a: int = 0
    mpi_a2b: int = 0
    mpi_b2a: int = 0
    io_a2b: int = 0
    io_b2a: int = 0
    capacity_bps: int = 0
    job_ids: tuple[int, ...] = ()


@dataclass
class IntervalSnapshot:
    """Everything rule evaluation needs for one interval."""

    interval: int
    interval_seconds: float
    timestamp_ns: int
    links: dict[int, LinkIntervalStats] = field(default_factory=dict)
    error_counters: dict[tuple[str, int], int] = field(default_factory=dict)
    job_links: dict[int, set[int]] = field(default_factory=dict)


def parse_rules_file(text: str) -> list[NotificationRule]:
    rules: list[NotificationRule] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (5, 6) or fields[0] != "rule":
            raise MalformedLine(
                line_no, "expected: rule <metric> <comparator> <threshold> <scope>"
            )
        period = 1
        if len(fields) == 6:
            tag, sep, value = fields[5].partition(":")
            if tag != "period" or not sep:
                raise MalformedLine(line_no, f"bad trailing token {fields[5]!r}")
            try:
                period = int(value)
            except ValueError:
                raise MalformedLine(line_no, f"bad period {value!r}") from None
        try:
            threshold = float(fields[3])
        except ValueError:
            raise MalformedLine(line_no, f"bad threshold {fields[3]!r}") from None
        rules.append(NotificationRule(
            metric=fields[1],
            comparator=fields[2],
            threshold=threshold,
            scope=parse_scope(fields[4]),
            period=period,
        ))
    return rules


def _compare(comparator: str, value: float, threshold: float, exact: bool) -> bool:
    if comparator == "exceeds":
        return value > threshold
    if comparator == "drops_below":
        return value < threshold
    if exact:
        return value == threshold
    return abs(value - threshold) < _EQUALS_EPS


class RuleEngine:
    def __init__(self, next_event_id: int = 1):
        self._rules: dict[int, NotificationRule] = {}
        self._next_rule_id = 1
        self._next_event_id = next_event_id
        self._lock = threading.RLock()

    def upsert_rule(self, rule: NotificationRule) -> int:
        with self._lock:
            if rule.rule_id is None:
                rule = replace(rule, rule_id=self._next_rule_id)
            self._rules[rule.rule_id] = rule
            self._next_rule_id = max(self._next_rule_id, rule.rule_id + 1)
            return rule.rule_id

    def delete_rule(self, rule_id: int) -> bool:
        with self._lock:
            return self._rules.pop(rule_id, None) is not None

    def rules(self) -> list[NotificationRule]:
        with self._lock:
            return [self._rules[k] for k in sorted(self._rules)]

    def get_rule(self, rule_id: int) -> NotificationRule | None:
        with self._lock:
            return self._rules.get(rule_id)

    # -- evaluation -----------------------------------------------------

    def evaluate_interval(self, snap: IntervalSnapshot) -> list[Event]:
        with self._lock:
            rules = [self._rules[k] for k in sorted(self._rules)]
            events: list[Event] = []
            for rule in rules:
                if snap.interval % rule.period != 0:
                    continue
                events.extend(self._evaluate_rule(rule, snap))
            return events

    def _subject_links(self, rule: NotificationRule, snap: IntervalSnapshot) -> list[int]:
        if rule.scope.kind == "all":
            ids = set(snap.links)
            ids.update(link for _m, link in snap.error_counters)
            return sorted(ids)
        if rule.scope.kind == "links":
            return sorted(rule.scope.link_ids)
        return sorted(snap.job_links.get(rule.scope.job_id, ()))

    def _evaluate_rule(self, rule: NotificationRule, snap: IntervalSnapshot) -> list[Event]:
        events: list[Event] = []
        cap_window = snap.interval_seconds / 8.0  # times bps gives bytes
        for link_id in self._subject_links(rule, snap):
            stats = snap.links.get(link_id, LinkIntervalStats())
            value: float | int | list
            fired = False
            detail = ""
            if rule.metric in ERROR_COUNTER_METRICS:
                value = snap.error_counters.get((rule.metric, link_id), 0)
                fired = _compare(rule.comparator, value, rule.threshold, exact=True)
                detail = f"link {link_id}: {rule.metric} {value} {rule.comparator} {rule.threshold:g}"
            elif rule.metric in ("BytesSent", "BytesReceived"):
                value = max(stats.bytes_a2b, stats.bytes_b2a)
                fired = _compare(rule.comparator, value, rule.threshold, exact=True)
                detail = f"link {link_id}: {rule.metric} {value} {rule.comparator} {rule.threshold:g}"
            elif rule.metric == "LinkUtilization":
                cap_bytes = stats.capacity_bps * cap_window
                value = (
                    max(stats.bytes_a2b, stats.bytes_b2a) / cap_bytes
                    if cap_bytes > 0 else 0.0
                )
                fired = _compare(rule.comparator, value, rule.threshold, exact=False)
                detail = (
                    f"link {link_id}: utilization {value:.4f} "
                    f"{rule.comparator} {rule.threshold:g}"
                )
            else:  # MpiLustreCoexist: both classes above the fraction
                cap_bytes = stats.capacity_bps * cap_window
                if cap_bytes > 0:
                    mpi_frac = max(stats.mpi_a2b, stats.mpi_b2a) / cap_bytes
                    io_frac = max(stats.io_a2b, stats.io_b2a) / cap_bytes
                else:
                    mpi_frac = io_frac = 0.0
                value = [mpi_frac, io_frac]
                fired = mpi_frac > rule.threshold and io_frac > rule.threshold
                detail = (
                    f"link {link_id}: mpi {mpi_frac:.4f} and storage {io_frac:.4f} "
                    f"of capacity co-exist above {rule.threshold:g}"
                )
            if not fired:
                continue
            events.append(Event(
                event_id=self._take_event_id(),
                timestamp_ns=snap.timestamp_ns,
                rule_id=rule.rule_id or 0,
                subject_kind="link",
                subject_id=link_id,
                value=value,
                detail=detail,
                interval=snap.interval,
                job_ids=stats.job_ids,
            ))
        return events

    def _take_event_id(self) -> int:
        eid = self._next_event_id
        self._next_event_id += 1
        return eid

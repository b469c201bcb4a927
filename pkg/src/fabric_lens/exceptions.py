"""Exception hierarchy shared across the package."""

from __future__ import annotations


class FabricLensError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------- topology

class TopologyError(FabricLensError):
    pass


class MalformedLine(TopologyError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateLid(TopologyError):
    def __init__(self, lid: int):
        super().__init__(f"duplicate lid {lid}")
        self.lid = lid


class DuplicateGuid(TopologyError):
    def __init__(self, guid: int):
        super().__init__(f"duplicate guid {guid:#018x}")
        self.guid = guid


class DanglingLinkEndpoint(TopologyError):
    def __init__(self, guid: int):
        super().__init__(f"link endpoint references unknown device {guid:#018x}")
        self.guid = guid


class PortConflict(TopologyError):
    def __init__(self, guid: int, port: int):
        super().__init__(f"port {port} on {guid:#018x} used by more than one link")
        self.guid = guid
        self.port = port


class TopologyInvariantError(TopologyError):
    """A structurally valid file that violates a fabric shape rule."""


# ----------------------------------------------------------------- routing

class RoutingError(FabricLensError):
    pass


class UnroutableTopology(RoutingError):
    pass


class UnknownLid(RoutingError):
    def __init__(self, lid: int):
        super().__init__(f"no host with lid {lid}")
        self.lid = lid


class UnknownGuid(FabricLensError):
    def __init__(self, guid: int, detail: str = ""):
        msg = f"unknown device guid {guid:#018x}"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.guid = guid


class RoutingLoop(RoutingError):
    def __init__(self, src_lid: int, dst_lid: int):
        super().__init__(f"routing loop while walking {src_lid} -> {dst_lid}")
        self.src_lid = src_lid
        self.dst_lid = dst_lid


# -------------------------------------------------------------------- wire

class WireError(FabricLensError):
    pass


class BadMagic(WireError):
    pass


class UnknownVersion(WireError):
    def __init__(self, version: int):
        super().__init__(f"unsupported frame version {version}")
        self.version = version


class UnknownType(WireError):
    def __init__(self, type_byte: int):
        super().__init__(f"unknown record type {type_byte:#04x}")
        self.type_byte = type_byte


class LengthMismatch(WireError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} bytes, got {got}")
        self.expected = expected
        self.got = got


class InvariantViolation(WireError):
    pass


class OstNameTooLong(WireError):
    def __init__(self, name: str, size: int):
        super().__init__(f"ost name is {size} bytes encoded, limit is 127")
        self.name = name
        self.size = size


# --------------------------------------------------------------- simulator

class SimulationError(FabricLensError):
    pass


class OverlappingJobId(SimulationError):
    def __init__(self, job_id: int):
        super().__init__(f"job id {job_id} already scheduled")
        self.job_id = job_id


class InvalidJobSpec(SimulationError):
    pass


# -------------------------------------------------------------- correlator

class CorrelationError(FabricLensError):
    pass


class UnresolvedHost(CorrelationError):
    def __init__(self, ip: str):
        super().__init__(f"cannot resolve {ip} to a fabric host")
        self.ip = ip


class CounterRegression(CorrelationError):
    def __init__(self, guid: int, port: int, field: str):
        super().__init__(
            f"counter {field} went backwards on {guid:#018x} port {port}"
        )
        self.guid = guid
        self.port = port
        self.field = field


class TooFewNodes(CorrelationError):
    def __init__(self, count: int):
        super().__init__(f"outlier detection needs at least 3 nodes, got {count}")
        self.count = count


# ------------------------------------------------------------------- store

class StoreError(FabricLensError):
    pass


class TooLate(StoreError):
    def __init__(self, interval: int, last: int, grace: int):
        super().__init__(
            f"interval {interval} is older than {last} - {grace} and cannot be merged"
        )
        self.interval = interval
        self.last = last
        self.grace = grace


class StorageFull(StoreError):
    pass


class UnknownLink(StoreError):
    def __init__(self, link_id: int):
        super().__init__(f"unknown link id {link_id}")
        self.link_id = link_id


class UnknownJob(StoreError):
    def __init__(self, job_id: int):
        super().__init__(f"unknown job id {job_id}")
        self.job_id = job_id


# ------------------------------------------------------------------ notify

class NotifyError(FabricLensError):
    pass


class InvalidThreshold(NotifyError):
    def __init__(self, threshold: float):
        super().__init__(f"threshold must be a non-negative number, got {threshold!r}")
        self.threshold = threshold


class UnknownScope(NotifyError):
    pass


# ------------------------------------------------------------------ server

class BindFailure(FabricLensError):
    def __init__(self, host: str, port: int, reason: str):
        super().__init__(f"cannot bind {host}:{port}: {reason}")
        self.host = host
        self.port = port

"""Binary telemetry codec.

Every frame is little endian with a fixed size per record type and a
four byte header: magic 0x49 0x4E ("IN"), version 0x01, then the type
byte. Field layouts, offsets in bytes:

MpiRecord (type 0x01, 64 bytes)
    0 magic  2 version  3 type  4 timestamp_ns u64  12 job_id u64
    20 rank u32  24 peer_rank u32  28 src_guid u64  36 dst_guid u64
    44 bytes_sent u64  52 bytes_recv u64  60 interval_ms u32

IoRecord (type 0x02, 311 bytes)
    0 magic  2 version  3 type  4 timestamp_ns u64  12 job_id u64
    20 rank u32  24 pid u32  28 node_guid u64  36 ost_name 128 bytes
    NUL padded  164 oss_ip 16 bytes (IPv4 mapped IPv6)
    180 read count/min/max/sum 4 x u64  212 write count/min/max/sum
    4 x u64  244 interval_ms u32  248 reserved 63 bytes

CounterSample (type 0x03, 88 bytes)
    0 magic  2 version  3 type  4 timestamp_ns u64  12 device_guid u64
    20 port u16  22 reserved u16  24 onward eight u64 counters:
    xmit_bytes, rcv_bytes, xmit_pkts, rcv_pkts, unicast_xmit_bytes,
    unicast_rcv_bytes, multicast_xmit_bytes, multicast_rcv_bytes

Counters are cumulative; agents reset them only on restart.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass

from .exceptions import (
    BadMagic,
    InvariantViolation,
    LengthMismatch,
    OstNameTooLong,
    UnknownType,
    UnknownVersion,
)

MAGIC = b"IN"
VERSION = 1
TYPE_MPI = 0x01
TYPE_IO = 0x02
TYPE_COUNTER = 0x03

MPI_RECORD_SIZE = 64
IO_RECORD_SIZE = 311
COUNTER_SAMPLE_SIZE = 88
OST_NAME_FIELD = 128

_MPI = struct.Struct("<2sBBQQIIQQQQI")
_IO = struct.Struct("<2sBBQQII Q 128s 16s QQQQ QQQQ I 63s".replace(" ", ""))
_COUNTER = struct.Struct("<2sBBQQHH8Q")

assert _MPI.size == MPI_RECORD_SIZE
assert _IO.size == IO_RECORD_SIZE
assert _COUNTER.size == COUNTER_SAMPLE_SIZE

_SIZES = {TYPE_MPI: MPI_RECORD_SIZE, TYPE_IO: IO_RECORD_SIZE, TYPE_COUNTER: COUNTER_SAMPLE_SIZE}

_U64 = 1 << 64
_U32 = 1 << 32
_U16 = 1 << 16


def _check_u64(name: str, value: int) -> None:
    if not 0 <= value < _U64:
        raise InvariantViolation(f"{name} out of u64 range: {value}")


def _check_u32(name: str, value: int) -> None:
    if not 0 <= value < _U32:
        raise InvariantViolation(f"{name} out of u32 range: {value}")


def _check_stats(prefix: str, count: int, lo: int, hi: int, total: int) -> None:
    for name, v in ((f"{prefix}_count", count), (f"{prefix}_min", lo),
                    (f"{prefix}_max", hi), (f"{prefix}_sum", total)):
        _check_u64(name, v)
    if count == 0:
        if lo or hi or total:
            raise InvariantViolation(f"{prefix}: zero count with nonzero stats")
        return
    if lo > hi:
        raise InvariantViolation(f"{prefix}: min {lo} above max {hi}")
    if not count * lo <= total <= count * hi:
        raise InvariantViolation(
            f"{prefix}: sum {total} outside [{count}*{lo}, {count}*{hi}]"
        )


def _canonical_ip(ip: str) -> str:
    try:
        return str(ipaddress.ip_address(ip))
    except ValueError as exc:
        raise InvariantViolation(f"bad oss_ip {ip!r}: {exc}") from None


@dataclass(frozen=True)
class MpiRecord:
    timestamp_ns: int
    job_id: int
    rank: int
    peer_rank: int
    src_guid: int
    dst_guid: int
    bytes_sent: int
    bytes_recv: int
    interval_ms: int

    def __post_init__(self):
        _check_u64("timestamp_ns", self.timestamp_ns)
        _check_u64("job_id", self.job_id)
        _check_u32("rank", self.rank)
        _check_u32("peer_rank", self.peer_rank)
        _check_u64("src_guid", self.src_guid)
        _check_u64("dst_guid", self.dst_guid)
        _check_u64("bytes_sent", self.bytes_sent)
        _check_u64("bytes_recv", self.bytes_recv)
        _check_u32("interval_ms", self.interval_ms)
        if self.src_guid == self.dst_guid and self.rank != self.peer_rank:
            raise InvariantViolation(
                "src_guid equals dst_guid but rank differs from peer_rank"
            )


@dataclass(frozen=True)
class IoRecord:
    timestamp_ns: int
    job_id: int
    rank: int
    pid: int
    node_guid: int
    ost_name: str
    oss_ip: str
    read_count: int
    read_min: int
    read_max: int
    read_sum: int
    write_count: int
    write_min: int
    write_max: int
    write_sum: int
    interval_ms: int

    def __post_init__(self):
        _check_u64("timestamp_ns", self.timestamp_ns)
        _check_u64("job_id", self.job_id)
        _check_u32("rank", self.rank)
        _check_u32("pid", self.pid)
        _check_u64("node_guid", self.node_guid)
        _check_u32("interval_ms", self.interval_ms)
        encoded = self.ost_name.encode("utf-8")
        if len(encoded) > OST_NAME_FIELD - 1:
            raise OstNameTooLong(self.ost_name, len(encoded))
        if b"\x00" in encoded:
            raise InvariantViolation("ost_name contains NUL")
        _check_stats("read", self.read_count, self.read_min, self.read_max, self.read_sum)
        _check_stats("write", self.write_count, self.write_min, self.write_max, self.write_sum)
        object.__setattr__(self, "oss_ip", _canonical_ip(self.oss_ip))


@dataclass(frozen=True)
class CounterSample:
    timestamp_ns: int
    device_guid: int
    port: int
    xmit_bytes: int
    rcv_bytes: int
    xmit_pkts: int
    rcv_pkts: int
    unicast_xmit_bytes: int
    unicast_rcv_bytes: int
    multicast_xmit_bytes: int
    multicast_rcv_bytes: int

    def __post_init__(self):
        _check_u64("timestamp_ns", self.timestamp_ns)
        _check_u64("device_guid", self.device_guid)
        if not 0 <= self.port < _U16:
            raise InvariantViolation(f"port out of u16 range: {self.port}")
        for name in ("xmit_bytes", "rcv_bytes", "xmit_pkts", "rcv_pkts",
                     "unicast_xmit_bytes", "unicast_rcv_bytes",
                     "multicast_xmit_bytes", "multicast_rcv_bytes"):
            _check_u64(name, getattr(self, name))
        if self.unicast_xmit_bytes + self.multicast_xmit_bytes > self.xmit_bytes:
            raise InvariantViolation("unicast + multicast xmit exceeds xmit_bytes")
        if self.unicast_rcv_bytes + self.multicast_rcv_bytes > self.rcv_bytes:
            raise InvariantViolation("unicast + multicast rcv exceeds rcv_bytes")


Record = MpiRecord | IoRecord | CounterSample


def _pack_ip(ip: str) -> bytes:
    addr = ipaddress.ip_address(ip)
    if isinstance(addr, ipaddress.IPv4Address):
        addr = ipaddress.IPv6Address(f"::ffff:{addr}")
    return addr.packed


def _unpack_ip(raw: bytes) -> str:
    addr = ipaddress.IPv6Address(raw)
    v4 = addr.ipv4_mapped
    return str(v4) if v4 is not None else str(addr)


def encode_record(record: Record) -> bytes:
    """Serialize any record to its fixed size frame."""
    if isinstance(record, MpiRecord):
        return _MPI.pack(
            MAGIC, VERSION, TYPE_MPI,
            record.timestamp_ns, record.job_id, record.rank, record.peer_rank,
            record.src_guid, record.dst_guid,
            record.bytes_sent, record.bytes_recv, record.interval_ms,
        )
    if isinstance(record, IoRecord):
        return _IO.pack(
            MAGIC, VERSION, TYPE_IO,
            record.timestamp_ns, record.job_id, record.rank, record.pid,
            record.node_guid,
            record.ost_name.encode("utf-8"),
            _pack_ip(record.oss_ip),
            record.read_count, record.read_min, record.read_max, record.read_sum,
            record.write_count, record.write_min, record.write_max, record.write_sum,
            record.interval_ms,
            b"",
        )
    if isinstance(record, CounterSample):
        return _COUNTER.pack(
            MAGIC, VERSION, TYPE_COUNTER,
            record.timestamp_ns, record.device_guid, record.port, 0,
            record.xmit_bytes, record.rcv_bytes,
            record.xmit_pkts, record.rcv_pkts,
            record.unicast_xmit_bytes, record.unicast_rcv_bytes,
            record.multicast_xmit_bytes, record.multicast_rcv_bytes,
        )
    raise TypeError(f"not a wire record: {type(record).__name__}")


def decode_record(data: bytes) -> Record:
    """Parse one frame. Any input yields a record or a WireError subclass."""
    if len(data) < 4:
        if len(data) >= 2 and data[:2] != MAGIC:
            raise BadMagic(f"bad magic {data[:2]!r}")
        raise LengthMismatch(4, len(data))
    if data[:2] != MAGIC:
        raise BadMagic(f"bad magic {data[:2]!r}")
    if data[2] != VERSION:
        raise UnknownVersion(data[2])
    type_byte = data[3]
    expected = _SIZES.get(type_byte)
    if expected is None:
        raise UnknownType(type_byte)
    if len(data) != expected:
        raise LengthMismatch(expected, len(data))

    if type_byte == TYPE_MPI:
        (_m, _v, _t, ts, job, rank, peer, src, dst, sent, recv, ival) = _MPI.unpack(data)
        return MpiRecord(ts, job, rank, peer, src, dst, sent, recv, ival)
    if type_byte == TYPE_IO:
        (_m, _v, _t, ts, job, rank, pid, guid, name_raw, ip_raw,
         rc, rmin, rmax, rsum, wc, wmin, wmax, wsum, ival, _res) = _IO.unpack(data)
        try:
            name = name_raw.split(b"\x00", 1)[0].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvariantViolation(f"ost_name is not UTF-8: {exc}") from None
        return IoRecord(ts, job, rank, pid, guid, name, _unpack_ip(ip_raw),
                        rc, rmin, rmax, rsum, wc, wmin, wmax, wsum, ival)
    (_m, _v, _t, ts, guid, port, _res, xb, rb, xp, rp, uxb, urb, mxb, mrb) = \
        _COUNTER.unpack(data)
    return CounterSample(ts, guid, port, xb, rb, xp, rp, uxb, urb, mxb, mrb)


def record_size(record: Record) -> int:
    if isinstance(record, MpiRecord):
        return MPI_RECORD_SIZE
    if isinstance(record, IoRecord):
        return IO_RECORD_SIZE
    return COUNTER_SAMPLE_SIZE


def expected_io_rate(num_procs: int, num_osts: int, frequency_hz: float) -> float:
    """Agent telemetry volume in bytes per second for storage profiling.

    Every process emits one fixed size record per target per collection
    tick, so the stream grows as procs x record size x targets x rate.
    """
    if num_procs < 0 or num_osts < 0 or frequency_hz < 0:
        raise ValueError("arguments must be non-negative")
    return num_procs * float(IO_RECORD_SIZE) * num_osts * frequency_hz

from __future__ import annotations

import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from fabric_lens.exceptions import (
    BadMagic,
    InvariantViolation,
    LengthMismatch,
    OstNameTooLong,
    UnknownType,
    UnknownVersion,
    WireError,
)
from fabric_lens.wire import (
    COUNTER_SAMPLE_SIZE,
    IO_RECORD_SIZE,
    MPI_RECORD_SIZE,
    CounterSample,
    IoRecord,
    MpiRecord,
    decode_record,
    encode_record,
    expected_io_rate,
    record_size,
)

from .oracles import io_rate_exact, stats_block_ok


def test_frame_sizes_are_frozen():
    assert MPI_RECORD_SIZE == 64
    assert IO_RECORD_SIZE == 311
    assert COUNTER_SAMPLE_SIZE == 88


def _mpi(rng: random.Random) -> MpiRecord:
    src = rng.randrange(2**64)
    dst = rng.randrange(2**64)
    if src == dst:
        dst ^= 1
    return MpiRecord(
        timestamp_ns=rng.randrange(2**63),
        job_id=rng.randrange(2**32),
        rank=rng.randrange(2**32),
        peer_rank=rng.randrange(2**32),
        src_guid=src,
        dst_guid=dst,
        bytes_sent=rng.randrange(2**40),
        bytes_recv=rng.randrange(2**40),
        interval_ms=rng.randrange(1, 2**31),
    )


def _stats(rng: random.Random) -> tuple[int, int, int, int]:
    count = rng.randrange(0, 50)
    if count == 0:
        return 0, 0, 0, 0
    mn = rng.randrange(0, 1000)
    mx = mn + rng.randrange(0, 1000)
    total = rng.randrange(count * mn, count * mx + 1)
    return count, mn, mx, total


def _io(rng: random.Random) -> IoRecord:
    rc, rmn, rmx, rsm = _stats(rng)
    wc, wmn, wmx, wsm = _stats(rng)
    return IoRecord(
        timestamp_ns=rng.randrange(2**63),
        job_id=rng.randrange(2**32),
        rank=rng.randrange(2**32),
        pid=rng.randrange(2**32),
        node_guid=rng.randrange(2**64),
        ost_name=f"oss-{rng.randrange(10000):04d}-ost{rng.randrange(8)}",
        oss_ip=f"10.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(1, 255)}",
        read_count=rc, read_min=rmn, read_max=rmx, read_sum=rsm,
        write_count=wc, write_min=wmn, write_max=wmx, write_sum=wsm,
        interval_ms=rng.randrange(1, 2**31),
    )


def _counter(rng: random.Random) -> CounterSample:
    total_x = rng.randrange(2**40)
    total_r = rng.randrange(2**40)
    ux = rng.randrange(total_x + 1)
    mx = rng.randrange(total_x - ux + 1)
    ur = rng.randrange(total_r + 1)
    mr = rng.randrange(total_r - ur + 1)
    return CounterSample(
        timestamp_ns=rng.randrange(2**63),
        device_guid=rng.randrange(2**64),
        port=rng.randrange(2**16),
        xmit_bytes=total_x, rcv_bytes=total_r,
        xmit_pkts=rng.randrange(2**30), rcv_pkts=rng.randrange(2**30),
        unicast_xmit_bytes=ux, unicast_rcv_bytes=ur,
        multicast_xmit_bytes=mx, multicast_rcv_bytes=mr,
    )


def test_round_trip_10k_random_records():
    rng = random.Random(0xF00D)
    makers = (_mpi, _io, _counter)
    for i in range(10_000):
        record = makers[i % 3](rng)
        frame = encode_record(record)
        assert len(frame) == record_size(record)
        assert decode_record(frame) == record


def test_known_mpi_frame_layout():
    record = MpiRecord(
        timestamp_ns=1, job_id=2, rank=3, peer_rank=4,
        src_guid=5, dst_guid=6, bytes_sent=7, bytes_recv=8, interval_ms=9)
    frame = encode_record(record)
    assert frame[:2] == b"IN"
    assert frame[2] == 1  # version
    assert frame[3] == 0x01
    assert struct.unpack_from("<Q", frame, 4)[0] == 1
    assert struct.unpack_from("<Q", frame, 12)[0] == 2
    assert struct.unpack_from("<II", frame, 20) == (3, 4)
    assert struct.unpack_from("<QQQQ", frame, 28) == (5, 6, 7, 8)
    assert struct.unpack_from("<I", frame, 60)[0] == 9


def test_ost_name_padding_and_limit():
    record = _io(random.Random(1))
    frame = encode_record(record)
    # ost_name field sits at a fixed offset and is NUL padded to 128
    name_field = frame[36:36 + 128]
    assert name_field.rstrip(b"\x00").decode() == record.ost_name
    with pytest.raises(OstNameTooLong):
        IoRecord(
            timestamp_ns=0, job_id=0, rank=0, pid=0, node_guid=0,
            ost_name="x" * 128, oss_ip="10.0.0.1",
            read_count=0, read_min=0, read_max=0, read_sum=0,
            write_count=0, write_min=0, write_max=0, write_sum=0,
            interval_ms=1)


def test_ipv4_maps_into_16_byte_field():
    rng = random.Random(2)
    record = _io(rng)
    decoded = decode_record(encode_record(record))
    assert decoded.oss_ip == record.oss_ip
    v6 = IoRecord(**{**record.__dict__, "oss_ip": "fd00::1:2"})
    assert decode_record(encode_record(v6)).oss_ip == "fd00::1:2"


def test_decode_totality_on_garbage():
    """Arbitrary bytes either decode or raise WireError, nothing else."""
    rng = random.Random(31337)
    for _ in range(2000):
        blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 400)))
        try:
            decode_record(blob)
        except WireError:
            pass


def test_decode_truncation_of_valid_frame():
    frame = encode_record(_mpi(random.Random(3)))
    for cut in range(len(frame)):
        with pytest.raises(WireError):
            decode_record(frame[:cut])


@given(st.binary(max_size=400))
@settings(max_examples=300)
def test_decode_totality_property(blob):
    try:
        decode_record(blob)
    except WireError:
        pass


def test_bad_magic():
    frame = bytearray(encode_record(_mpi(random.Random(4))))
    frame[0] = 0x58
    with pytest.raises(BadMagic):
        decode_record(bytes(frame))


def test_unknown_version():
    frame = bytearray(encode_record(_mpi(random.Random(5))))
    frame[2] = 9
    with pytest.raises(UnknownVersion):
        decode_record(bytes(frame))


def test_unknown_type():
    frame = bytearray(encode_record(_mpi(random.Random(6))))
    frame[3] = 0x7F
    with pytest.raises(UnknownType):
        decode_record(bytes(frame))


def test_length_mismatch_reports_both_sizes():
    frame = encode_record(_mpi(random.Random(7)))
    with pytest.raises(LengthMismatch) as err:
        decode_record(frame + b"\x00")
    assert "64" in str(err.value)
    assert "65" in str(err.value)


def test_stats_invariants_enforced():
    base = dict(
        timestamp_ns=0, job_id=0, rank=0, pid=0, node_guid=0,
        ost_name="a", oss_ip="10.0.0.1",
        write_count=0, write_min=0, write_max=0, write_sum=0,
        interval_ms=1)
    with pytest.raises(InvariantViolation):
        IoRecord(read_count=0, read_min=0, read_max=0, read_sum=5, **base)
    with pytest.raises(InvariantViolation):
        IoRecord(read_count=2, read_min=10, read_max=5, read_sum=15, **base)
    with pytest.raises(InvariantViolation):
        IoRecord(read_count=2, read_min=10, read_max=20, read_sum=1000, **base)
    ok = IoRecord(read_count=2, read_min=10, read_max=20, read_sum=30, **base)
    assert stats_block_ok(ok.read_count, ok.read_min, ok.read_max, ok.read_sum)


def test_counter_class_split_cannot_exceed_total():
    with pytest.raises(InvariantViolation):
        CounterSample(
            timestamp_ns=0, device_guid=1, port=1,
            xmit_bytes=100, rcv_bytes=0, xmit_pkts=0, rcv_pkts=0,
            unicast_xmit_bytes=80, unicast_rcv_bytes=0,
            multicast_xmit_bytes=30, multicast_rcv_bytes=0)


def test_expected_io_rate_reference_point():
    # 4096 procs, 8 targets each, 0.2 Hz agent frequency
    rate = expected_io_rate(4096, 8, 0.2)
    assert rate == pytest.approx(2_038_169.6)
    assert rate == pytest.approx(float(io_rate_exact(4096, 8, 1, 5)))


def test_expected_io_rate_scales_linearly():
    base = expected_io_rate(100, 4, 1.0)
    assert expected_io_rate(200, 4, 1.0) == pytest.approx(2 * base)
    assert expected_io_rate(100, 8, 1.0) == pytest.approx(2 * base)
    assert expected_io_rate(100, 4, 2.0) == pytest.approx(2 * base)
    with pytest.raises(ValueError):
        expected_io_rate(-1, 4, 1.0)

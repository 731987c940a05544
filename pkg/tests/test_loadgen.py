"""Wire codec laws, pacing, and loopback delivery."""

import socket
import threading
import time

import pytest
from hypothesis import given, settings, strategies as st

from uavflow.loadgen import (
    FRAME_LEN,
    MAGIC,
    MAX_DATAGRAM,
    CodecError,
    decode_packet,
    encode_packet,
    parse_hostport,
    replay_trace,
    run_sink,
)
from uavflow.model import ServiceClass, Subgroup
from uavflow.simulator import PacketEvent


def make_event(
    ts=0.25,
    uav_id=7,
    subgroup=Subgroup.MIDDLE,
    service=ServiceClass.IOT,
    size=200,
    seq=3,
):
    return PacketEvent(ts, uav_id, subgroup, service, size, seq)


events_strategy = st.builds(
    make_event,
    ts=st.integers(0, 10**12).map(lambda us: us / 1e6),
    uav_id=st.integers(0, 2**32 - 1),
    subgroup=st.sampled_from(list(Subgroup)),
    service=st.sampled_from(list(ServiceClass)),
    size=st.integers(FRAME_LEN, MAX_DATAGRAM),
    seq=st.integers(0, 2**64 - 1),
)


class TestCodec:
    @given(events_strategy)
    @settings(max_examples=300)
    def test_round_trip_identity(self, event):
        assert decode_packet(encode_packet(event)) == event

    def test_minimum_size_has_empty_payload(self):
        data = encode_packet(make_event(size=FRAME_LEN))
        assert len(data) == FRAME_LEN
        decoded = decode_packet(data)
        assert decoded.size == FRAME_LEN

    def test_datagram_length_equals_event_size(self):
        data = encode_packet(make_event(size=1000))
        assert len(data) == 1000

    def test_oversize_strict_error(self):
        with pytest.raises(CodecError, match="fragmentation"):
            encode_packet(make_event(size=MAX_DATAGRAM + 1))

    def test_undersize_strict_error(self):
        with pytest.raises(CodecError):
            encode_packet(make_event(size=FRAME_LEN - 1))

    def test_oversize_truncated_keeps_true_size(self):
        event = make_event(size=1_000_000, service=ServiceClass.STREAMING)
        data = encode_packet(event, truncate=True)
        assert len(data) == MAX_DATAGRAM
        assert decode_packet(data) == event

    def test_undersize_truncated_floors_size(self):
        event = make_event(size=4)
        data = encode_packet(event, truncate=True)
        assert len(data) == FRAME_LEN
        assert decode_packet(data).size == FRAME_LEN

    def test_bad_magic(self):
        data = bytearray(encode_packet(make_event()))
        data[:4] = b"XXXX"
        with pytest.raises(CodecError, match="magic"):
            decode_packet(bytes(data))

    def test_bad_version(self):
        data = bytearray(encode_packet(make_event()))
        data[4] = 9
        with pytest.raises(CodecError, match="version"):
            decode_packet(bytes(data))

    def test_length_mismatch(self):
        data = encode_packet(make_event(size=100))
        with pytest.raises(CodecError, match="length"):
            decode_packet(data + b"\x00")

    def test_short_buffer(self):
        with pytest.raises(CodecError):
            decode_packet(MAGIC + b"\x01")

    def test_bad_service_byte(self):
        data = bytearray(encode_packet(make_event()))
        data[9] = 7  # service field offset: 4 magic + 1 version + 4 uav_id
        with pytest.raises(CodecError):
            decode_packet(bytes(data))


class TestParseHostport:
    def test_ok(self):
        assert parse_hostport("127.0.0.1:9000") == ("127.0.0.1", 9000)

    @pytest.mark.parametrize("bad", ["nohost", ":123", "h:"])
    def test_bad(self, bad):
        with pytest.raises(ValueError):
            parse_hostport(bad)


def paced_events(n, duration):
    return [
        make_event(ts=k * duration / n, size=100 + k % 50, seq=k)
        for k in range(n)
    ]


class TestReplay:
    def test_empty_trace(self):
        stats = replay_trace([], ("127.0.0.1", 45000))
        assert stats.total_sent == 0
        assert stats.wall_s < 0.5

    def test_as_fast_as_possible_sends_all(self):
        stats = replay_trace(
            paced_events(1000, 1.0), ("127.0.0.1", 45000), as_fast_as_possible=True
        )
        assert stats.total_sent == 1000

    def test_speedup_must_be_positive(self):
        with pytest.raises(ValueError):
            replay_trace([], ("127.0.0.1", 45000), speedup=0.0)

    def test_pacing_wall_clock(self):
        # a 10-second trace replayed at 5x should take about 2 s
        stats = replay_trace(
            paced_events(400, 10.0), ("127.0.0.1", 45000), speedup=5.0
        )
        assert 1.7 <= stats.wall_s <= 2.6
        assert stats.total_sent == 400


class TestSink:
    def test_no_traffic_zero_report(self):
        report = run_sink(("127.0.0.1", 0), 0.3)
        assert report.total_received == 0
        assert report.malformed == 0
        assert report.first_arrival is None

    def test_malformed_counted_not_fatal(self):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sender = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        result = {}
        th = threading.Thread(
            target=lambda: result.update(
                r=run_sink(None, 1.5, max_packets=2, sock=sock)
            )
        )
        th.start()
        time.sleep(0.1)
        bad = bytearray(encode_packet(make_event()))
        bad[:4] = b"XXXX"
        sender.sendto(bytes(bad), ("127.0.0.1", port))
        sender.sendto(encode_packet(make_event()), ("127.0.0.1", port))
        sender.sendto(encode_packet(make_event(seq=4)), ("127.0.0.1", port))
        th.join()
        report = result["r"]
        assert report.malformed == 1
        assert report.total_received == 2
        sender.close()

    def test_gap_detection(self):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sender = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        result = {}
        th = threading.Thread(
            target=lambda: result.update(
                r=run_sink(None, 1.5, max_packets=3, sock=sock)
            )
        )
        th.start()
        time.sleep(0.1)
        for seq in (0, 1, 3):  # seq 2 missing
            sender.sendto(encode_packet(make_event(seq=seq)), ("127.0.0.1", port))
        th.join()
        assert result["r"].total_gaps == 1
        sender.close()


class TestLoopbackIntegration:
    def test_delivery_and_attribution(self):
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 8 << 20)
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        seq_counter = {}
        events = []
        for k in range(2000):
            key = (k % 5, (k % 3) + 1)
            seq = seq_counter.get(key, 0)
            seq_counter[key] = seq + 1
            events.append(
                make_event(
                    ts=k * 1e-4,
                    uav_id=key[0],
                    subgroup=Subgroup((k % 3) + 1),
                    service=ServiceClass(key[1]),
                    size=120 + k % 40,
                    seq=seq,
                )
            )
        stop = threading.Event()
        result = {}
        th = threading.Thread(
            target=lambda: result.update(
                r=run_sink(None, None, stop=stop, sock=sock)
            )
        )
        th.start()
        time.sleep(0.05)
        stats = replay_trace(
            events, ("127.0.0.1", port), as_fast_as_possible=True
        )
        time.sleep(0.4)
        stop.set()
        th.join()
        report = result["r"]
        assert stats.total_sent == 2000
        assert report.total_received == 2000
        assert [list(r) for r in report.counts] == [list(r) for r in stats.sent]
        assert report.total_gaps == 0

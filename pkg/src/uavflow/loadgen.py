"""UDP trace replay and collection.

Every trace event becomes one datagram: a 4-byte magic, a fixed 27-byte
header (big-endian: version, uav_id, service, subgroup, seq, timestamp_us,
payload_len), then zero padding so the datagram length equals the event's
size. Events too large for a single datagram are sent truncated as version 2,
whose first 8 payload bytes carry the true size, so decoding still recovers
the exact event size. The replayer paces sends to event timestamps (scaled by
a speedup factor) with a hybrid sleep/spin loop; the sink decodes, attributes
each packet to its (service, subgroup) segment, and tracks sequence gaps.
"""

from __future__ import annotations

import math
import socket
import struct
import time
from dataclasses import dataclass, field

from .model import ServiceClass, Subgroup
from .simulator import PacketEvent

MAGIC = b"UAVF"
VERSION = 1
VERSION_TRUNCATED = 2
_HEADER = struct.Struct(">BIBBQQI")  # after the magic
HEADER_LEN = _HEADER.size  # 27
FRAME_LEN = len(MAGIC) + HEADER_LEN  # 31 bytes of fixed overhead
_TRUE_SIZE = struct.Struct(">Q")
MAX_DATAGRAM = 65507  # UDP payload bound for IPv4


class CodecError(ValueError):
    """Packet bytes cannot be encoded/decoded."""


class PacingError(RuntimeError):
    """Replay could not sustain the requested rate."""


def encode_packet(event: PacketEvent, *, truncate: bool = False) -> bytes:
    """Encode one event as a datagram.

    Without ``truncate``, the event size must fit the wire exactly:
    FRAME_LEN <= size <= MAX_DATAGRAM. With ``truncate``, oversize events
    become a version-2 datagram carrying the true size, and undersize events
    are sent as a bare header (their size is then reported as FRAME_LEN).
    """
    size = event.size
    if size > MAX_DATAGRAM and not truncate:
        raise CodecError(
            f"event size {size} exceeds the {MAX_DATAGRAM}-byte UDP datagram"
            " bound; fragmentation is out of scope"
        )
    if size < FRAME_LEN and not truncate:
        raise CodecError(
            f"event size {size} is below the {FRAME_LEN}-byte fixed overhead"
        )
    ts_us = int(round(event.timestamp * 1e6))
    if ts_us < 0:
        raise CodecError(f"negative timestamp {event.timestamp}")
    if size > MAX_DATAGRAM:
        payload_len = MAX_DATAGRAM - FRAME_LEN
        header = _HEADER.pack(
            VERSION_TRUNCATED,
            event.uav_id,
            int(event.service),
            int(event.subgroup),
            event.seq,
            ts_us,
            payload_len,
        )
        pad = bytes(payload_len - _TRUE_SIZE.size)
        return MAGIC + header + _TRUE_SIZE.pack(size) + pad
    payload_len = max(0, size - FRAME_LEN)
    header = _HEADER.pack(
        VERSION,
        event.uav_id,
        int(event.service),
        int(event.subgroup),
        event.seq,
        ts_us,
        payload_len,
    )
    return MAGIC + header + bytes(payload_len)


def decode_packet(data: bytes) -> PacketEvent:
    """Decode a datagram; raises :class:`CodecError` on any malformation."""
    if len(data) < FRAME_LEN:
        raise CodecError(f"datagram of {len(data)} bytes is shorter than a header")
    if data[:4] != MAGIC:
        raise CodecError(f"bad magic {data[:4]!r}")
    version, uav_id, service, subgroup, seq, ts_us, payload_len = _HEADER.unpack(
        data[4:FRAME_LEN]
    )
    if version not in (VERSION, VERSION_TRUNCATED):
        raise CodecError(f"unsupported version {version}")
    if len(data) != FRAME_LEN + payload_len:
        raise CodecError(
            f"length mismatch: datagram {len(data)}, header claims "
            f"{FRAME_LEN + payload_len}"
        )
    try:
        svc = ServiceClass(service)
        sub = Subgroup(subgroup)
    except ValueError as e:
        raise CodecError(str(e)) from e
    if version == VERSION_TRUNCATED:
        if payload_len < _TRUE_SIZE.size:
            raise CodecError("truncated packet lacks its true-size field")
        size = _TRUE_SIZE.unpack_from(data, FRAME_LEN)[0]
    else:
        size = FRAME_LEN + payload_len
    return PacketEvent(
        timestamp=ts_us / 1e6,
        uav_id=uav_id,
        subgroup=sub,
        service=svc,
        size=size,
        seq=seq,
    )


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"expected host:port, got {text!r}")
    return host, int(port)


@dataclass
class ReplayStats:
    """Send-side accounting for one replay."""

    sent: list = field(default_factory=lambda: [[0] * 3 for _ in range(3)])
    wire_bytes: int = 0
    max_lateness_s: float = 0.0
    wall_s: float = 0.0

    @property
    def total_sent(self) -> int:
        return sum(sum(row) for row in self.sent)

    def to_dict(self) -> dict:
        return {
            "sent": [list(row) for row in self.sent],
            "total_sent": self.total_sent,
            "wire_bytes": self.wire_bytes,
            "max_lateness_s": self.max_lateness_s,
            "wall_s": self.wall_s,
        }


def replay_trace(
    events,
    target: tuple[str, int],
    *,
    speedup: float = 1.0,
    as_fast_as_possible: bool = False,
    late_abort_s: float = 0.1,
    late_abort_run: int = 50,
    sock: socket.socket | None = None,
) -> ReplayStats:
    """Send each event at wall time timestamp/speedup after the first send.

    Pacing is best effort: a coarse sleep to within ~1 ms of the deadline,
    then a spin. Lateness is recorded per packet; when ``late_abort_run``
    consecutive packets are more than ``late_abort_s`` late the replay aborts
    with :class:`PacingError`, signaling the host cannot honor the rate.
    """
    if not as_fast_as_possible and not (speedup > 0 and math.isfinite(speedup)):
        raise ValueError(f"speedup must be positive and finite (got {speedup})")
    own_sock = sock is None
    if own_sock:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    stats = ReplayStats()
    late_run = 0
    start = time.perf_counter()
    try:
        for event in events:
            data = encode_packet(event, truncate=True)
            if not as_fast_as_possible:
                deadline = start + event.timestamp / speedup
                now = time.perf_counter()
                wait = deadline - now
                if wait > 0.0015:
                    time.sleep(wait - 0.001)
                while (now := time.perf_counter()) < deadline:
                    pass
                lateness = now - deadline
                if lateness > stats.max_lateness_s:
                    stats.max_lateness_s = lateness
                if lateness > late_abort_s:
                    late_run += 1
                    if late_run >= late_abort_run:
                        raise PacingError(
                            f"{late_run} consecutive packets over "
                            f"{late_abort_s * 1e3:.0f} ms late (worst "
                            f"{stats.max_lateness_s * 1e3:.0f} ms); host cannot "
                            f"sustain the requested rate"
                        )
                else:
                    late_run = 0
            sock.sendto(data, target)
            stats.sent[event.service.row][event.subgroup.col] += 1
            stats.wire_bytes += len(data)
    finally:
        stats.wall_s = time.perf_counter() - start
        if own_sock:
            sock.close()
    return stats


@dataclass
class StreamStat:
    """Per-(uav, service) sequence tracking."""

    received: int = 0
    min_seq: int = 0
    max_seq: int = 0

    @property
    def gaps(self) -> int:
        if self.received == 0:
            return 0
        return (self.max_seq - self.min_seq + 1) - self.received


@dataclass
class SinkReport:
    """Receive-side accounting: per-segment delivery and sequence gaps."""

    counts: list = field(default_factory=lambda: [[0] * 3 for _ in range(3)])
    size_bytes: list = field(default_factory=lambda: [[0] * 3 for _ in range(3)])
    wire_bytes: int = 0
    malformed: int = 0
    first_arrival: float | None = None
    last_arrival: float | None = None
    streams: dict = field(default_factory=dict)

    @property
    def total_received(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def total_gaps(self) -> int:
        return sum(s.gaps for s in self.streams.values())

    def to_dict(self) -> dict:
        return {
            "counts": [list(row) for row in self.counts],
            "size_bytes": [list(row) for row in self.size_bytes],
            "total_received": self.total_received,
            "wire_bytes": self.wire_bytes,
            "malformed": self.malformed,
            "first_arrival": self.first_arrival,
            "last_arrival": self.last_arrival,
            "total_gaps": self.total_gaps,
            "streams": {
                f"{uav}:{svc}": {
                    "received": s.received,
                    "min_seq": s.min_seq,
                    "max_seq": s.max_seq,
                    "gaps": s.gaps,
                }
                for (uav, svc), s in sorted(self.streams.items())
            },
        }


def run_sink(
    bind: tuple[str, int],
    duration_s: float | None,
    *,
    max_packets: int | None = None,
    stop=None,
    sock: socket.socket | None = None,
) -> SinkReport:
    """Collect datagrams on ``bind`` until the duration elapses.

    Malformed datagrams are counted, never fatal. ``stop`` may be a
    ``threading.Event`` for external shutdown; ``max_packets`` ends collection
    early once reached.
    """
    own_sock = sock is None
    if own_sock:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 8 * 1024 * 1024)
        sock.bind(bind)
    sock.settimeout(0.05)
    report = SinkReport()
    deadline = None if duration_s is None else time.monotonic() + duration_s
    try:
        while True:
            if deadline is not None and time.monotonic() >= deadline:
                break
            if stop is not None and stop.is_set():
                break
            if max_packets is not None and report.total_received >= max_packets:
                break
            try:
                data, _ = sock.recvfrom(65535)
            except socket.timeout:
                continue
            now = time.time()
            if report.first_arrival is None:
                report.first_arrival = now
            report.last_arrival = now
            report.wire_bytes += len(data)
            try:
                event = decode_packet(data)
            except CodecError:
                report.malformed += 1
                continue
            i, j = event.service.row, event.subgroup.col
            report.counts[i][j] += 1
            report.size_bytes[i][j] += event.size
            key = (event.uav_id, int(event.service))
            st = report.streams.get(key)
            if st is None:
                report.streams[key] = StreamStat(
                    received=1, min_seq=event.seq, max_seq=event.seq
                )
            else:
                st.received += 1
                st.min_seq = min(st.min_seq, event.seq)
                st.max_seq = max(st.max_seq, event.seq)
    finally:
        if own_sock:
            sock.close()
    return report

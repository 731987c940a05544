"""Trace file export/import.

One CSV record per packet event plus a header line::

    timestamp_s,uav_id,subgroup,service,seq,size_bytes

Paths ending in ``.gz`` are gzip-compressed. Timestamps are written with
nanosecond resolution, which keeps files byte-stable across runs.
"""

from __future__ import annotations

import gzip
import io
from typing import Iterable, Iterator

from .model import ServiceClass, Subgroup
from .simulator import EventBatch, MalformedEventError, PacketEvent

TRACE_HEADER = "timestamp_s,uav_id,subgroup,service,seq,size_bytes"


class _GzTextWriter(io.TextIOWrapper):
    """Deterministic gzip text writer: fixed mtime, no embedded filename."""

    def __init__(self, path):
        self._raw = open(path, "wb")
        gz = gzip.GzipFile(filename="", mode="wb", fileobj=self._raw, mtime=0)
        super().__init__(gz, encoding="utf-8", newline="\n")

    def close(self):
        try:
            super().close()
        finally:
            self._raw.close()


def _open_write(path):
    if str(path).endswith(".gz"):
        return _GzTextWriter(path)
    return open(path, "w", encoding="utf-8", newline="\n")


def _open_read(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def write_trace(path, batches: Iterable[EventBatch]) -> int:
    """Stream batches to a trace file; returns the number of events written."""
    written = 0
    with _open_write(path) as f:
        f.write(TRACE_HEADER + "\n")
        for batch in batches:
            lines = [
                "%.9f,%d,%d,%d,%d,%d"
                % (
                    batch.timestamp[k],
                    batch.uav_id[k],
                    batch.subgroup[k],
                    batch.service[k],
                    batch.seq[k],
                    batch.size[k],
                )
                for k in range(len(batch))
            ]
            if lines:
                f.write("\n".join(lines) + "\n")
            written += len(batch)
    return written


def read_trace(path) -> Iterator[PacketEvent]:
    """Yield events from a trace file in file order."""
    with _open_read(path) as f:
        header = f.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise MalformedEventError(
                f"bad trace header {header!r}; expected {TRACE_HEADER!r}"
            )
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise MalformedEventError(
                    f"line {lineno}: expected 6 fields, got {len(parts)}"
                )
            try:
                yield PacketEvent(
                    timestamp=float(parts[0]),
                    uav_id=int(parts[1]),
                    subgroup=Subgroup(int(parts[2])),
                    service=ServiceClass(int(parts[3])),
                    seq=int(parts[4]),
                    size=int(parts[5]),
                )
            except ValueError as e:
                raise MalformedEventError(f"line {lineno}: {e}") from e

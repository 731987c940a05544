"""Seeded packet-level traffic generation across the nine model segments.

Each (UAV, service) pair emits a homogeneous Poisson process at the per-UAV
rate the model derives for its segment. Generation is windowed in time: every
(UAV, service, window) cell gets its own counter-based Philox generator keyed
from the scenario seed, so the event stream is a pure function of
(scenario, seed) regardless of how many worker threads produce it, and a
counts-only summary can skip timestamp draws while consuming identical
values (draw order per cell is count, then sizes, then timestamps).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .model import (
    Matrix3,
    RateMatrix,
    ServiceClass,
    Subgroup,
    SubgroupPartition,
    TrafficForecast,
    Triple,
)
from .scenario import ScenarioConfig, SizeKind, SizeModel

DEFAULT_EVENT_CAP = 1_000_000_000
TARGET_CHUNK_EVENTS = 500_000


class CapacityError(RuntimeError):
    """Expected event volume exceeds the configured safety cap."""


class MalformedEventError(ValueError):
    """An event violates basic field invariants."""


@dataclass(frozen=True)
class UavAssignment:
    """Integer subgroup sizes and the contiguous uav_id -> subgroup map."""

    counts: tuple[int, int, int]

    @property
    def n_uavs(self) -> int:
        return sum(self.counts)

    @property
    def offsets(self) -> tuple[int, int, int]:
        """First uav_id of each subgroup (poor, middle, rich)."""
        c = self.counts
        return (0, c[0], c[0] + c[1])

    def subgroup_of(self, uav_id: int) -> Subgroup:
        if not 0 <= uav_id < self.n_uavs:
            raise ValueError(f"uav_id {uav_id} outside 0..{self.n_uavs - 1}")
        off = self.offsets
        if uav_id < off[1]:
            return Subgroup.POOR
        if uav_id < off[2]:
            return Subgroup.MIDDLE
        return Subgroup.RICH

    def membership(self) -> np.ndarray:
        """Subgroup value (1..3) per uav_id."""
        return np.repeat(np.array([1, 2, 3], dtype=np.uint8), self.counts)


@dataclass(frozen=True)
class PacketEvent:
    timestamp: float
    uav_id: int
    subgroup: Subgroup
    service: ServiceClass
    size: int
    seq: int


@dataclass
class EventBatch:
    """Struct-of-arrays slice of the event stream (time-ordered)."""

    timestamp: np.ndarray  # float64 seconds
    uav_id: np.ndarray  # uint32
    subgroup: np.ndarray  # uint8, 1..3
    service: np.ndarray  # uint8, 1..3
    seq: np.ndarray  # uint64
    size: np.ndarray  # int64 bytes

    def __len__(self) -> int:
        return len(self.timestamp)

    def events(self) -> Iterator[PacketEvent]:
        for k in range(len(self.timestamp)):
            yield PacketEvent(
                timestamp=float(self.timestamp[k]),
                uav_id=int(self.uav_id[k]),
                subgroup=Subgroup(int(self.subgroup[k])),
                service=ServiceClass(int(self.service[k])),
                size=int(self.size[k]),
                seq=int(self.seq[k]),
            )


@dataclass(frozen=True)
class TraceSummary:
    """Per-segment packet counts and byte sums (rows services, cols subgroups)."""

    counts: tuple[tuple[int, int, int], ...]
    size_bytes: tuple[tuple[int, int, int], ...]

    @property
    def count_by_service(self) -> tuple[int, int, int]:
        return tuple(sum(row) for row in self.counts)

    @property
    def bytes_by_service(self) -> tuple[int, int, int]:
        return tuple(sum(row) for row in self.size_bytes)

    @property
    def total_count(self) -> int:
        return sum(self.count_by_service)

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_by_service)

    @staticmethod
    def from_arrays(counts: np.ndarray, size_bytes: np.ndarray) -> "TraceSummary":
        return TraceSummary(
            counts=tuple(tuple(int(v) for v in row) for row in counts),
            size_bytes=tuple(tuple(int(v) for v in row) for row in size_bytes),
        )


@dataclass(frozen=True)
class ComparisonReport:
    """Theory-vs-simulation deltas for the nine segments and three services.

    ``z`` and ``rel_err`` entries are None where the expectation is zero
    (degenerate segments); ``outliers`` lists segments with \\|z\\| > 4.
    """

    expected_segments: Matrix3
    expected_packets: Triple
    expected_bytes: Triple
    observed: TraceSummary
    rel_err_segments: tuple[tuple[float | None, ...], ...]
    z_segments: tuple[tuple[float | None, ...], ...]
    rel_err_packets: tuple[float | None, ...]
    rel_err_bytes: tuple[float | None, ...]
    outliers: tuple[tuple[int, int], ...]
    degenerate: tuple[tuple[int, int], ...]


def assign_uavs(n_uavs: int, part: SubgroupPartition) -> UavAssignment:
    """Integer subgroup sizes by largest-remainder rounding of F_j * N.

    Ties go to the lower subgroup index. uav_ids run contiguously poor,
    middle, rich.
    """
    if n_uavs < 0:
        raise ValueError(f"n_uavs must be >= 0 (got {n_uavs})")
    raw = [f * n_uavs for f in part.f]
    counts = [math.floor(x) for x in raw]
    remainders = [x - c for x, c in zip(raw, counts)]
    leftover = n_uavs - sum(counts)
    for j in sorted(range(3), key=lambda j: (-remainders[j], j))[:leftover]:
        counts[j] += 1
    return UavAssignment(counts=tuple(counts))


def expected_segment_counts(
    assignment: UavAssignment, duration_s: float, rates: RateMatrix
) -> Matrix3:
    """Expected event counts per segment using the integer subgroup sizes."""
    return tuple(
        tuple(assignment.counts[j] * duration_s * rates.lam[i][j] for j in range(3))
        for i in range(3)
    )


# Counter-based per-cell RNG keys: a splitmix64 chain over
# (seed, uav_id, service row, window index) feeding a 2x64 Philox key.
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _cell_rng(seed: int, uav_id: int, row: int, window: int) -> np.random.Generator:
    k = _splitmix64(seed)
    k = _splitmix64(k ^ uav_id)
    k = _splitmix64(k ^ (row + 1))
    k = _splitmix64(k ^ window)
    key = np.array([k, _splitmix64(k)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_sizes(
    rng: np.random.Generator, n: int, size_model: SizeModel
) -> np.ndarray:
    if size_model.kind is SizeKind.DETERMINISTIC:
        return np.full(n, int(round(size_model.mean)), dtype=np.int64)
    return np.rint(rng.exponential(size_model.mean, n)).astype(np.int64)


def _window_grid(total_rate: float, duration_s: float) -> tuple[int, float]:
    """Number of generation windows and their width (scenario-determined)."""
    expected = total_rate * duration_s
    n_windows = max(1, math.ceil(expected / TARGET_CHUNK_EVENTS))
    return n_windows, duration_s / n_windows


def _rate_lookup(rates: RateMatrix, assignment: UavAssignment) -> np.ndarray:
    """lam[row, uav_id] for every uav, via its subgroup."""
    member = assignment.membership()
    lam = np.asarray(rates.lam, dtype=np.float64)
    return lam[:, member - 1] if len(member) else lam[:, :0]


def _total_rate(rates: RateMatrix, assignment: UavAssignment) -> float:
    return float(
        sum(
            assignment.counts[j] * sum(rates.lam[i][j] for i in range(3))
            for j in range(3)
        )
    )


def _check_capacity(
    rates: RateMatrix,
    assignment: UavAssignment,
    duration_s: float,
    max_events: int,
) -> float:
    total_rate = _total_rate(rates, assignment)
    expected = total_rate * duration_s
    if expected > max_events:
        raise CapacityError(
            f"expected event count {expected:.3g} exceeds the safety cap "
            f"{max_events:.3g}; raise max_events to proceed"
        )
    return total_rate


def _uav_blocks(n_uavs: int, n_blocks: int) -> list[range]:
    if n_uavs == 0:
        return []
    size = max(1, math.ceil(n_uavs / n_blocks))
    return [range(s, min(s + size, n_uavs)) for s in range(0, n_uavs, size)]


def generate_events(
    config: ScenarioConfig,
    part: SubgroupPartition,
    rates: RateMatrix,
    assignment: UavAssignment,
    *,
    threads: int = 1,
    max_events: int = DEFAULT_EVENT_CAP,
) -> Iterator[EventBatch]:
    """Yield the full event stream as time-ordered batches.

    The stream is globally ordered by (timestamp, uav_id, service, seq) and is
    bit-identical for the same (config, seed) at any thread count. Raises
    :class:`CapacityError` up front when the expected volume exceeds
    ``max_events``.
    """
    _check_consistent(config, part, assignment)
    total_rate = _check_capacity(rates, assignment, config.duration_s, max_events)
    n = config.n_uavs
    t_end = config.duration_s
    if n == 0 or t_end <= 0.0 or total_rate <= 0.0:
        return iter(())
    return _generate(config, rates, assignment, total_rate, threads)


def _check_consistent(
    config: ScenarioConfig, part: SubgroupPartition, assignment: UavAssignment
) -> None:
    if assignment.n_uavs != config.n_uavs:
        raise ValueError(
            f"assignment covers {assignment.n_uavs} UAVs, scenario has {config.n_uavs}"
        )
    if assignment != assign_uavs(config.n_uavs, part):
        raise ValueError("assignment does not match the given partition")


def _generate(
    config: ScenarioConfig,
    rates: RateMatrix,
    assignment: UavAssignment,
    total_rate: float,
    threads: int,
) -> Iterator[EventBatch]:
    n = config.n_uavs
    t_end = config.duration_s
    n_windows, dt = _window_grid(total_rate, t_end)
    member = assignment.membership()
    lam_by_uav = _rate_lookup(rates, assignment)
    t_max = np.nextafter(t_end, 0.0)
    seq_base = np.zeros((n, 3), dtype=np.uint64)
    blocks = _uav_blocks(n, max(1, threads) * 8)

    def cell_window(uav: int, row: int, window: int):
        lam = lam_by_uav[row, uav]
        if lam <= 0.0:
            return None
        rng = _cell_rng(config.seed, uav, row, window)
        count = int(rng.poisson(lam * dt))
        if count == 0:
            return None
        sizes = _draw_sizes(rng, count, config.sizes[row])
        ts = window * dt + dt * np.sort(rng.random(count))
        return uav, row, ts, sizes

    def block_window(block: range, window: int):
        out = []
        for uav in block:
            for row in range(3):
                cell = cell_window(uav, row, window)
                if cell is not None:
                    out.append(cell)
        return out

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for window in range(n_windows):
            if pool is None:
                pieces = [block_window(b, window) for b in blocks]
            else:
                pieces = list(pool.map(lambda b: block_window(b, window), blocks))
            cells = [c for piece in pieces for c in piece]
            if not cells:
                continue
            sizes_list, ts_list, uav_list, svc_list, seq_list = [], [], [], [], []
            for uav, row, ts, sizes in cells:
                count = len(ts)
                base = seq_base[uav, row]
                seq_base[uav, row] += count
                ts_list.append(ts)
                sizes_list.append(sizes)
                uav_list.append(np.full(count, uav, dtype=np.uint32))
                svc_list.append(np.full(count, row + 1, dtype=np.uint8))
                seq_list.append(base + np.arange(count, dtype=np.uint64))
            ts = np.minimum(np.concatenate(ts_list), t_max)
            uav = np.concatenate(uav_list)
            svc = np.concatenate(svc_list)
            seq = np.concatenate(seq_list)
            size = np.concatenate(sizes_list)
            order = np.lexsort((seq, svc, uav, ts))
            yield EventBatch(
                timestamp=ts[order],
                uav_id=uav[order],
                subgroup=member[uav[order]],
                service=svc[order],
                seq=seq[order],
                size=size[order],
            )
    finally:
        if pool is not None:
            pool.shutdown()


def simulate_summary(
    config: ScenarioConfig,
    part: SubgroupPartition,
    rates: RateMatrix,
    assignment: UavAssignment,
    *,
    threads: int = 1,
    max_events: int = DEFAULT_EVENT_CAP,
) -> TraceSummary:
    """Trace summary without materializing timestamps.

    Consumes the same per-cell count/size draws as :func:`generate_events`,
    so the result equals summarizing the full stream.
    """
    _check_consistent(config, part, assignment)
    total_rate = _check_capacity(rates, assignment, config.duration_s, max_events)
    counts = np.zeros((3, 3), dtype=np.int64)
    size_bytes = np.zeros((3, 3), dtype=np.int64)
    n = config.n_uavs
    if n == 0 or config.duration_s <= 0.0 or total_rate <= 0.0:
        return TraceSummary.from_arrays(counts, size_bytes)
    n_windows, dt = _window_grid(total_rate, config.duration_s)
    member = assignment.membership()
    lam_by_uav = _rate_lookup(rates, assignment)
    blocks = _uav_blocks(n, max(1, threads) * 8)

    def block_totals(block: range):
        c = np.zeros((3, 3), dtype=np.int64)
        b = np.zeros((3, 3), dtype=np.int64)
        for uav in block:
            col = member[uav] - 1
            for row in range(3):
                lam = lam_by_uav[row, uav]
                if lam <= 0.0:
                    continue
                for window in range(n_windows):
                    rng = _cell_rng(config.seed, uav, row, window)
                    count = int(rng.poisson(lam * dt))
                    if count == 0:
                        continue
                    c[row, col] += count
                    if config.sizes[row].kind is SizeKind.DETERMINISTIC:
                        b[row, col] += count * int(round(config.sizes[row].mean))
                    else:
                        b[row, col] += int(
                            _draw_sizes(rng, count, config.sizes[row]).sum()
                        )
        return c, b

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for c, b in pool.map(block_totals, blocks):
                counts += c
                size_bytes += b
    else:
        for block in blocks:
            c, b = block_totals(block)
            counts += c
            size_bytes += b
    return TraceSummary.from_arrays(counts, size_bytes)


def _batch_invariants(batch: EventBatch) -> None:
    if len(batch) == 0:
        return
    for name, arr, lo, hi in (
        ("service", batch.service, 1, 3),
        ("subgroup", batch.subgroup, 1, 3),
    ):
        if arr.min() < lo or arr.max() > hi:
            raise MalformedEventError(f"{name} outside 1..3")
    if batch.size.min() < 0:
        raise MalformedEventError("negative size")
    if batch.timestamp.min() < 0 or not np.isfinite(batch.timestamp).all():
        raise MalformedEventError("negative or non-finite timestamp")


def _as_batch(events: list[PacketEvent]) -> EventBatch:
    return EventBatch(
        timestamp=np.array([e.timestamp for e in events], dtype=np.float64),
        uav_id=np.array([e.uav_id for e in events], dtype=np.uint32),
        subgroup=np.array([int(e.subgroup) for e in events], dtype=np.uint8),
        service=np.array([int(e.service) for e in events], dtype=np.uint8),
        seq=np.array([e.seq for e in events], dtype=np.uint64),
        size=np.array([e.size for e in events], dtype=np.int64),
    )


class SummaryAccumulator:
    """Incremental trace summary; associative, order-insensitive."""

    def __init__(self):
        self._counts = np.zeros((3, 3), dtype=np.int64)
        self._bytes = np.zeros((3, 3), dtype=np.int64)
        self._pending: list[PacketEvent] = []

    def add(self, item: EventBatch | PacketEvent) -> None:
        if isinstance(item, PacketEvent):
            self._pending.append(item)
            if len(self._pending) >= 65536:
                self._flush()
            return
        _accumulate(item, self._counts, self._bytes)

    def _flush(self) -> None:
        if self._pending:
            _accumulate(_as_batch(self._pending), self._counts, self._bytes)
            self._pending.clear()

    def result(self) -> TraceSummary:
        self._flush()
        return TraceSummary.from_arrays(self._counts, self._bytes)


def summarize_trace(events: Iterable[EventBatch | PacketEvent]) -> TraceSummary:
    """Exact per-segment counts and byte sums; single pass, order-insensitive."""
    acc = SummaryAccumulator()
    for item in events:
        acc.add(item)
    return acc.result()


def _accumulate(batch: EventBatch, counts: np.ndarray, size_bytes: np.ndarray):
    _batch_invariants(batch)
    if len(batch) == 0:
        return
    cell = (batch.service.astype(np.int64) - 1) * 3 + (
        batch.subgroup.astype(np.int64) - 1
    )
    counts += np.bincount(cell, minlength=9).reshape(3, 3)
    size_bytes += np.bincount(cell, weights=batch.size, minlength=9).astype(
        np.int64
    ).reshape(3, 3)


def compare_forecast(
    fc: TrafficForecast,
    expected_segments: Matrix3,
    summary: TraceSummary,
) -> ComparisonReport:
    """Per-segment and per-service theory-vs-observation deltas.

    z = (observed - expected) / sqrt(expected) per segment; entries with zero
    expectation are reported as degenerate instead.
    """
    rel_seg, z_seg = [], []
    outliers, degenerate = [], []
    for i in range(3):
        rel_row, z_row = [], []
        for j in range(3):
            exp = expected_segments[i][j]
            obs = summary.counts[i][j]
            if exp > 0.0:
                rel = (obs - exp) / exp
                z = (obs - exp) / math.sqrt(exp)
                rel_row.append(rel)
                z_row.append(z)
                if abs(z) > 4.0:
                    outliers.append((i, j))
            else:
                rel_row.append(None)
                z_row.append(None)
                degenerate.append((i, j))
        rel_seg.append(tuple(rel_row))
        z_seg.append(tuple(z_row))

    obs_counts = summary.count_by_service
    obs_bytes = summary.bytes_by_service
    rel_packets = tuple(
        (obs_counts[i] - fc.packets[i]) / fc.packets[i] if fc.packets[i] > 0 else None
        for i in range(3)
    )
    rel_bytes = tuple(
        (obs_bytes[i] - fc.bytes_by_service[i]) / fc.bytes_by_service[i]
        if fc.bytes_by_service[i] > 0
        else None
        for i in range(3)
    )
    return ComparisonReport(
        expected_segments=expected_segments,
        expected_packets=fc.packets,
        expected_bytes=fc.bytes_by_service,
        observed=summary,
        rel_err_segments=tuple(rel_seg),
        z_segments=tuple(z_seg),
        rel_err_packets=rel_packets,
        rel_err_bytes=rel_bytes,
        outliers=tuple(outliers),
        degenerate=tuple(degenerate),
    )

"""Closed-form traffic model for a multi-service UAV swarm.

Network usage is assumed Pareto-distributed across the swarm. Three service
classes (telemetry, IoT, streaming) crossed with three usage subgroups (poor,
middle, rich) give nine traffic segments. From per-service Pareto shapes,
concentration thresholds, and a single seed rate (telemetry packets/s of a
poor-subgroup UAV), the model derives the population split, the 3x3 share and
rate matrices, aggregate segment rates, and packet/byte forecasts.

All functions here are pure; values are immutable and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

Triple = tuple[float, float, float]
Matrix3 = tuple[Triple, Triple, Triple]

SUM_TOL = 1e-12


class ModelError(ValueError):
    """Invalid input to a model operation."""


class InfeasiblePartitionError(ModelError):
    """Shape/threshold combination yields a negative subgroup fraction."""


class DegenerateSegmentError(ModelError):
    """Rate derivation hit a zero-population or zero-share segment."""


class DegenerateServiceError(ModelError):
    """Share-from-rates division hit a service with zero total rate."""


class ServiceClass(IntEnum):
    """Service subset index; used as the row of every 3x3 matrix."""

    TELEMETRY = 1
    IOT = 2
    STREAMING = 3

    @property
    def row(self) -> int:
        return self.value - 1


class Subgroup(IntEnum):
    """Usage subgroup index (poor = lowest usage); matrix column."""

    POOR = 1
    MIDDLE = 2
    RICH = 3

    @property
    def col(self) -> int:
        return self.value - 1


def _triple(values) -> Triple:
    t = tuple(float(v) for v in values)
    if len(t) != 3:
        raise ModelError(f"expected 3 values, got {len(t)}")
    return t


def _matrix(rows) -> Matrix3:
    m = tuple(_triple(r) for r in rows)
    if len(m) != 3:
        raise ModelError(f"expected 3 rows, got {len(m)}")
    return m


@dataclass(frozen=True)
class ModelParams:
    """Model inputs.

    alpha: per-service Pareto shape, one per service class, each > 1.
    gamma: per-service share of the total transaction rate; positive, sums to 1.
    w_bytes: mean transaction size per service, bytes.
    q_stream: fraction of streaming traffic generated by the rich subgroup.
    q_iot: fraction of IoT traffic generated by the middle+rich subgroups.
    lambda_11: telemetry packet rate of one poor-subgroup UAV, packets/s.
    """

    alpha: Triple
    gamma: Triple
    w_bytes: Triple
    q_stream: float = 0.9
    q_iot: float = 0.9
    lambda_11: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _triple(self.alpha))
        object.__setattr__(self, "gamma", _triple(self.gamma))
        object.__setattr__(self, "w_bytes", _triple(self.w_bytes))
        problems = self.violations()
        if problems:
            raise ModelError("; ".join(problems))

    def violations(self) -> list[str]:
        """Return every violated invariant (empty when valid)."""
        return param_violations(
            self.alpha,
            self.gamma,
            self.w_bytes,
            self.q_stream,
            self.q_iot,
            self.lambda_11,
        )


def param_violations(
    alpha, gamma, w_bytes, q_stream, q_iot, lambda_11
) -> list[str]:
    """Every ModelParams invariant violated by the given raw values.

    Sections passed as None are skipped, so a partially parsed document still
    reports everything checkable.
    """
    out = []
    if alpha is not None:
        for i, a in enumerate(alpha):
            if not a > 1.0:
                out.append(f"alpha must exceed 1 (alpha[{i}] = {a})")
    if gamma is not None:
        for i, g in enumerate(gamma):
            if not g > 0.0:
                out.append(f"gamma must be positive (gamma[{i}] = {g})")
        if abs(sum(gamma) - 1.0) > 1e-9:
            out.append(f"gamma must sum to 1 (sum = {sum(gamma)!r})")
    if w_bytes is not None:
        for i, w in enumerate(w_bytes):
            if w < 0.0:
                out.append(f"w_bytes must be >= 0 (w_bytes[{i}] = {w})")
    if q_stream is not None and not 0.0 < q_stream <= 1.0:
        out.append(f"q_stream must be in (0, 1] (got {q_stream})")
    if q_iot is not None and not 0.0 < q_iot <= 1.0:
        out.append(f"q_iot must be in (0, 1] (got {q_iot})")
    if lambda_11 is not None and not lambda_11 > 0.0:
        out.append(f"lambda_11 must be positive (got {lambda_11})")
    return out


@dataclass(frozen=True)
class SubgroupPartition:
    """Population fractions (poor, middle, rich); sums to 1."""

    f: Triple

    def __post_init__(self):
        object.__setattr__(self, "f", _triple(self.f))
        for j, v in enumerate(self.f):
            if not -SUM_TOL <= v <= 1.0 + SUM_TOL:
                raise ModelError(f"F[{j}] = {v} outside [0, 1]")
        if abs(sum(self.f) - 1.0) > SUM_TOL:
            raise ModelError(f"partition fractions sum to {sum(self.f)!r}, not 1")


@dataclass(frozen=True)
class ShareMatrix:
    """Row-stochastic 3x3 transaction shares; rows services, columns subgroups."""

    beta: Matrix3

    def __post_init__(self):
        object.__setattr__(self, "beta", _matrix(self.beta))
        for i, row in enumerate(self.beta):
            for j, b in enumerate(row):
                if not -1e-9 <= b <= 1.0 + 1e-9:
                    raise ModelError(f"beta[{i}][{j}] = {b} outside [0, 1]")
            if abs(sum(row) - 1.0) > SUM_TOL:
                raise ModelError(f"beta row {i} sums to {sum(row)!r}, not 1")


@dataclass(frozen=True)
class RateMatrix:
    """Per-UAV packet rates (packets/s) for the nine segments."""

    lam: Matrix3

    def __post_init__(self):
        object.__setattr__(self, "lam", _matrix(self.lam))
        for i, row in enumerate(self.lam):
            for j, v in enumerate(row):
                if v < 0.0:
                    raise ModelError(f"lambda[{i}][{j}] = {v} is negative")


@dataclass(frozen=True)
class SegmentRates:
    """Aggregate packet rates: per segment (s_seg) and per service (s_svc)."""

    s_seg: Matrix3
    s_svc: Triple

    def __post_init__(self):
        object.__setattr__(self, "s_seg", _matrix(self.s_seg))
        object.__setattr__(self, "s_svc", _triple(self.s_svc))
        for i in range(3):
            row_sum = sum(self.s_seg[i])
            if abs(row_sum - self.s_svc[i]) > 1e-9 * max(1.0, abs(row_sum)):
                raise ModelError(f"s_svc[{i}] != sum of segment rates")


@dataclass(frozen=True)
class TrafficForecast:
    """Expected packet counts and byte volumes over an experiment."""

    n_uavs: float
    duration_s: float
    packets: Triple
    bytes_by_service: Triple
    total_bytes: float


def lorenz_share(alpha: float, p: float) -> float:
    """Fraction of total usage generated by the bottom-p fraction of UAVs.

    Lorenz curve of a Pareto distribution with shape ``alpha``:
    ``1 - (1 - p) ** ((alpha - 1) / alpha)``.
    """
    if not alpha > 1.0:
        raise ModelError(f"alpha must exceed 1 (got {alpha})")
    if not 0.0 <= p <= 1.0:
        raise ModelError(f"population fraction must be in [0, 1] (got {p})")
    return 1.0 - (1.0 - p) ** ((alpha - 1.0) / alpha)


def alpha_from_gini(gini: float) -> float:
    """Pareto shape matching a Gini coefficient, via G = 1/(2*alpha - 1)."""
    if not 0.0 < gini < 1.0:
        raise ModelError(f"Gini coefficient must be in (0, 1) (got {gini})")
    alpha = (1.0 / gini + 1.0) / 2.0
    if not alpha > 1.0:
        raise ModelError(f"Gini {gini} implies alpha {alpha} <= 1")
    return alpha


def gini_from_alpha(alpha: float) -> float:
    """Inverse of :func:`alpha_from_gini`."""
    if not alpha > 1.0:
        raise ModelError(f"alpha must exceed 1 (got {alpha})")
    return 1.0 / (2.0 * alpha - 1.0)


def partition_subgroups(params: ModelParams) -> SubgroupPartition:
    """Split the population into poor/middle/rich fractions.

    The rich fraction is sized so it generates ``q_stream`` of streaming
    traffic; middle+rich together generate ``q_iot`` of IoT traffic. Raises
    :class:`InfeasiblePartitionError` when the shapes/thresholds would force a
    negative middle fraction.
    """
    a2, a3 = params.alpha[1], params.alpha[2]
    f3 = params.q_stream ** (a3 / (a3 - 1.0))
    c2 = params.q_iot ** (a2 / (a2 - 1.0))
    f2 = c2 - f3
    f1 = 1.0 - c2
    if f2 < 0.0:
        if f2 >= -SUM_TOL:
            f2 = 0.0
        else:
            raise InfeasiblePartitionError(
                f"middle fraction {f2:.6g} < 0: q_iot={params.q_iot}, "
                f"alpha_iot={a2} gives {c2:.6g}, below the rich fraction "
                f"{f3:.6g} from q_stream={params.q_stream}, alpha_stream={a3}"
            )
    return SubgroupPartition((f1, f2, f3))


def frequency_share_matrix(
    params: ModelParams, part: SubgroupPartition
) -> ShareMatrix:
    """Transaction shares from request frequency: Lorenz-curve increments.

    Row i is the usage share of each subgroup under the service's own Pareto
    shape, so every row sums to 1. Shares are computed from the upper-tail
    fractions (F2+F3 and F3) rather than 1-F1-F2, which stays accurate when
    the rich fraction is many orders of magnitude below 1.
    """
    _, f2, f3 = part.f
    tail23 = f2 + f3
    rows = []
    for a in params.alpha:
        e = (a - 1.0) / a
        b1 = 1.0 - tail23**e
        b3 = f3**e
        b2 = max(0.0, tail23**e - b3)
        rows.append((b1, b2, b3))
    return ShareMatrix(tuple(rows))


def derive_rate_matrix(
    params: ModelParams, part: SubgroupPartition, shares: ShareMatrix
) -> RateMatrix:
    """Per-UAV packet rates for all nine segments from the seed rate.

    The telemetry row follows from the seed rate and the telemetry shares;
    the IoT and streaming rows are scaled so each service's aggregate rate is
    proportional to its transaction share gamma.
    """
    b = shares.beta
    f = part.f
    for j, fj in enumerate(f):
        if fj <= 0.0:
            raise DegenerateSegmentError(
                f"subgroup fraction F[{j}] = {fj}: rate derivation divides by it"
            )
    if b[0][0] <= 0.0:
        raise DegenerateSegmentError(
            f"telemetry poor-subgroup share beta[0][0] = {b[0][0]}"
        )
    lam11 = params.lambda_11
    lam1 = (
        lam11,
        lam11 * b[0][1] * f[0] / (b[0][0] * f[1]),
        lam11 * b[0][2] * f[0] / (b[0][0] * f[2]),
    )
    total = lam1[0] * f[0] + lam1[1] * f[1] + lam1[2] * f[2]
    g = params.gamma
    rows = [lam1]
    for i in (1, 2):
        rows.append(tuple(g[i] * b[i][j] / (g[0] * f[j]) * total for j in range(3)))
    return RateMatrix(tuple(rows))


def segment_rates(
    n_uavs: float, part: SubgroupPartition, rates: RateMatrix
) -> SegmentRates:
    """Aggregate packet rates over a swarm of ``n_uavs``."""
    if n_uavs < 0:
        raise ModelError(f"population count must be >= 0 (got {n_uavs})")
    s_seg = tuple(
        tuple(part.f[j] * n_uavs * rates.lam[i][j] for j in range(3))
        for i in range(3)
    )
    s_svc = tuple(sum(row) for row in s_seg)
    return SegmentRates(s_seg, s_svc)


def rate_share_matrix(seg: SegmentRates) -> ShareMatrix:
    """Transaction shares recovered from aggregate rates (per-row division)."""
    rows = []
    for i in range(3):
        if seg.s_svc[i] <= 0.0:
            raise DegenerateServiceError(
                f"service {i + 1} has zero total rate; shares undefined"
            )
        rows.append(tuple(seg.s_seg[i][j] / seg.s_svc[i] for j in range(3)))
    return ShareMatrix(tuple(rows))


def derive_model(
    params: ModelParams,
) -> tuple[SubgroupPartition, ShareMatrix, RateMatrix]:
    """Run the partition -> shares -> rates pipeline in one call."""
    part = partition_subgroups(params)
    shares = frequency_share_matrix(params, part)
    rates = derive_rate_matrix(params, part, shares)
    return part, shares, rates


def forecast(
    n_uavs: float,
    duration_s: float,
    params: ModelParams,
    part: SubgroupPartition,
    rates: RateMatrix,
) -> TrafficForecast:
    """Expected packets and bytes per service over ``duration_s`` seconds."""
    if n_uavs < 0:
        raise ModelError(f"population count must be >= 0 (got {n_uavs})")
    if duration_s < 0:
        raise ModelError(f"duration must be >= 0 (got {duration_s})")
    seg = segment_rates(n_uavs, part, rates)
    packets = tuple(duration_s * s for s in seg.s_svc)
    byte_sizes = tuple(params.w_bytes[i] * packets[i] for i in range(3))
    return TrafficForecast(
        n_uavs=float(n_uavs),
        duration_s=float(duration_s),
        packets=packets,
        bytes_by_service=byte_sizes,
        total_bytes=math.fsum(byte_sizes),
    )

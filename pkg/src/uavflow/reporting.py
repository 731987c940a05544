"""Report payloads (JSON/CSV), text tables, and run manifests."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

from .model import (
    RateMatrix,
    SegmentRates,
    ShareMatrix,
    SubgroupPartition,
    TrafficForecast,
)
from .scenario import ScenarioConfig
from .simulator import ComparisonReport, TraceSummary, UavAssignment

SERVICE_LABELS = ("telemetry", "iot", "streaming")
SUBGROUP_LABELS = ("poor", "middle", "rich")


def file_digest(path) -> str:
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path


def write_text(path, text) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def format_matrix(title: str, rows, fmt: str = "{:>14.6g}") -> str:
    """Service-by-subgroup table as aligned text."""
    out = [title]
    header = " " * 11 + "".join(f"{label:>14}" for label in SUBGROUP_LABELS)
    out.append(header)
    for label, row in zip(SERVICE_LABELS, rows):
        out.append(f"{label:<11}" + "".join(fmt.format(v) for v in row))
    return "\n".join(out)


def format_triple(title: str, values, labels=SERVICE_LABELS) -> str:
    body = "  ".join(f"{label}={v:.6g}" for label, v in zip(labels, values))
    return f"{title}  {body}"


def forecast_payload(
    config: ScenarioConfig,
    digest: str | None,
    part: SubgroupPartition,
    shares: ShareMatrix,
    rates: RateMatrix,
    seg: SegmentRates,
    fc: TrafficForecast,
) -> dict:
    return {
        "scenario": config.name,
        "scenario_digest": digest,
        "n_uavs": config.n_uavs,
        "duration_s": config.duration_s,
        "log_scale": True,  # hint: values span decades, plot on log axes
        "services": list(SERVICE_LABELS),
        "subgroups": list(SUBGROUP_LABELS),
        "subgroup_fractions": list(part.f),
        "share_matrix": [list(r) for r in shares.beta],
        "rate_matrix": [list(r) for r in rates.lam],
        "segment_rates": [list(r) for r in seg.s_seg],
        "service_rates": list(seg.s_svc),
        "packets_by_service": list(fc.packets),
        "bytes_by_service": list(fc.bytes_by_service),
        "total_bytes": fc.total_bytes,
    }


def forecast_csv(fc: TrafficForecast) -> str:
    lines = ["service,packets,bytes"]
    for i, label in enumerate(SERVICE_LABELS):
        lines.append(f"{label},{fc.packets[i]!r},{fc.bytes_by_service[i]!r}")
    return "\n".join(lines) + "\n"


def summary_payload(
    config: ScenarioConfig,
    digest: str,
    seed: int,
    assignment: UavAssignment,
    summary: TraceSummary,
) -> dict:
    return {
        "scenario": config.name,
        "scenario_digest": digest,
        "seed": seed,
        "n_uavs": config.n_uavs,
        "duration_s": config.duration_s,
        "subgroup_counts": list(assignment.counts),
        "services": list(SERVICE_LABELS),
        "subgroups": list(SUBGROUP_LABELS),
        "counts": [list(r) for r in summary.counts],
        "size_bytes": [list(r) for r in summary.size_bytes],
        "count_by_service": list(summary.count_by_service),
        "bytes_by_service": list(summary.bytes_by_service),
        "total_count": summary.total_count,
        "total_bytes": summary.total_bytes,
    }


def parse_summary_payload(payload: dict) -> TraceSummary:
    try:
        counts = tuple(tuple(int(v) for v in row) for row in payload["counts"])
        size_bytes = tuple(
            tuple(int(v) for v in row) for row in payload["size_bytes"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"summary file is missing count matrices: {e}") from e
    return TraceSummary(counts=counts, size_bytes=size_bytes)


def comparison_payload(report: ComparisonReport, digest: str | None) -> dict:
    return {
        "scenario_digest": digest,
        "log_scale": True,
        "services": list(SERVICE_LABELS),
        "subgroups": list(SUBGROUP_LABELS),
        "expected_segments": [list(r) for r in report.expected_segments],
        "observed_segments": [list(r) for r in report.observed.counts],
        "z_segments": [list(r) for r in report.z_segments],
        "rel_err_segments": [list(r) for r in report.rel_err_segments],
        "expected_packets": list(report.expected_packets),
        "observed_packets": list(report.observed.count_by_service),
        "rel_err_packets": list(report.rel_err_packets),
        "expected_bytes": list(report.expected_bytes),
        "observed_bytes": list(report.observed.bytes_by_service),
        "rel_err_bytes": list(report.rel_err_bytes),
        "outliers": [list(t) for t in report.outliers],
        "degenerate_segments": [list(t) for t in report.degenerate],
    }


def comparison_csv(report: ComparisonReport) -> str:
    lines = ["service,metric,theory,simulated,rel_err"]
    for i, label in enumerate(SERVICE_LABELS):
        rel = report.rel_err_packets[i]
        lines.append(
            f"{label},packets,{report.expected_packets[i]!r},"
            f"{report.observed.count_by_service[i]},"
            f"{'' if rel is None else repr(rel)}"
        )
    for i, label in enumerate(SERVICE_LABELS):
        rel = report.rel_err_bytes[i]
        lines.append(
            f"{label},bytes,{report.expected_bytes[i]!r},"
            f"{report.observed.bytes_by_service[i]},"
            f"{'' if rel is None else repr(rel)}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class RunManifest:
    """Provenance for one artifact-producing command."""

    command: str
    scenario_digest: str | None
    seed: int | None
    version: str
    outputs: list
    wall_s: float
    created_utc: str

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "scenario_digest": self.scenario_digest,
            "seed": self.seed,
            "version": self.version,
            "outputs": [str(p) for p in self.outputs],
            "wall_s": self.wall_s,
            "created_utc": self.created_utc,
        }


def write_manifest(
    outdir,
    command: str,
    *,
    digest: str | None,
    seed: int | None,
    version: str,
    outputs,
    wall_s: float,
) -> Path:
    manifest = RunManifest(
        command=command,
        scenario_digest=digest,
        seed=seed,
        version=version,
        outputs=[str(Path(p).name) for p in outputs],
        wall_s=wall_s,
        created_utc=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )
    return write_json(Path(outdir) / f"manifest_{command}.json", manifest.to_dict())

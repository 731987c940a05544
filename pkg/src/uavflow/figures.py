"""Bar-chart rendering for forecast and comparison reports.

Figures go next to the delimited output files. Packets and byte volumes span
several decades across services, so axes default to log scale whenever every
plotted value is positive. matplotlib is imported lazily so the library core
works without a plotting stack loaded.
"""

from __future__ import annotations

from pathlib import Path

from .model import TrafficForecast
from .simulator import ComparisonReport

SERVICE_LABELS = ("telemetry", "IoT", "streaming")


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _bar_panel(ax, values, title, ylabel):
    x = range(len(SERVICE_LABELS))
    ax.bar(x, values, color=("#4c72b0", "#dd8452", "#55a868"), width=0.6)
    ax.set_xticks(list(x), SERVICE_LABELS)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    if all(v > 0 for v in values):
        ax.set_yscale("log")
    ax.grid(axis="y", alpha=0.3)


def render_forecast_figures(fc: TrafficForecast, outdir) -> list[Path]:
    plt = _plt()
    outdir = Path(outdir)
    paths = []
    for values, title, ylabel, name in (
        (fc.packets, "Expected packets by service", "packets", "packets_by_service.png"),
        (fc.bytes_by_service, "Expected traffic volume by service", "bytes", "bytes_by_service.png"),
    ):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        _bar_panel(ax, values, title, ylabel)
        fig.tight_layout()
        path = outdir / name
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _grouped_panel(ax, theory, observed, title, ylabel):
    x = range(len(SERVICE_LABELS))
    width = 0.38
    ax.bar([i - width / 2 for i in x], theory, width, label="theory", color="#4c72b0")
    ax.bar([i + width / 2 for i in x], observed, width, label="simulated", color="#dd8452")
    ax.set_xticks(list(x), SERVICE_LABELS)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    if all(v > 0 for v in (*theory, *observed)):
        ax.set_yscale("log")
    ax.legend(frameon=False)
    ax.grid(axis="y", alpha=0.3)


def render_comparison_figures(report: ComparisonReport, outdir) -> list[Path]:
    plt = _plt()
    outdir = Path(outdir)
    paths = []
    panels = (
        (
            report.expected_packets,
            report.observed.count_by_service,
            "Packets: theory vs simulation",
            "packets",
            "compare_packets.png",
        ),
        (
            report.expected_bytes,
            report.observed.bytes_by_service,
            "Traffic volume: theory vs simulation",
            "bytes",
            "compare_bytes.png",
        ),
    )
    for theory, observed, title, ylabel, name in panels:
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        _grouped_panel(ax, theory, observed, title, ylabel)
        fig.tight_layout()
        path = outdir / name
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths

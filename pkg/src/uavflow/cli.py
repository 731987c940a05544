"""Command-line entry point.

Subcommands: ``preset``, ``forecast``, ``simulate``, ``compare``, ``replay``,
``sink``. Commands that write artifacts place a manifest next to them; when
``--out DIR`` is given, ``forecast`` and ``compare`` also render bar-chart
figures alongside the JSON/CSV files. Exit codes: 0 success, 2 validation
error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import __version__
from .loadgen import (
    CodecError,
    PacingError,
    parse_hostport,
    replay_trace,
    run_sink,
)
from .model import (
    ModelError,
    derive_model,
    forecast,
    segment_rates,
)
from .reporting import (
    SERVICE_LABELS,
    comparison_csv,
    comparison_payload,
    file_digest,
    forecast_csv,
    forecast_payload,
    format_matrix,
    format_triple,
    parse_summary_payload,
    summary_payload,
    write_json,
    write_manifest,
    write_text,
)
from .scenario import ScenarioError, load_scenario, preset_document
from .simulator import (
    CapacityError,
    MalformedEventError,
    SummaryAccumulator,
    assign_uavs,
    compare_forecast,
    expected_segment_counts,
    generate_events,
)
from .traceio import read_trace, write_trace


class DigestMismatchError(ValueError):
    """Summary was produced from a different scenario file."""


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_seed(config, seed):
    if seed is None:
        return config
    return dataclasses.replace(config, seed=seed)


def cmd_preset(args) -> int:
    t0 = time.perf_counter()
    document = preset_document(args.which)
    out = _outdir(args)
    if out is None:
        sys.stdout.write(document)
        return 0
    path = out / f"scenario_{args.which.upper()}.json"
    write_text(path, document)
    print(f"wrote {path}")
    write_manifest(
        out,
        "preset",
        digest=file_digest(path),
        seed=None,
        version=__version__,
        outputs=[path],
        wall_s=time.perf_counter() - t0,
    )
    return 0


def _print_forecast(config, part, shares, rates, seg, fc) -> None:
    print(f"scenario: {config.name}  (N={config.n_uavs}, T={config.duration_s}s)")
    print(format_triple("subgroup fractions F:", part.f, ("poor", "middle", "rich")))
    print(format_matrix("share matrix beta:", shares.beta))
    print(format_matrix("per-UAV rates lambda (pkt/s):", rates.lam))
    print(format_matrix("aggregate segment rates (pkt/s):", seg.s_seg))
    print(format_triple("service rates (pkt/s):", seg.s_svc))
    print(format_triple("expected packets:", fc.packets))
    print(format_triple("expected bytes:", fc.bytes_by_service))
    print(f"total bytes: {fc.total_bytes:.6g}")


def cmd_forecast(args) -> int:
    t0 = time.perf_counter()
    config = load_scenario(args.scenario)
    digest = file_digest(args.scenario)
    part, shares, rates = derive_model(config.model)
    seg = segment_rates(config.n_uavs, part, rates)
    fc = forecast(config.n_uavs, config.duration_s, config.model, part, rates)
    _print_forecast(config, part, shares, rates, seg, fc)

    payload = forecast_payload(config, digest, part, shares, rates, seg, fc)
    outputs = []
    if args.json:
        outputs.append(write_json(args.json, payload))
    if args.csv:
        outputs.append(write_text(args.csv, forecast_csv(fc)))
    out = _outdir(args)
    if out is not None:
        outputs.append(write_json(out / "forecast.json", payload))
        outputs.append(write_text(out / "forecast.csv", forecast_csv(fc)))
        from .figures import render_forecast_figures

        outputs.extend(render_forecast_figures(fc, out))
        write_manifest(
            out,
            "forecast",
            digest=digest,
            seed=config.seed,
            version=__version__,
            outputs=outputs,
            wall_s=time.perf_counter() - t0,
        )
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    config = _apply_seed(load_scenario(args.scenario), args.seed)
    digest = file_digest(args.scenario)
    out = _outdir(args)
    trace_path = args.trace
    if trace_path is None:
        if out is None:
            print(
                "error: simulate needs --trace PATH or --out DIR", file=sys.stderr
            )
            return 2
        trace_path = out / "trace.csv.gz"
    part, shares, rates = derive_model(config.model)
    assignment = assign_uavs(config.n_uavs, part)

    acc = SummaryAccumulator()

    def tee(batches):
        for batch in batches:
            acc.add(batch)
            yield batch

    events = generate_events(
        config, part, rates, assignment, threads=args.threads
    )
    n_events = write_trace(trace_path, tee(events))
    summary = acc.result()
    payload = summary_payload(config, digest, config.seed, assignment, summary)
    summary_path = args.summary
    if summary_path is None and out is not None:
        summary_path = out / "summary.json"
    outputs = [Path(trace_path)]
    if summary_path is not None:
        outputs.append(write_json(summary_path, payload))
    print(
        f"simulated {n_events} events -> {trace_path}"
        + (f" (summary: {summary_path})" if summary_path else "")
    )
    print(format_matrix("observed packets per segment:", summary.counts, "{:>14d}"))
    if out is not None:
        write_manifest(
            out,
            "simulate",
            digest=digest,
            seed=config.seed,
            version=__version__,
            outputs=outputs,
            wall_s=time.perf_counter() - t0,
        )
    return 0


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    config = load_scenario(args.scenario)
    digest = file_digest(args.scenario)
    with open(args.summary, encoding="utf-8") as f:
        payload_in = json.load(f)
    recorded = payload_in.get("scenario_digest")
    if recorded != digest:
        raise DigestMismatchError(
            f"summary was produced from scenario digest {recorded}, but "
            f"{args.scenario} has digest {digest}"
        )
    summary = parse_summary_payload(payload_in)
    part, shares, rates = derive_model(config.model)
    assignment = assign_uavs(config.n_uavs, part)
    expected = expected_segment_counts(assignment, config.duration_s, rates)
    fc = forecast(config.n_uavs, config.duration_s, config.model, part, rates)
    report = compare_forecast(fc, expected, summary)

    print(f"scenario: {config.name}  digest ok")
    print("service      theory_packets  sim_packets     theory_bytes    sim_bytes")
    for i, label in enumerate(SERVICE_LABELS):
        print(
            f"{label:<12} {report.expected_packets[i]:>15.6g} "
            f"{report.observed.count_by_service[i]:>12d} "
            f"{report.expected_bytes[i]:>16.6g} "
            f"{report.observed.bytes_by_service[i]:>12d}"
        )
    worst = max(
        (abs(z) for row in report.z_segments for z in row if z is not None),
        default=0.0,
    )
    print(f"worst |z| across segments: {worst:.3f}")
    if report.outliers:
        print(f"outliers (|z| > 4): {list(report.outliers)}")

    payload = comparison_payload(report, digest)
    outputs = []
    if args.json:
        outputs.append(write_json(args.json, payload))
    if args.csv:
        outputs.append(write_text(args.csv, comparison_csv(report)))
    out = _outdir(args)
    if out is not None:
        outputs.append(write_json(out / "comparison.json", payload))
        outputs.append(write_text(out / "comparison.csv", comparison_csv(report)))
        from .figures import render_comparison_figures

        outputs.extend(render_comparison_figures(report, out))
        write_manifest(
            out,
            "compare",
            digest=digest,
            seed=payload_in.get("seed"),
            version=__version__,
            outputs=outputs,
            wall_s=time.perf_counter() - t0,
        )
    return 0


def cmd_replay(args) -> int:
    target = parse_hostport(args.target)
    events = read_trace(args.trace)
    stats = replay_trace(
        events,
        target,
        speedup=args.speedup,
        as_fast_as_possible=args.as_fast_as_possible,
    )
    payload = stats.to_dict()
    print(json.dumps(payload, indent=2))
    if args.json:
        write_json(args.json, payload)
    return 0


def cmd_sink(args) -> int:
    bind = parse_hostport(args.bind)
    report = run_sink(bind, args.duration)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2))
    if args.json:
        write_json(args.json, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavflow",
        description="Multi-service UAV traffic model, simulator, and replay tools",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override scenario seed")
    common.add_argument("--json", metavar="PATH", default=None, help="write JSON report")
    common.add_argument("--csv", metavar="PATH", default=None, help="write CSV report")
    common.add_argument("--out", metavar="DIR", default=None, help="output bundle directory")
    common.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker threads (never changes results)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("preset", parents=[common], help="emit a built-in scenario")
    sp.add_argument("which", choices=["A", "B", "a", "b"])
    sp.set_defaults(func=cmd_preset)

    sp = sub.add_parser("forecast", parents=[common], help="closed-form traffic forecast")
    sp.add_argument("scenario", help="scenario JSON file")
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("simulate", parents=[common], help="generate a packet trace")
    sp.add_argument("scenario", help="scenario JSON file")
    sp.add_argument("--trace", metavar="PATH", default=None, help="trace output (.csv or .csv.gz)")
    sp.add_argument("--summary", metavar="PATH", default=None, help="summary JSON output")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", parents=[common], help="theory vs simulation report")
    sp.add_argument("scenario", help="scenario JSON file")
    sp.add_argument("summary", help="summary JSON from simulate")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("replay", parents=[common], help="replay a trace as UDP datagrams")
    sp.add_argument("trace", help="trace file")
    sp.add_argument("--target", required=True, metavar="HOST:PORT")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--speedup", type=float, default=1.0, metavar="X")
    group.add_argument("--as-fast-as-possible", action="store_true")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("sink", parents=[common], help="collect replayed datagrams")
    sp.add_argument("--bind", required=True, metavar="HOST:PORT")
    sp.add_argument("--duration", type=float, required=True, metavar="SECONDS")
    sp.set_defaults(func=cmd_sink)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ModelError, DigestMismatchError, MalformedEventError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CapacityError, PacingError, CodecError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

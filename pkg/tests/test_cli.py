"""End-to-end command behavior, exit codes, and artifact layout."""

import json

import pytest

from uavflow.cli import main
from uavflow.scenario import parse_scenario, preset


@pytest.fixture
def scenario_file(tmp_path):
    """Preset-B model at a small population for fast runs."""
    rc = main(["preset", "B", "--out", str(tmp_path)])
    assert rc == 0
    path = tmp_path / "scenario_B.json"
    doc = json.loads(path.read_text())
    doc["n_uavs"] = 40
    doc["duration_s"] = 3.0
    small = tmp_path / "small.json"
    small.write_text(json.dumps(doc, indent=2))
    return small


class TestPreset:
    def test_stdout_document_parses(self, capsys):
        assert main(["preset", "A"]) == 0
        doc = capsys.readouterr().out
        assert parse_scenario(doc) == preset("A")

    def test_written_file_with_manifest(self, tmp_path):
        assert main(["preset", "B", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "scenario_B.json").exists()
        manifest = json.loads((tmp_path / "manifest_preset.json").read_text())
        assert manifest["outputs"] == ["scenario_B.json"]


class TestForecast:
    def test_preset_b_orderings(self, tmp_path, capsys):
        main(["preset", "B", "--out", str(tmp_path)])
        rc = main(["forecast", str(tmp_path / "scenario_B.json"), "--out", str(tmp_path / "fc")])
        assert rc == 0
        payload = json.loads((tmp_path / "fc" / "forecast.json").read_text())
        p = payload["packets_by_service"]
        d = payload["bytes_by_service"]
        assert p[0] > p[1] > p[2]
        assert d[2] > d[1] > d[0]
        assert payload["log_scale"] is True
        for name in (
            "forecast.csv",
            "packets_by_service.png",
            "bytes_by_service.png",
            "manifest_forecast.json",
        ):
            assert (tmp_path / "fc" / name).exists()
        # figures are real PNGs
        png = (tmp_path / "fc" / "packets_by_service.png").read_bytes()
        assert png[:8] == b"\x89PNG\r\n\x1a\n"

    def test_zero_duration_zero_forecast(self, tmp_path):
        main(["preset", "B", "--out", str(tmp_path)])
        doc = json.loads((tmp_path / "scenario_B.json").read_text())
        doc["duration_s"] = 0
        zero = tmp_path / "zero.json"
        zero.write_text(json.dumps(doc))
        rc = main(["forecast", str(zero), "--json", str(tmp_path / "z.json")])
        assert rc == 0
        payload = json.loads((tmp_path / "z.json").read_text())
        assert payload["packets_by_service"] == [0.0, 0.0, 0.0]
        assert payload["total_bytes"] == 0.0

    def test_invalid_scenario_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n_uavs": 5}')
        assert main(["forecast", str(bad)]) == 2

    def test_missing_file_exit_3(self, tmp_path):
        assert main(["forecast", str(tmp_path / "nope.json")]) == 3


class TestSimulate:
    def test_zero_population_header_only(self, tmp_path):
        main(["preset", "B", "--out", str(tmp_path)])
        doc = json.loads((tmp_path / "scenario_B.json").read_text())
        doc["n_uavs"] = 0
        empty = tmp_path / "empty.json"
        empty.write_text(json.dumps(doc))
        trace = tmp_path / "trace.csv"
        rc = main(["simulate", str(empty), "--trace", str(trace)])
        assert rc == 0
        assert trace.read_text().count("\n") == 1  # header only

    def test_deterministic_across_runs_and_threads(self, scenario_file, tmp_path):
        paths = [tmp_path / f"t{k}.csv.gz" for k in range(3)]
        for path, threads in zip(paths, ("1", "4", "4")):
            rc = main(
                [
                    "simulate",
                    str(scenario_file),
                    "--trace",
                    str(path),
                    "--threads",
                    threads,
                ]
            )
            assert rc == 0
        blobs = [p.read_bytes() for p in paths]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_seed_override_changes_trace(self, scenario_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", str(scenario_file), "--trace", str(a)])
        main(["simulate", str(scenario_file), "--trace", str(b), "--seed", "77"])
        assert a.read_bytes() != b.read_bytes()

    def test_out_bundle(self, scenario_file, tmp_path):
        out = tmp_path / "bundle"
        rc = main(["simulate", str(scenario_file), "--out", str(out)])
        assert rc == 0
        assert (out / "trace.csv.gz").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["total_count"] > 0
        manifest = json.loads((out / "manifest_simulate.json").read_text())
        assert manifest["scenario_digest"] == summary["scenario_digest"]

    def test_capacity_error_exit_3(self, tmp_path):
        main(["preset", "B", "--out", str(tmp_path)])
        doc = json.loads((tmp_path / "scenario_B.json").read_text())
        doc["n_uavs"] = 1_000_000
        doc["duration_s"] = 100_000.0
        huge = tmp_path / "huge.json"
        huge.write_text(json.dumps(doc))
        rc = main(["simulate", str(huge), "--trace", str(tmp_path / "t.csv")])
        assert rc == 3

    def test_requires_destination(self, scenario_file):
        assert main(["simulate", str(scenario_file)]) == 2


class TestCompare:
    def test_round_trip(self, scenario_file, tmp_path):
        out = tmp_path / "bundle"
        main(["simulate", str(scenario_file), "--out", str(out)])
        cmp_dir = tmp_path / "cmp"
        rc = main(
            [
                "compare",
                str(scenario_file),
                str(out / "summary.json"),
                "--out",
                str(cmp_dir),
            ]
        )
        assert rc == 0
        payload = json.loads((cmp_dir / "comparison.json").read_text())
        assert payload["outliers"] == []
        for name in (
            "comparison.csv",
            "compare_packets.png",
            "compare_bytes.png",
            "manifest_compare.json",
        ):
            assert (cmp_dir / name).exists()

    def test_digest_mismatch_exit_2(self, scenario_file, tmp_path):
        out = tmp_path / "bundle"
        main(["simulate", str(scenario_file), "--out", str(out)])
        doc = json.loads(scenario_file.read_text())
        doc["seed"] = 4242
        drifted = tmp_path / "drifted.json"
        drifted.write_text(json.dumps(doc))
        rc = main(["compare", str(drifted), str(out / "summary.json")])
        assert rc == 2


class TestReplaySinkCli:
    def test_sink_zero_traffic(self, capsys):
        rc = main(["sink", "--bind", "127.0.0.1:0", "--duration", "0.2"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["total_received"] == 0

    def test_replay_empty_trace(self, tmp_path, capsys):
        from uavflow.traceio import TRACE_HEADER

        trace = tmp_path / "empty.csv"
        trace.write_text(TRACE_HEADER + "\n")
        rc = main(
            [
                "replay",
                str(trace),
                "--target",
                "127.0.0.1:45001",
                "--as-fast-as-possible",
            ]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["total_sent"] == 0

"""End-to-end command flows, run in process through main(argv).

One tiny two-day population feeds every happy-path assertion; error
paths get their own throwaway inputs. Exit codes: 0 ok, 1 data error,
2 usage error.
"""

import csv
import json
from pathlib import Path
from types import SimpleNamespace

import pytest

from tfmatch import __version__
from tfmatch.cli import main
from tfmatch.serialize import read_profiles_csv, read_ranked_csv


def run(*argv: str) -> int:
    return main(list(argv))


def _read_rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory) -> SimpleNamespace:
    """synth -> ingest -> match -> eval -> noise -> export -> report."""
    root = tmp_path_factory.mktemp("cli")
    pop = root / "pop"
    assert (
        run(
            "synth",
            "--entities", "10",
            "--domains", "2",
            "--multi-domain-fraction", "1.0",
            "--events-min", "30",
            "--events-max", "80",
            "--gap-location-min", "8",
            "--gap-location-max", "30",
            "--days", "2",
            "--seed", "11",
            "-o", str(pop),
        )
        == 0
    )

    ingest = root / "ingest"
    assert run("ingest", "--in", str(pop), "--day", "0", "-o", str(ingest)) == 0

    match = root / "match"
    assert run("match", "--in", str(pop), "--day", "0", "-o", str(match)) == 0

    evals = []
    for day in (0, 1):
        day_match = root / f"match_day{day}"
        assert (
            run("match", "--in", str(pop), "--day", str(day), "-o", str(day_match)) == 0
        )
        day_eval = root / f"eval_day{day}"
        assert (
            run(
                "eval",
                "--ranked", str(day_match / "ranked.csv"),
                "--truth", str(pop / "truth.csv"),
                "--profiles", str(day_match / "profiles.csv"),
                "-o", str(day_eval),
            )
            == 0
        )
        evals.append(day_eval)

    noise = root / "noise"
    assert (
        run(
            "noise",
            "--in", str(pop),
            "--day", "0",
            "--noise-sigma-seconds", "0",
            "--noise-seed", "5",
            "-o", str(noise),
        )
        == 0
    )

    export = root / "export"
    assert run("export-tgnn", "--in", str(pop), "--days", "0-1", "-o", str(export)) == 0

    # Any multi-domain entity works for drift; truth is sorted, take the first.
    by_entity: dict[str, list[str]] = {}
    for row in _read_rows(pop / "truth.csv"):
        by_entity.setdefault(row["entity_id"], []).append(
            f"{row['domain_id']}/{row['profile_id']}"
        )
    pair = next(refs for refs in by_entity.values() if len(refs) == 2)

    report = root / "report"
    assert (
        run(
            "report",
            "--inputs", str(evals[0] / "report.json"), str(evals[1] / "report.json"),
            "--drift-pair", ",".join(pair),
            "--drift-in", str(pop),
            "--drift-days", "0-1",
            "-o", str(report),
        )
        == 0
    )

    return SimpleNamespace(
        root=root,
        pop=pop,
        ingest=ingest,
        match=match,
        evals=evals,
        noise=noise,
        export=export,
        report=report,
    )


def test_synth_writes_population_with_manifest(pipeline):
    manifest = json.loads((pipeline.pop / "manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["config"]["seed"] == 11
    assert manifest["config"]["entities"] == 10
    assert set(manifest["outputs"]) == {"events.csv", "truth.csv"}
    # fraction 1.0: every entity owns one profile per domain
    assert len(_read_rows(pipeline.pop / "truth.csv")) == 20


def test_ingest_keeps_only_the_requested_day(pipeline):
    summary = json.loads((pipeline.ingest / "summary.json").read_text())
    assert summary["day"] == 0
    assert summary["profiles"] == 20
    assert summary["true_pairs"] == 10
    for row in _read_rows(pipeline.ingest / "events.csv"):
        assert 0.0 <= float(row["timestamp"]) < 86400.0


def test_match_ranks_every_cross_domain_pair(pipeline):
    volumes = read_profiles_csv(pipeline.match / "profiles.csv")
    per_domain: dict[str, int] = {}
    for profile in volumes:
        per_domain[profile.domain_id] = per_domain.get(profile.domain_id, 0) + 1
    expected_pairs = 1
    for count in per_domain.values():
        expected_pairs *= count

    scores = read_ranked_csv(pipeline.match / "ranked.csv")
    assert len(scores) == expected_pairs
    ranks = [int(row["rank"]) for row in _read_rows(pipeline.match / "ranked.csv")]
    assert ranks == list(range(1, expected_pairs + 1))
    assert all(s.left.domain_id != s.right.domain_id for s in scores)
    assert all(s.composite <= t.composite for s, t in zip(scores, scores[1:]))


def test_eval_writes_report_and_plot_tables(pipeline):
    out = pipeline.evals[0]
    report = json.loads((out / "report.json").read_text())
    assert 0.0 <= report["auc"] <= 1.0
    assert "10" in report["precision_top"]
    assert {"1", "5", "10"} <= set(report["precision_at_k"])
    assert report["conventions"]
    for name in ("roc.csv", "precision_curve.csv", "precision_at_k.csv", "pid.csv"):
        assert (out / name).exists(), name
    roc = _read_rows(out / "roc.csv")
    assert float(roc[-1]["fpr"]) == 1.0 and float(roc[-1]["tpr"]) == 1.0


def test_zero_sigma_noise_reproduces_the_clean_ranking(pipeline):
    clean = (pipeline.match / "ranked.csv").read_bytes()
    noisy = (pipeline.noise / "ranked.csv").read_bytes()
    assert noisy == clean


def test_export_tgnn_writes_day_directories(pipeline):
    manifest = json.loads((pipeline.export / "feature_manifest.json").read_text())
    assert manifest["node_id"] == "domain_id/local_id"
    for day in ("day_000", "day_001"):
        day_dir = pipeline.export / day
        nodes = _read_rows(day_dir / "nodes.csv")
        assert len(nodes) == 20
        assert set(manifest["node_columns"]) <= set(nodes[0])
        for name in manifest["edge_files"]:
            assert (day_dir / name).exists(), name


def test_report_aggregates_daily_metrics(pipeline):
    aggregate = json.loads((pipeline.report / "aggregate.json").read_text())
    assert aggregate["days"] == 2
    auc = aggregate["metrics"]["auc"]
    assert auc["days"] == 2
    assert 0.0 <= auc["mean"] <= 1.0
    assert auc["standard_error"] >= 0.0


def test_report_drift_series_starts_at_zero(pipeline):
    rows = _read_rows(pipeline.report / "drift.csv")
    assert [row["offset_days"] for row in rows] == ["0", "1"]
    assert rows[0]["delta_ks"] == "0.0"
    assert 0.0 <= float(rows[1]["delta_ks"]) <= 1.0


def test_rerunning_match_is_byte_identical(pipeline, tmp_path):
    again = tmp_path / "again"
    assert run("match", "--in", str(pipeline.pop), "--day", "0", "-o", str(again)) == 0
    for name in ("ranked.csv", "profiles.csv", "manifest.json"):
        assert (again / name).read_bytes() == (pipeline.match / name).read_bytes(), name


def test_version_flag(capsys):
    assert run("--version") == 0
    assert capsys.readouterr().out.strip() == f"tfmatch {__version__}"


def test_missing_subcommand_is_a_usage_error():
    assert run() == 2


def test_bad_flag_value_is_a_usage_error(tmp_path):
    assert run("synth", "--entities", "ten", "-o", str(tmp_path / "x")) == 2


def test_regal_without_embeddings_is_a_usage_error(pipeline, tmp_path, capsys):
    code = run(
        "match",
        "--in", str(pipeline.pop),
        "--day", "0",
        "--method", "regal",
        "-o", str(tmp_path / "x"),
    )
    assert code == 2
    assert "requires --embeddings" in capsys.readouterr().err


def test_missing_input_path_is_a_usage_error(tmp_path):
    code = run(
        "match", "--in", str(tmp_path / "nope"), "--day", "0", "-o", str(tmp_path / "x")
    )
    assert code == 2


def test_day_without_events_is_a_data_error(pipeline, tmp_path, capsys):
    code = run(
        "match", "--in", str(pipeline.pop), "--day", "99", "-o", str(tmp_path / "x")
    )
    assert code == 1
    assert capsys.readouterr().err.startswith("error:")


def test_infeasible_population_spec_is_a_data_error(tmp_path):
    code = run(
        "synth",
        "--entities", "2",
        "--events-min", "2000",
        "--events-max", "2000",
        "--gap-location-min", "60",
        "--gap-location-max", "60",
        "-o", str(tmp_path / "x"),
    )
    assert code == 1


def test_eval_rejects_malformed_k_list(pipeline, tmp_path):
    code = run(
        "eval",
        "--ranked", str(pipeline.match / "ranked.csv"),
        "--truth", str(pipeline.pop / "truth.csv"),
        "--k", "one,two",
        "-o", str(tmp_path / "x"),
    )
    assert code == 2


def test_drift_pair_requires_events_and_days(pipeline, tmp_path):
    code = run(
        "report",
        "--inputs", str(pipeline.evals[0] / "report.json"),
        "--drift-pair", "a/x,b/y",
        "-o", str(tmp_path / "x"),
    )
    assert code == 2


def test_workers_come_from_the_environment(pipeline, tmp_path, monkeypatch):
    monkeypatch.setenv("TFM_WORKERS", "2")
    out = tmp_path / "env_workers"
    assert run("match", "--in", str(pipeline.pop), "--day", "0", "-o", str(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["workers"] == 2
    assert (out / "ranked.csv").read_bytes() == (
        pipeline.match / "ranked.csv"
    ).read_bytes()


def test_non_integer_worker_env_is_a_usage_error(pipeline, tmp_path, monkeypatch):
    monkeypatch.setenv("TFM_WORKERS", "many")
    code = run(
        "match", "--in", str(pipeline.pop), "--day", "0", "-o", str(tmp_path / "x")
    )
    assert code == 2


def test_synth_config_file_overrides_flags(tmp_path):
    config = tmp_path / "population.cfg"
    config.write_text("entities = 4\nseed = 2\n")
    out = tmp_path / "pop"
    code = run(
        "synth",
        "--entities", "99",
        "--domains", "2",
        "--multi-domain-fraction", "1.0",
        "--events-min", "20",
        "--events-max", "40",
        "--config", str(config),
        "-o", str(out),
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["entities"] == 4
    assert manifest["config"]["seed"] == 2
    assert len(_read_rows(out / "truth.csv")) == 8

import csv
import io
import json
import os
from pathlib import Path

import pytest

from depositlag.cli import main
from depositlag.pipeline import EXIT_DATA, EXIT_IO, EXIT_NETWORK, EXIT_OK, PipelineConfig, run_pipeline
from depositlag.synth import SynthConfig, generate
from tests.conftest import FixtureOAI, three_pages


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    generate(SynthConfig(n_publications=600, seed=7)).write(out)
    return out


def _config(corpus_dir, out, **kw):
    cfg = PipelineConfig(
        registry=corpus_dir / "registry.jsonl",
        repository=corpus_dir / "repository.jsonl",
        repositories=corpus_dir / "repositories.json",
        reader_profiles=corpus_dir / "reader_profiles.jsonl",
        output_dir=out,
        min_repo_count=10,
    )
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def test_full_run_writes_manifest(corpus_dir, tmp_path):
    code, manifest = run_pipeline(_config(corpus_dir, tmp_path / "out"))
    assert code == EXIT_OK and manifest.status == "ok"
    out = tmp_path / "out"
    on_disk = json.loads((out / "manifest.json").read_text())
    assert on_disk["digest"] == manifest.digest
    names = {f["path"] for f in on_disk["files"]}
    for expected in ("links.csv", "accuracy.json", "linked.jsonl", "lag_country.csv", "compliance_country.csv",
                     "lag_repository_single.csv", "repo_profiles_lag.csv", "histogram_w30.csv", "summary.json"):
        assert expected in names
        assert (out / expected).exists()
    lag_rows = list(csv.DictReader(io.StringIO((out / "lag_country.csv").read_text())))
    assert lag_rows and {"group_key", "year", "count", "mean_lag_days"} <= set(lag_rows[0])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["publications"] == 600 and summary["ambiguous_keys"] == 0


def test_rerun_gives_identical_digest(corpus_dir, tmp_path):
    _, first = run_pipeline(_config(corpus_dir, tmp_path / "a"))
    _, second = run_pipeline(_config(corpus_dir, tmp_path / "b", jobs=4))
    assert first.digest == second.digest


def test_parameters_change_digest(corpus_dir, tmp_path):
    _, first = run_pipeline(_config(corpus_dir, tmp_path / "a"))
    _, second = run_pipeline(_config(corpus_dir, tmp_path / "b", cutoff_days=60))
    assert first.digest != second.digest


def test_refuses_to_overwrite_without_force(corpus_dir, tmp_path):
    out = tmp_path / "out"
    assert run_pipeline(_config(corpus_dir, out))[0] == EXIT_OK
    before = (out / "links.csv").read_bytes()
    code, manifest = run_pipeline(_config(corpus_dir, out))
    assert code == EXIT_IO and manifest.failed_stage
    assert (out / "links.csv").read_bytes() == before
    assert run_pipeline(_config(corpus_dir, out, force=True))[0] == EXIT_OK


def test_empty_registry_is_data_failure(corpus_dir, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    out = tmp_path / "out"
    code, manifest = run_pipeline(_config(corpus_dir, out, registry=empty))
    assert code == EXIT_DATA and manifest.failed_stage == "filter"
    assert (out / "rejections.csv.partial").exists()
    assert not (out / "rejections.csv").exists()
    partial = json.loads((out / "manifest.partial.json").read_text())
    assert partial["status"] == "failed" and partial["failed_stage"] == "filter"
    assert not (out / "manifest.json").exists()


def test_missing_input_is_io_failure(corpus_dir, tmp_path):
    code, _ = run_pipeline(_config(corpus_dir, tmp_path / "out", registry=tmp_path / "nope.jsonl"))
    assert code == EXIT_IO and EXIT_IO != EXIT_DATA


def test_unwritable_output_is_io_failure(corpus_dir, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _ = run_pipeline(_config(corpus_dir, blocker / "out"))
    assert code == EXIT_IO


def test_malformed_registry_is_data_failure(corpus_dir, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    code, manifest = run_pipeline(_config(corpus_dir, tmp_path / "out", registry=bad))
    assert code == EXIT_DATA and manifest.failed_stage == "filter"


def test_link_stage_only(corpus_dir, tmp_path):
    out = tmp_path / "out"
    code, manifest = run_pipeline(_config(corpus_dir, out), until="tag-subjects")
    assert code == EXIT_OK
    assert (out / "linked.jsonl").exists() and not (out / "lag_country.csv").exists()


def test_ledger_dates_take_precedence(corpus_dir, tmp_path):
    rec = json.loads((corpus_dir / "repository.jsonl").read_text().splitlines()[0])
    ledger = tmp_path / "ledger.jsonl"
    ledger.write_text(json.dumps({"record_id": rec["record_id"], "first_seen": "2012-06-01", "updates": []}) + "\n")
    scraped = tmp_path / "scraped.csv"
    scraped.write_text("record_id,deposit_date\n")
    out = tmp_path / "out"
    assert run_pipeline(_config(corpus_dir, out, ledger=ledger, scraped=scraped))[0] == EXIT_OK
    rows = {r["record_id"]: r for r in csv.DictReader(io.StringIO((out / "deposit_provenance.csv").read_text()))}
    assert rows[rec["record_id"]]["deposit_date"] == "2012-06-01"
    assert rows[rec["record_id"]]["provenance"] == "LEDGER"


def test_config_file(corpus_dir, tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        f"registry = {corpus_dir / 'registry.jsonl'}\n"
        "repository = corpus/repository.jsonl   # relative to this file\n"
        "cutoff_days = 60\n"
        "caps = 100, 200\n"
        "histogram_widths = 14\n"
    )
    (tmp_path / "corpus").mkdir()
    cfg = PipelineConfig.from_file(cfg_path)
    assert cfg.registry == corpus_dir / "registry.jsonl"
    assert cfg.repository == tmp_path / "corpus" / "repository.jsonl"
    assert (cfg.cutoff_days, cfg.caps, cfg.histogram_widths) == (60, (100, 200), (14,))
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(Exception):
        PipelineConfig.from_file(bad)


def _cli_inputs(corpus_dir):
    return [
        "--registry", str(corpus_dir / "registry.jsonl"),
        "--repository", str(corpus_dir / "repository.jsonl"),
        "--repositories", str(corpus_dir / "repositories.json"),
    ]


def test_cli_synth_then_report(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth", "--n", "300", "--seed", "3", "--out", str(data)]) == EXIT_OK
    assert (data / "ground_truth.csv").exists()
    assert main(["synth", "--n", "300", "--out", str(data)]) == EXIT_IO
    out = tmp_path / "out"
    code = main(["report", *_cli_inputs(data), "--reader-profiles", str(data / "reader_profiles.jsonl"),
                 "--out", str(out), "--min-repo-count", "5", "--stdout", "lag_country.csv"])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert printed == (out / "lag_country.csv").read_text()
    assert (out / "lag_subject.csv").exists() and (out / "compliance_panel.csv").exists()


def test_cli_ingest(corpus_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["ingest", *_cli_inputs(corpus_dir), "--out", str(out)]) == EXIT_OK
    assert len((out / "registry_kept.jsonl").read_text().splitlines()) == 600


def test_cli_link_validate_analyze(corpus_dir, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["link", *_cli_inputs(corpus_dir), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["validate-doi", "--out", str(out), "--stdout"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report == json.loads((out / "accuracy.json").read_text())
    assert main(["analyze", "--out", str(out), "--stdout", "compliance_country.csv"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("group_key,year,likely_fraction")
    assert main(["analyze", "--out", str(out), "--stdout", "nonexistent.csv"]) == EXIT_DATA
    assert main(["analyze", "--out", str(out), "--repositories", str(corpus_dir / "repositories.json")]) == EXIT_OK
    assert (out / "lag_repository_any.csv").exists()


def test_cli_audit_acceptance(corpus_dir, capsys):
    assert main(["audit-acceptance", "--registry", str(corpus_dir / "registry.jsonl"), "--stdout"]) == EXIT_OK
    audit = json.loads(capsys.readouterr().out)
    assert audit["populated"] == audit["equal_to_published"] + audit["later_than_published"] + audit["earlier_than_published"]


def test_cli_harvest(tmp_path):
    with FixtureOAI(three_pages()) as server:
        assert main(["harvest", "--endpoint", server.url, "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "ledger.jsonl").read_text().splitlines()) == 15
    report = json.loads((tmp_path / "harvest_report.json").read_text())
    assert report[0]["completed"] is True


def test_cli_harvest_network_failure(tmp_path):
    assert main(["harvest", "--endpoint", "http://127.0.0.1:9/oai", "--out", str(tmp_path)]) == EXIT_NETWORK


def test_cli_logs_json_lines(corpus_dir, tmp_path, capsys):
    main(["report", *_cli_inputs(corpus_dir), "--out", str(tmp_path / "o"), "--min-repo-count", "5"])
    lines = [l for l in capsys.readouterr().err.splitlines() if l.strip()]
    assert lines and all(json.loads(l)["msg"] for l in lines)

from __future__ import annotations

import json
import subprocess
import sys

import pytest

import tomforge as tf
from tomforge.cli import (
    EXIT_CHECKPOINT,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_OK,
    main,
)
from tomforge.dqn import DqnConfig, DqnPolicy, QNetwork, save_checkpoint


def run_cli(args: list[str], capsys) -> tuple[int, str]:
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out


def test_generate_twice_is_byte_identical(tmp_path, capsys):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    assert main(["generate", "--seed", "7", "--steps", "15", "--out", str(out_a)]) == EXIT_OK
    assert main(["generate", "--seed", "7", "--steps", "15", "--out", str(out_b)]) == EXIT_OK
    assert out_a.read_bytes() == out_b.read_bytes()
    trace = tf.StoryTrace.from_json(out_a.read_text())
    assert len(trace.events) <= 15


def test_generate_then_score_pipeline(tmp_path, capsys):
    trace_path = tmp_path / "trace.json"
    assert main(["generate", "--seed", "3", "--out", str(trace_path)]) == EXIT_OK
    code, out = run_cli(["score", "--trace", str(trace_path)], capsys)
    assert code == EXIT_OK
    report = json.loads(out)
    assert set(report) >= {"composite_h", "has_false_belief", "max_tom_order"}


def test_render_template_from_trace(tmp_path, capsys):
    trace_path = tmp_path / "trace.json"
    main(["generate", "--seed", "4", "--out", str(trace_path)])
    code, out = run_cli(["render", "--trace", str(trace_path), "--mode", "template"], capsys)
    assert code == EXIT_OK
    parsed = tf.parse_rendered(out.strip())
    assert parsed  # every line parses back


def test_dataset_offline_deterministic(tmp_path, capsys):
    out_a = tmp_path / "a" / "corpus.jsonl"
    out_b = tmp_path / "b" / "corpus.jsonl"
    out_a.parent.mkdir()
    out_b.parent.mkdir()
    args = ["dataset", "--count", "8", "--seed", "5", "--render", "template", "--emit-splits"]
    assert main([*args, "--out", str(out_a)]) == EXIT_OK
    capsys.readouterr()
    assert main([*args, "--out", str(out_b)]) == EXIT_OK
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (out_a.parent / "actions.json").exists()
    assert out_a.with_suffix(".stats.json").exists()
    assert out_a.with_suffix(".stats.csv").exists()
    stage1 = out_a.with_suffix(".stage1.jsonl")
    stage2 = out_a.with_suffix(".stage2.jsonl")
    assert stage1.exists() and stage2.exists()
    records = [json.loads(line) for line in out_a.read_text().splitlines()]
    assert len(records) == 8
    assert all(r["hardness_report"]["has_false_belief"] for r in records)
    stage2_records = [json.loads(line) for line in stage2.read_text().splitlines()]
    assert len(stage2_records) == len(records)


def test_validate_reports_json(tmp_path, capsys):
    code, out = run_cli(
        ["validate", "--episodes", "4", "--seed", "2", "--json"], capsys
    )
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["episodes"] == 4
    assert report["verdict"] in ("PASS", "FAIL")


def test_validate_with_checkpoint(tmp_path, capsys):
    ckpt = tmp_path / "p.ckpt"
    config = DqnConfig(hidden_dims=(16, 16))
    save_checkpoint(ckpt, DqnPolicy(QNetwork(hidden_dims=(16, 16))), config)
    code, out = run_cli(
        ["validate", "--episodes", "3", "--checkpoint", str(ckpt), "--json"], capsys
    )
    assert code == EXIT_OK
    assert json.loads(out)["episodes"] == 3


def test_stats_on_generated_corpus(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    main(["dataset", "--count", "6", "--seed", "8", "--out", str(corpus)])
    capsys.readouterr()
    code, out = run_cli(["stats", "--corpus", str(corpus)], capsys)
    assert code == EXIT_OK
    stats = json.loads(out)
    assert stats["records"] == 6


def test_train_smoke_writes_checkpoint_and_log(tmp_path, capsys):
    ckpt = tmp_path / "t.ckpt"
    log = tmp_path / "t.csv"
    config_path = tmp_path / "dqn.json"
    config_path.write_text(json.dumps({
        "hidden_dims": [16, 16], "buffer_size": 500, "batch_size": 32,
    }))
    code, out = run_cli(
        ["train", "--steps", "200", "--seed", "1", "--pool", "small",
         "--dqn-config", str(config_path), "--out", str(ckpt), "--log", str(log)],
        capsys,
    )
    assert code == EXIT_OK
    assert ckpt.exists()
    assert log.read_text().startswith("episode,")
    summary = json.loads(out)
    assert summary["status"] == "completed"


def test_tune_smoke(tmp_path, capsys):
    out = tmp_path / "tuner.json"
    code, _ = run_cli(
        ["tune", "--trials", "1", "--steps-per-trial", "150", "--eval-episodes", "1",
         "--seed", "3", "--pool", "small", "--out", str(out)],
        capsys,
    )
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert len(report["trials"]) == 1


def test_missing_checkpoint_exit_code(capsys):
    code, _ = run_cli(
        ["validate", "--checkpoint", "/nonexistent/x.ckpt", "--episodes", "1"], capsys
    )
    assert code == EXIT_CHECKPOINT


def test_unreadable_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = run_cli(
        ["train", "--steps", "50", "--dqn-config", str(bad), "--out", str(tmp_path / "c")],
        capsys,
    )
    assert code == EXIT_CONFIG


def test_invalid_trace_exit_code(tmp_path, capsys):
    bad = tmp_path / "trace.json"
    bad.write_text('{"hello": 1}')
    code, _ = run_cli(["score", "--trace", str(bad)], capsys)
    assert code == EXIT_DATA


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_help_documents_exit_codes():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "tomforge.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "exit codes" in proc.stdout

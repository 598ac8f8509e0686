from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from perturbkit.attack import attack_sample, build_recipe
from perturbkit.cli import main
from perturbkit.dataset import ClassLabel, DatasetRecord
from perturbkit.goals import GoalConfig
from perturbkit.records import (
    RecordWriter,
    item_to_json_dict,
    render_text,
    result_from_json_dict,
)
from perturbkit.runner import ResultItem, mix

@pytest.fixture()
def one_success(sentiment_model, resources):
    attack = build_recipe("greedy-embedding", sentiment_model, resources, GoalConfig())
    record = DatasetRecord((("text", "a good movie"),), ClassLabel(1))
    result = attack_sample(attack, record, 0, mix(7, 0))
    assert result.kind == "successful"
    return ResultItem(0, mix(7, 0), result)


def test_text_format_brackets_changed_word(one_success):
    rendered = render_text(one_success)
    assert "text:" in rendered
    assert "[[good → " in rendered
    assert rendered.splitlines()[0].startswith("[0] successful")


def test_text_format_skipped_shows_original(sentiment_model, resources):
    attack = build_recipe("greedy-embedding", sentiment_model, resources, GoalConfig())
    record = DatasetRecord((("text", "bad movie"),), ClassLabel(1))
    result = attack_sample(attack, record, 3, mix(7, 3))
    rendered = render_text(ResultItem(3, mix(7, 3), result))
    assert "skipped" in rendered
    assert "bad movie" in rendered


def test_jsonl_round_trip_reconstructs_all_fields(one_success):
    data = json.loads(json.dumps(item_to_json_dict(one_success)))
    rebuilt = result_from_json_dict(data)
    original = one_success.result
    assert rebuilt.kind == original.kind
    assert rebuilt.sample_index == original.sample_index
    assert rebuilt.seed == original.seed
    assert rebuilt.original == original.original
    assert rebuilt.perturbed == original.perturbed
    assert rebuilt.original_output == original.original_output
    assert rebuilt.perturbed_output == original.perturbed_output
    assert rebuilt.score == original.score
    assert rebuilt.model_calls == original.model_calls
    assert rebuilt.cache_hits == original.cache_hits
    assert rebuilt.words_changed == original.words_changed
    assert rebuilt.elapsed_ms == original.elapsed_ms


def test_jsonl_skipped_has_null_perturbed(sentiment_model, resources):
    attack = build_recipe("greedy-embedding", sentiment_model, resources, GoalConfig())
    record = DatasetRecord((("text", "bad movie"),), ClassLabel(1))
    result = attack_sample(attack, record, 1, mix(0, 1))
    data = item_to_json_dict(ResultItem(1, mix(0, 1), result))
    assert data["kind"] == "skipped"
    assert data["perturbed"] is None


def test_jsonl_errored_record():
    data = item_to_json_dict(ResultItem(4, 9, None, error="boom"))
    assert data == {"kind": "errored", "sample_index": 4, "seed": 9, "error": "boom"}


def test_csv_quoting_round_trips(tmp_path, one_success):
    # force a comma into the original text path by writing and re-reading
    stream = io.StringIO()
    writer = RecordWriter(stream, "csv")
    writer.write(one_success)
    rows = list(csv.reader(io.StringIO(stream.getvalue())))
    assert rows[0][0] == "kind"
    assert rows[1][0] == "successful"
    assert rows[1][3] == "a good movie"


def test_record_writer_rejects_unknown_format():
    with pytest.raises(ValueError):
        RecordWriter(io.StringIO(), "yaml")


# -- CLI ------------------------------------------------------------------------


@pytest.fixture()
def cli_flags(assets_dir, sentiment_model_path, tmp_path):
    def flags(**overrides):
        out = tmp_path / overrides.pop("output_name", "out.jsonl")
        base = [
            "attack",
            "--model", f"builtin:lexicon:{sentiment_model_path}",
            "--dataset", str(assets_dir / "demo_reviews.csv"),
            "--input-columns", "text",
            "--output-column", "label",
            "--recipe", "greedy-embedding",
            "--num-examples", "5",
            "--seed", "7",
            "--log-format", "jsonl",
            "--output", str(out),
            "--embedding", str(assets_dir / "toy_embedding.txt"),
            "--stopwords", str(assets_dir / "stopwords.txt"),
            "--pos-lexicon", str(assets_dir / "pos_lexicon.tsv"),
            "--lexicon", str(assets_dir / "toy_synonyms.json"),
        ]
        for key, value in overrides.items():
            base += [f"--{key.replace('_', '-')}", str(value)]
        return base, out

    return flags


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


def test_cli_happy_path(cli_flags, capsys):
    argv, out = cli_flags()
    assert main(argv) == 0
    records = read_jsonl(out)
    assert len(records) == 5
    assert all(r["seed"] == mix(7, r["sample_index"]) for r in records)
    err = capsys.readouterr().err
    assert "attack complete: 5 samples" in err


def test_cli_missing_required_flag_exits_1(capsys):
    assert main(["attack", "--model", "builtin:lexicon:x"]) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_unknown_flag_exits_1(cli_flags, capsys):
    argv, _ = cli_flags()
    assert main(argv + ["--warp-speed", "9"]) == 1


def test_cli_bad_resource_exits_1(cli_flags, capsys):
    argv, _ = cli_flags(embedding="/missing/file.txt")
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_help_exits_0():
    assert main(["--help"]) == 0


def test_cli_list_recipes(capsys):
    assert main(["list-recipes"]) == 0
    out = capsys.readouterr().out
    for recipe in ("greedy-embedding", "pso-lexicon", "beam-embedding"):
        assert recipe in out


def test_cli_text_format_to_stdout(cli_flags, capsys, tmp_path):
    argv, out = cli_flags()
    argv[argv.index("--log-format") + 1] = "text"
    argv.remove("--output")
    argv.remove(str(out))
    assert main(argv) == 0
    captured = capsys.readouterr()
    assert "[0] " in captured.out


def test_cli_cache_size_env_fallback(cli_flags, monkeypatch):
    argv, out = cli_flags()
    monkeypatch.setenv("PERTURB_CACHE_SIZE", "not-a-number")
    assert main(argv) == 1
    monkeypatch.setenv("PERTURB_CACHE_SIZE", "64")
    assert main(argv) == 0


def test_cli_augment_writes_csv(assets_dir, tmp_path, capsys):
    out = tmp_path / "aug.csv"
    argv = [
        "augment",
        "--dataset", str(assets_dir / "demo_reviews.csv"),
        "--input-columns", "text",
        "--output-column", "label",
        "--transformation", "lexicon",
        "--lexicon", str(assets_dir / "toy_synonyms.json"),
        "--per-example", "2",
        "--swap-fraction", "0.4",
        "--seed", "3",
        "--output", str(out),
    ]
    assert main(argv) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["text", "label"]
    assert len(rows) > 10
    labels = {row[1] for row in rows[1:]}
    assert labels <= {"0", "1"}


def test_cli_augment_deterministic(assets_dir, tmp_path):
    def run_once(name):
        out = tmp_path / name
        argv = [
            "augment",
            "--dataset", str(assets_dir / "demo_reviews.csv"),
            "--input-columns", "text",
            "--output-column", "label",
            "--lexicon", str(assets_dir / "toy_synonyms.json"),
            "--seed", "11",
            "--output", str(out),
        ]
        assert main(argv) == 0
        return out.read_bytes()

    assert run_once("a.csv") == run_once("b.csv")


def test_cli_aborted_run_exits_2(cli_flags, monkeypatch):
    import perturbkit.cli as cli_module
    from perturbkit.runner import RunAborted

    def exploding_run(plan, factory, records, sink):
        raise RunAborted("worker slot 0 crashed twice")

    monkeypatch.setattr(cli_module, "run", exploding_run)
    argv, _ = cli_flags()
    assert main(argv) == 2


def test_cli_entry_point_subprocess(cli_flags):
    argv, out = cli_flags(output_name="sub.jsonl")
    proc = subprocess.run(
        [sys.executable, "-m", "perturbkit.cli", *argv],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(read_jsonl(out)) == 5

import csv
import hashlib
import json
import shutil
from pathlib import Path

import pytest

from xferbench.cli import main


def run(*args):
    return main([str(a) for a in args])


def _dir_hash(d: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(d.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(d).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def cli_hub(tmp_path_factory):
    d = tmp_path_factory.mktemp("clihub")
    assert run("synth", "--seed", 42, "--models", 10, "--out", d) == 0
    return d


def test_synth_creates_expected_files(cli_hub):
    assert len(list(cli_hub.glob("*_features.npy"))) == 10
    assert len(list(cli_hub.glob("*_logits.npy"))) == 10
    assert (cli_hub / "manifest.json").is_file()
    assert (cli_hub / "gt.csv").is_file()


def test_synth_bad_range(tmp_path):
    assert run("synth", "--s-low", 5, "--s-high", 1, "--out", tmp_path / "x") == 2


def test_synth_deterministic(tmp_path):
    run("synth", "--seed", 9, "--models", 3, "--n-samples", 200, "--out", tmp_path / "a")
    run("synth", "--seed", 9, "--models", 3, "--n-samples", 200, "--out", tmp_path / "b")
    assert _dir_hash(tmp_path / "a") == _dir_hash(tmp_path / "b")


def test_validate_ok(cli_hub, capsys):
    assert run("validate", "--manifest", cli_hub / "manifest.json") == 0
    out = capsys.readouterr().out
    assert out.count("synth") >= 10


def test_validate_truncated_tensor(cli_hub, tmp_path):
    shutil.copytree(cli_hub, tmp_path / "broken", dirs_exist_ok=True)
    victim = tmp_path / "broken" / "synth00_features.npy"
    victim.write_bytes(victim.read_bytes()[:-8])
    assert run("validate", "--manifest", tmp_path / "broken" / "manifest.json") == 2


def test_validate_missing_file(cli_hub, tmp_path):
    shutil.copytree(cli_hub, tmp_path / "gone", dirs_exist_ok=True)
    (tmp_path / "gone" / "synth00_features.npy").unlink()
    assert run("validate", "--manifest", tmp_path / "gone" / "manifest.json") == 2


def test_score_leep(cli_hub, tmp_path):
    out = tmp_path / "scores.csv"
    assert (
        run(
            "score",
            "--manifest", cli_hub / "manifest.json",
            "--target", "synthtgt",
            "--metric", "leep",
            "--out", out,
        )
        == 0
    )
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 10
    scores = [float(r["score"]) for r in rows]
    assert scores == sorted(scores, reverse=True)
    assert len(set(scores)) == 10


def test_score_missing_manifest(tmp_path, capsys):
    out = tmp_path / "scores.csv"
    assert (
        run("score", "--manifest", tmp_path / "nope.json", "--target", "t",
            "--metric", "leep", "--out", out)
        == 2
    )
    assert not out.exists()


def test_score_unknown_metric(cli_hub, tmp_path, capsys):
    code = run(
        "score", "--manifest", cli_hub / "manifest.json", "--target", "synthtgt",
        "--metric", "foo", "--out", tmp_path / "s.csv",
    )
    assert code == 2
    assert "leep" in capsys.readouterr().err  # lists valid metric names


def test_score_label_free_ignores_labels(cli_hub, tmp_path):
    for metric in ("wassersteindrift", "l1drift", "l2drift"):
        out_with = tmp_path / f"{metric}_with.csv"
        run("score", "--manifest", cli_hub / "manifest.json", "--target", "synthtgt",
            "--metric", metric, "--out", out_with)
        stripped = tmp_path / f"nolabels_{metric}"
        shutil.copytree(cli_hub, stripped)
        doc = json.loads((stripped / "manifest.json").read_text())
        del doc["labels"]
        (stripped / "manifest.json").write_text(json.dumps(doc))
        (stripped / "gt.csv").unlink()
        out_without = tmp_path / f"{metric}_without.csv"
        run("score", "--manifest", stripped / "manifest.json", "--target", "synthtgt",
            "--metric", metric, "--out", out_without)
        assert out_with.read_bytes() == out_without.read_bytes()


def _spec_file(tmp_path, **overrides):
    doc = {
        "sources": ["synthsrc"],
        "targets": ["synthtgt"],
        "metrics": ["leep", "logme", "wassersteindrift"],
        "strategies": ["head"],
        "seed": 42,
    }
    doc.update(overrides)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return path


def test_evaluate_outputs(cli_hub, tmp_path):
    spec = _spec_file(tmp_path)
    out = tmp_path / "results"
    assert (
        run("evaluate", "--spec", spec, "--manifest", cli_hub / "manifest.json",
            "--ground-truth", cli_hub / "gt.csv", "--out", out)
        == 0
    )
    for name in ("cells.csv", "aggregates.csv", "sigma.csv", "report.md", "warnings.txt"):
        assert (out / name).is_file()
    with open(out / "cells.csv") as f:
        rows = list(csv.DictReader(f))
    assert sorted({r["metric"] for r in rows}) == ["leep", "logme", "wassersteindrift"]


def test_evaluate_unknown_strategy(cli_hub, tmp_path):
    spec = _spec_file(tmp_path, strategies=["partial"])
    assert (
        run("evaluate", "--spec", spec, "--manifest", cli_hub / "manifest.json",
            "--ground-truth", cli_hub / "gt.csv", "--out", tmp_path / "r")
        == 2
    )


def test_evaluate_deterministic_rerun(cli_hub, tmp_path):
    spec = _spec_file(tmp_path)
    for name in ("r1", "r2"):
        run("evaluate", "--spec", spec, "--manifest", cli_hub / "manifest.json",
            "--ground-truth", cli_hub / "gt.csv", "--out", tmp_path / name)
    assert _dir_hash(tmp_path / "r1") == _dir_hash(tmp_path / "r2")


def test_report_from_cells(cli_hub, tmp_path):
    spec = _spec_file(tmp_path)
    out = tmp_path / "res"
    run("evaluate", "--spec", spec, "--manifest", cli_hub / "manifest.json",
        "--ground-truth", cli_hub / "gt.csv", "--out", out)
    report2 = tmp_path / "report2.md"
    assert run("report", "--cells", out / "cells.csv", "--out", report2) == 0
    assert report2.read_text() == (out / "report.md").read_text()


def test_unknown_flag_exits_2(cli_hub, capsys):
    with pytest.raises(SystemExit) as exc:
        run("validate", "--manifest", cli_hub / "manifest.json", "--bogus")
    assert exc.value.code == 2

import json

import pytest

from perfprint import collector, dataset
from perfprint.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def synth_args(out, classes=4, per_class=8, samples=80, seed=3, sigma=0.05, shift=0.01):
    return [
        "synth", "--classes", classes, "--per-class", per_class,
        "--events", 2, "--samples-per-event", samples,
        "--noise-sigma", sigma, "--noise-shift", shift, "--seed", seed,
        "--out", out,
    ]


def test_synth_digest_is_reproducible(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(*synth_args(a)) == 0
    digest_a = capsys.readouterr().out.strip().splitlines()[-1]
    assert run(*synth_args(b)) == 0
    digest_b = capsys.readouterr().out.strip().splitlines()[-1]
    assert digest_a.startswith("sha256 ")
    assert digest_a == digest_b
    assert a.read_bytes() == b.read_bytes()


def test_synth_rejects_zero_measurements(tmp_path, capsys):
    assert run("synth", "--classes", 3, "--per-class", 0, "--out", tmp_path / "x.csv") == 2
    assert "n_per_class" in capsys.readouterr().err


def test_unknown_scenario_exits_with_config_error(tmp_path, capsys):
    code = run("collect", "--scenario", "bogus", "--label", "x", "--out", tmp_path / "t.csv")
    assert code == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_collect_with_tiny_config(tmp_path, capsys):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps({
        "events": ["instructions"],
        "scope": {"type": "process", "pid": -1},
        "duration_s": 0.01,
        "read_interval_us": 500,
    }))
    out = tmp_path / "trace.csv"
    code = run("collect", "--scenario", scenario, "--label", "self", "--out", out,
               "--pid", 0)
    if collector.interface_available():
        assert code == 0
        d = dataset.load(str(out))
        assert d.labels() == ["self"]
        assert d.feature_length == 20
    else:
        assert code == 4
        assert capsys.readouterr().err.startswith("error:")


def test_missing_data_file_exits_three(tmp_path):
    assert run("train", "--data", tmp_path / "none.csv", "--kind", "knn",
               "--out", tmp_path / "m.json") == 3


def test_prep_split_normalize_downsample(tmp_path):
    full = tmp_path / "full.csv"
    assert run(*synth_args(full)) == 0
    train = tmp_path / "train.csv"
    test = tmp_path / "test.csv"
    assert run("prep", "--data", full, "--downsample", 2, "--normalize",
               "--split-train", 6, "--split-test", 2, "--split-seed", 1,
               "--train-out", train, "--test-out", test) == 0
    d_train = dataset.load(str(train))
    d_test = dataset.load(str(test))
    assert len(d_train) == 24 and len(d_test) == 8
    assert d_train.feature_length == 80  # 2 events x 80 samples, halved
    assert d_train.normalization is not None
    x = d_train.feature_matrix()
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_train_evaluate_round_trip(tmp_path):
    full = tmp_path / "full.csv"
    train = tmp_path / "train.csv"
    test = tmp_path / "test.csv"
    model = tmp_path / "knn.json"
    reports = tmp_path / "reports"
    assert run(*synth_args(full)) == 0
    assert run("prep", "--data", full, "--normalize", "--split-train", 6,
               "--split-test", 2, "--train-out", train, "--test-out", test) == 0
    assert run("train", "--data", train, "--kind", "knn", "--k", 1, "--out", model) == 0
    assert run("evaluate", "--data", test, "--model", model, "--topk", 3,
               "--out-dir", reports) == 0

    report = json.loads((reports / "report.json").read_text())
    assert report["success_rate"] == 1.0
    assert report["meta"]["model_sha256"]
    assert report["meta"]["test_data_sha256"]

    topk_lines = (reports / "topk.csv").read_text().strip().splitlines()
    assert topk_lines[0] == "guesses,success_rate"
    assert len(topk_lines) == 1 + 3
    rates = [float(line.split(",")[1]) for line in topk_lines[1:]]
    assert rates == sorted(rates)

    per_class_lines = (reports / "per_class.csv").read_text().strip().splitlines()
    assert len(per_class_lines) == 1 + 4


def test_crossval_writes_fold_rates(tmp_path):
    full = tmp_path / "full.csv"
    out = tmp_path / "cv.json"
    assert run(*synth_args(full)) == 0
    assert run("crossval", "--data", full, "--kind", "knn", "--folds", 4,
               "--seed", 2, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert len(doc["fold_rates"]) == 4
    assert doc["data_sha256"]
    assert doc["mean_success_rate"] == pytest.approx(
        sum(doc["fold_rates"]) / 4
    )


def test_curve_writes_csv(tmp_path):
    full = tmp_path / "full.csv"
    out = tmp_path / "curve.csv"
    assert run(*synth_args(full, per_class=10)) == 0
    assert run("curve", "--data", full, "--kind", "knn", "--sizes", "2,5",
               "--n-test", 3, "--seed", 4, "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "train_size,success_rate"
    assert len(lines) == 3


def test_mitigate_deny_reaches_chance(tmp_path):
    full = tmp_path / "full.csv"
    out = tmp_path / "leak.json"
    assert run(*synth_args(full)) == 0
    assert run("mitigate", "--data", full, "--policy", "deny", "--kind", "knn",
               "--n-train", 6, "--n-test", 2, "--split-seed", 5, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["after"]["success_rate"] <= 1.0 / 4 + 0.05
    assert doc["accuracy_delta"] >= 0.5
    assert doc["seeds"]["split_seed"] == 5


# Frozen once from the first implementation run with the seeds used below
# (synth 1234, split 7, net 7): the CLI-level pipeline regression value.
PIPELINE_FROZEN_SUCCESS_RATE = 1.0


def test_full_pipeline_net_regression(tmp_path):
    full = tmp_path / "full.csv"
    train = tmp_path / "train.csv"
    test = tmp_path / "test.csv"
    model = tmp_path / "net.json"
    reports = tmp_path / "reports"
    assert run(*synth_args(full, classes=4, per_class=8, samples=60, seed=1234)) == 0
    assert run("prep", "--data", full, "--normalize", "--split-train", 6,
               "--split-test", 2, "--split-seed", 7, "--train-out", train,
               "--test-out", test) == 0
    assert run("train", "--data", train, "--kind", "net", "--train-seed", 7,
               "--max-iter", 30, "--hidden1", 16, "--hidden2", 8,
               "--out", model) == 0
    assert run("evaluate", "--data", test, "--model", model, "--out-dir", reports) == 0
    report = json.loads((reports / "report.json").read_text())
    assert report["success_rate"] == PIPELINE_FROZEN_SUCCESS_RATE

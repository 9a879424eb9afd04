import csv
import json

import pytest

from heatbench import cli
from heatbench.config import ConfigError, RunConfig, parse_seeds
from heatbench.training import TrainingError

FAST = {"data": {"synth": {"n_buildings": 2, "days": 30, "seed": 4}}, "train": {"epochs": 2, "batch_size": 64},
        "model": {"hidden_size": 8}}


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(FAST))
    return path


def losses(curve_path):
    with open(curve_path) as fh:
        return [(r["train_loss"], r["val_loss"]) for r in csv.DictReader(fh)]


def test_usage_errors_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--model", "tft"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["train", "--horizon", "12"])
    assert exc.value.code == 1
    assert cli.main(["train", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"train": {"epochs": 0}}))
    assert cli.main(["train", "--config", str(bad)]) == 1
    bad.write_text(json.dumps({"colour": 1}))
    assert cli.main(["train", "--config", str(bad)]) == 1


def test_data_error_exits_two(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    assert cli.main(["preprocess", "--data", str(corpus), "--out", str(tmp_path / "p")]) == 2
    (corpus / "buildings.csv").write_text("building_id,heated_area_m2,num_apartments,heating_type,holiday_region\n"
                                          "B1,100,4,steam,DE\n")
    assert cli.main(["preprocess", "--data", str(corpus), "--out", str(tmp_path / "p")]) == 2
    assert cli.main(["evaluate", "--out", str(tmp_path / "nothing")]) == 2


def test_training_failure_exits_three(fast_config, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise TrainingError("loss is NaN at epoch 1, batch 0")

    monkeypatch.setattr(cli, "train", boom)
    assert cli.main(["train", "--config", str(fast_config), "--out", str(tmp_path / "r")]) == 3


def test_seed_parsing():
    assert parse_seeds("1,2,3") == [1, 2, 3]
    assert parse_seeds("0-4") == [0, 1, 2, 3, 4]
    with pytest.raises(ConfigError):
        parse_seeds("a,b")
    with pytest.raises(ConfigError):
        RunConfig.load(overrides={"seeds": []})


def test_flags_override_config(fast_config):
    cfg = RunConfig.load(fast_config, {"model": {"kind": "lstm"}, "window": {"horizon": 24}})
    assert cfg.kind.value == "lstm" and cfg.horizon == 24
    assert cfg.raw["model"]["hidden_size"] == 8 and cfg.synth["n_buildings"] == 2
    spec = cfg.model_spec(14, 3)
    assert spec.hidden_size == 8 and spec.n_out == 24


def test_reference_scale_config():
    cfg = RunConfig.load(overrides={"model": {"kind": "lstm", "scale": "reference"}, "window": {"horizon": 24}})
    spec = cfg.model_spec(14, 3)
    assert (spec.n_in, spec.hidden_size, spec.n_future) == (38, 131, 24)
    past = RunConfig.load(overrides={"model": {"kind": "lstm", "scale": "reference"},
                                     "window": {"horizon": 24, "feature_config": 1}})
    assert past.window_spec().n_future == 0


def test_preprocess_outputs_and_idempotence(tmp_path):
    raw = tmp_path / "raw"
    assert cli.main(["synth", "--out", str(raw), "--buildings", "5", "--days", "20"]) == 0
    assert (raw / "config.json").exists()
    assert cli.main(["preprocess", "--data", str(raw), "--out", str(tmp_path / "p1")]) == 0
    report = json.loads((tmp_path / "p1" / "report.json").read_text())
    assert report["n_series"] >= 5
    for name in ("standardization.json", "features.npz", "splits.json", "config.json"):
        assert (tmp_path / "p1" / name).exists()
    assert cli.main(["preprocess", "--data", str(tmp_path / "p1"), "--out", str(tmp_path / "p2")]) == 0
    again = json.loads((tmp_path / "p2" / "report.json").read_text())
    assert again["n_removed_this_pass"] == 0


def test_long_gap_adds_a_segment(tmp_path):
    def segments(gaps):
        out = tmp_path / f"g{gaps}"
        cli.main(["preprocess", "--config", str(_write(tmp_path / f"c{gaps}.json", {
            "data": {"synth": {"n_buildings": 2, "days": 30, "seed": 1, "long_gaps": gaps}}})), "--out", str(out)])
        return [b["n_segments"] for b in json.loads((out / "report.json").read_text())["buildings"]]

    assert segments(1) == [s + 1 for s in segments(0)]


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_train_evaluate_and_frozen_rerun(fast_config, tmp_path):
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(fast_config), "--model", "fcn", "--seeds", "1,2,3",
                     "--out", str(run)]) == 0
    assert len(list((run / "checkpoints").glob("*.zip"))) == 3
    assert json.loads((run / "datasets.json").read_text())["train"]["y"][1] == 3

    assert cli.main(["evaluate", "--out", str(run)]) == 0
    with open(run / "evaluation" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["model"] == "naive" and len(rows) == 4
    for r in rows:
        assert abs(float(r["RMSE"]) ** 2 - float(r["MSE"])) <= 1e-9 * float(r["MSE"])
    with open(run / "evaluation" / "per_step.csv") as fh:
        steps = list(csv.DictReader(fh))
    assert all(sum(s["model"] == r["model"] for s in steps) == 3 for r in rows)
    resources = json.loads((run / "evaluation" / "resources.json").read_text())
    assert len(resources) == 3 and all(r["emissions_g"] > 0 for r in resources)

    rerun = tmp_path / "rerun"
    assert cli.main(["train", "--config", str(run / "config.json"), "--out", str(rerun)]) == 0
    for seed in (1, 2, 3):
        name = f"curves/fcn_h3_seed{seed}.csv"
        assert losses(run / name) == losses(rerun / name)
    assert cli.main(["evaluate", "--out", str(rerun)]) == 0
    assert (run / "evaluation" / "summary.csv").read_text() == (rerun / "evaluation" / "summary.csv").read_text()


def test_horizon_flag_sets_target_width(fast_config, tmp_path):
    out = tmp_path / "h24"
    assert cli.main(["train", "--config", str(fast_config), "--horizon", "24", "--out", str(out)]) == 0
    assert json.loads((out / "datasets.json").read_text())["test"]["y"][1] == 24
    assert cli.main(["evaluate", "--out", str(out)]) == 0
    with open(out / "evaluation" / "per_step.csv") as fh:
        steps = list(csv.DictReader(fh))
    assert sum(s["model"] == "fcn_h24_seed0" for s in steps) == 24


def test_sweep_command(tmp_path):
    cfg = _write(tmp_path / "s.json", {**FAST, "sweep": {"grid": {"dropout": [0.0, 0.2], "batch_size": [32, 64]},
                                                         "seed": 3}})
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "sw")]) == 0
    with open(tmp_path / "sw" / "trials.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and all(r["status"] == "ok" for r in rows)
    assert cli.main(["sweep", "--config", str(_write(tmp_path / "n.json", FAST)), "--out", str(tmp_path / "x")]) == 1

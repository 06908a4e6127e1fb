import json

import pytest

from actihybrid.cli import main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "data"
    assert main(["synth", "--condition", "5", "--control", "5", "--days", "14", "--seed", "42", "--out", str(out)]) == 0
    return out


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_synth_layout(synth_dir):
    files = _files(synth_dir)
    assert len([f for f in files if f.startswith(("condition/", "control/"))]) == 10
    assert "scores.csv" in files and "manifest.json" in files
    manifest = json.loads(files["manifest.json"])
    assert manifest["seeds"] == {"synth": 42}
    assert set(manifest["artifacts"]) == {f for f in files if f != "manifest.json"}


def test_synth_repeatable(synth_dir, tmp_path):
    out = tmp_path / "again"
    assert main(["synth", "--condition", "5", "--control", "5", "--days", "14", "--seed", "42", "--out", str(out)]) == 0
    a, b = _files(synth_dir), _files(out)
    assert a.keys() == b.keys()
    for k in a:
        if k != "manifest.json":  # only created_at differs
            assert a[k] == b[k], k
    ma, mb = json.loads(a["manifest.json"]), json.loads(b["manifest.json"])
    ma.pop("created_at"), mb.pop("created_at")
    assert ma == mb


def test_synth_usage_error(tmp_path, capsys):
    assert main(["synth", "--condition", "0", "--out", str(tmp_path)]) == 1
    assert "usage" in capsys.readouterr().err


def test_featurize(synth_dir, tmp_path):
    out = tmp_path / "f.csv"
    assert main(["featurize", "--data", str(synth_dir), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 141


def test_featurize_threshold_excludes_all(synth_dir, tmp_path, capsys):
    out = tmp_path / "f.csv"
    assert main(["featurize", "--data", str(synth_dir), "--out", str(out), "--min-records", "2000"]) == 0
    assert len(out.read_text().splitlines()) == 1
    assert "warning" in capsys.readouterr().err


def test_featurize_missing_dir(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["featurize", "--data", str(missing), "--out", str(tmp_path / "f.csv")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_featurize_invalid_dataset(tmp_path, capsys):
    (tmp_path / "condition").mkdir()
    (tmp_path / "control").mkdir()
    (tmp_path / "condition" / "c1.csv").write_text("timestamp,date,activity\n2003-01-01 00:00:00,2003-01-01,-1\n")
    assert main(["featurize", "--data", str(tmp_path), "--out", str(tmp_path / "f.csv")]) == 1
    assert "c1.csv" in capsys.readouterr().err


def _run(args, out):
    assert main(["run", *args, "--out", str(out)]) == 0
    (run_dir,) = [p for p in out.iterdir() if p.is_dir()]
    return run_dir


def test_run_faithful(synth_dir, tmp_path):
    run_dir = _run(["--data", str(synth_dir), "--mode", "faithful", "--seed", "42"], tmp_path / "runs")
    report = json.loads((run_dir / "report.json").read_text())
    assert set(report["models"]) == {"random_forest", "neural_network", "hybrid"}
    assert report["mode"] == "faithful"
    for name in ("report.txt", "manifest.json", "loss_trace.csv", "models/forest.json",
                 "models/meta_forest.json", "models/network.json", "models/scaler.json"):
        assert (run_dir / name).is_file(), name
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["config"]["n_estimators"] == 100 and manifest["seeds"]["forests"] == 42
    assert run_dir.name == f"run-{manifest['run_id']}"


def test_run_audited_from_features(synth_dir, tmp_path):
    feats = tmp_path / "f.csv"
    main(["featurize", "--data", str(synth_dir), "--out", str(feats)])
    run_dir = _run(["--features", str(feats), "--mode", "audited"], tmp_path / "runs")
    report = json.loads((run_dir / "report.json").read_text())
    assert report["mode"] == "audited"
    assert report["split"]["n_eval"] == len(report["split"]["test"]) // 2 + len(report["split"]["test"]) % 2
    assert report["models"]["hybrid"]["classes"]["0"]["support"] + \
        report["models"]["hybrid"]["classes"]["1"]["support"] == report["split"]["n_eval"]


def test_run_deterministic(synth_dir, tmp_path):
    a = _run(["--data", str(synth_dir), "--epochs", "10"], tmp_path / "a")
    b = _run(["--data", str(synth_dir), "--epochs", "10"], tmp_path / "b")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert a.name == b.name


def test_config_file_and_flag_precedence(synth_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mode = audited\nepochs = 5\nn_estimators = 10\n")
    run_dir = _run(["--data", str(synth_dir), "--config", str(cfg), "--epochs", "7"], tmp_path / "runs")
    report = json.loads((run_dir / "report.json").read_text())
    assert report["mode"] == "audited"
    assert report["config"]["epochs"] == 7 and report["config"]["n_estimators"] == 10


def test_run_requires_one_input(tmp_path):
    assert main(["run", "--out", str(tmp_path)]) == 1


def test_report_command(synth_dir, tmp_path, capsys):
    run_dir = _run(["--data", str(synth_dir), "--epochs", "5", "--n-estimators", "5"], tmp_path / "runs")
    capsys.readouterr()
    assert main(["report", str(run_dir / "report.json")]) == 0
    text = capsys.readouterr().out
    assert "Hybrid RF-NN" in text and "weighted avg" in text
    assert main(["report", str(tmp_path / "missing.json")]) == 2

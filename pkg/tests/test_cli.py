import csv
import json

import pytest

from hybridfs.cli import EXIT_CONFIG, EXIT_DATA, main
from hybridfs.dataset import load_csv


@pytest.fixture
def toy(tmp_path):
    out = tmp_path / "toy.csv"
    assert main(["synth", "--samples", "24", "--noise", "12", "--informative", "3",
                 "--classes", "2", "--sep", "0.9", "--seed", "4", "--out", str(out)]) == 0
    return out


def test_synth_writes_data_and_truth(toy):
    d = load_csv(toy)
    assert (d.n_samples, d.n_features, d.n_classes) == (24, 15, 2)
    truth = json.loads(toy.with_suffix(".truth.json").read_text())
    assert len(truth["informative_indices"]) == 3


def test_rank_output(toy, tmp_path, capsys):
    assert main(["rank", "--data", str(toy), "--bins", "10"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["feature_index", "feature_name", "gain"]
    gains = [float(r[2]) for r in rows[1:]]
    assert gains == sorted(gains, reverse=True)
    truth = json.loads(toy.with_suffix(".truth.json").read_text())
    assert {int(r[0]) for r in rows[1:4]} == set(truth["informative_indices"])

    out = tmp_path / "rank.csv"
    assert main(["rank", "--data", str(toy), "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "feature_index,feature_name,gain"


def test_run(toy, tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        f"dataset = {toy.name}\nmethods = ig, ig+ibpso\nseeds = 1, 2\n"
        "particles = 8\niterations = 10\noutput_dir = results\n"
    )
    assert main(["run", "--config", str(cfg), "--threads", "2"]) == 0
    assert "IG + IBPSO" in capsys.readouterr().out
    assert (tmp_path / "results" / "report.csv").exists()
    traces = sorted((tmp_path / "results" / "traces").glob("*.csv"))
    assert len(traces) == 2

    other = tmp_path / "other"
    assert main(["--seed", "9", "run", "--config", str(cfg), "--out-dir", str(other)]) == 0
    with open(other / "report.csv") as fh:
        seeds = {r["seed"] for r in csv.DictReader(fh)}
    assert seeds == {"9", "mean", "median", "best"}


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dataset = x.csv\nparticles = lots\n")
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_data_error_exit_code(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("dataset = nowhere.csv\n")
    assert main(["run", "--config", str(cfg)]) == EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("a,class\n1,A\nx,B\n")
    assert main(["rank", "--data", str(bad)]) == EXIT_DATA


def test_synth_bad_args(tmp_path):
    assert main(["synth", "--samples", "1", "--noise", "2", "--informative", "1",
                 "--classes", "2", "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["rank"])
    assert info.value.code == 2


def test_threads_env(toy, tmp_path, monkeypatch):
    monkeypatch.setenv("HYBRIDFS_THREADS", "3")
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"dataset = {toy.name}\nmethods = ig\noutput_dir = r\n")
    assert main(["run", "--config", str(cfg)]) == 0
    monkeypatch.setenv("HYBRIDFS_THREADS", "0")
    assert main(["run", "--config", str(cfg), "--threads", "0"]) == EXIT_CONFIG

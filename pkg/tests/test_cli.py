import json
import subprocess
import sys
import time

import numpy as np
import pytest

from padic_pca import cli
from padic_pca.core import Params
from padic_pca.datagen import LabeledDataset
from padic_pca.io import load_dataset, load_model, save_dataset


def run(*args):
    return cli.main([str(a) for a in args])


def test_smoke_experiment_is_fast(tmp_path):
    t0 = time.perf_counter()
    assert run("experiment", "--preset", "smoke", "--out", tmp_path / "rep") == 0
    assert time.perf_counter() - t0 < 5
    rows = (tmp_path / "rep.csv").read_text().splitlines()
    assert rows[0] == "group,deduced_normal,deduced_anomalous,r_A,r_C"
    assert [r.split(",")[0] for r in rows[1:]] == ["A"] + [f"ball {b}" for b in range(10)] + ["N"]


def test_generate_fit_detect(tmp_path, capsys):
    data, model, rep = tmp_path / "d.bin", tmp_path / "m.json", tmp_path / "r"
    assert run("generate", "--preset", "smoke", "--generator", "affine", "--D-prime", "3",
               "--rate", "10", "--seed", "5", "--out", data) == 0
    assert run("fit", "--preset", "smoke", "--data", data, "--out", model,
               "--coordinate-descent", "--line-search-random", "4") == 0
    losses = json.loads(capsys.readouterr().out.splitlines()[-1])["losses"]
    assert losses["data"] >= losses["pca"] >= losses["coordinate_descent"] >= losses["line_search"]
    assert run("detect", "--preset", "smoke", "--data", data, "--model", model, "--out", rep) == 0
    groups = [r.split(",")[0] for r in (tmp_path / "r.csv").read_text().splitlines()[1:]]
    assert groups == ["A", "N"]
    assert len(load_model(model)) <= 4


def test_generate_twice_identical(tmp_path):
    for k in range(2):
        assert run("generate", "--preset", "smoke", "--seed", "42", "--out", tmp_path / f"d{k}.csv") == 0
    assert (tmp_path / "d0.csv").read_bytes() == (tmp_path / "d1.csv").read_bytes()


def test_rank_one_and_zero_data(tmp_path, capsys):
    P = Params(5, 2, 1, 3)
    v = np.array([1, 7, 12])
    Y = np.stack([(c * v) % 25 for c in (1, 2, 3)])
    for name, mat in [("r1", Y), ("zero", np.zeros((3, 3), dtype=np.int64))]:
        save_dataset(tmp_path / f"{name}.csv", LabeledDataset(mat, None, P))
        assert run("fit", "--data", tmp_path / f"{name}.csv", "--d-minus", "2", "--out", tmp_path / f"{name}.json") == 0
        out = json.loads(capsys.readouterr().out.splitlines()[-1])
        assert out["losses"]["pca"] == 0
        assert out["components"] == (1 if name == "r1" else 0)
    assert run("detect", "--data", tmp_path / "r1.csv", "--model", tmp_path / "r1.json",
               "--d-minus", "2", "--out", tmp_path / "rep") == 0
    rows = (tmp_path / "rep.csv").read_text().splitlines()
    assert rows[1] == "all,3,0,0.00,1.00"


def test_exit_codes(tmp_path, capsys):
    assert run("experiment", "--p", "4", "--out", tmp_path / "x") == cli.EXIT_CONFIG
    assert run("generate", "--E", "1", "--out", tmp_path / "x.csv") == cli.EXIT_CONFIG
    assert run("fit", "--data", tmp_path / "missing.csv", "--out", tmp_path / "m.json") == cli.EXIT_IO
    (tmp_path / "junk.csv").write_text("nonsense\n")
    assert run("fit", "--data", tmp_path / "junk.csv", "--out", tmp_path / "m.json") == cli.EXIT_IO
    assert run("generate", "--preset", "smoke", "--out", tmp_path / "nodir" / "x.csv") == cli.EXIT_IO
    run("generate", "--preset", "smoke", "--out", tmp_path / "d.csv")
    assert run("fit", "--data", tmp_path / "d.csv", "--p", "5", "--out", tmp_path / "m.json") == cli.EXIT_CONFIG
    assert run("fit", "--data", tmp_path / "d.csv", "--d-minus", "11", "--out", tmp_path / "m.json") == cli.EXIT_CONFIG
    capsys.readouterr()


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    from padic_pca import pipeline

    real = pipeline.fit

    def broken(cfg, Y):
        model = real(cfg, Y)
        model.info["losses"]["pca"] = model.info["losses"]["data"] + 1
        return model

    monkeypatch.setattr(pipeline, "fit", broken)
    assert run("experiment", "--preset", "smoke", "--out", tmp_path / "x") == cli.EXIT_INVARIANT


def test_config_file_and_flag_override(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\np = 3\nE = 3\nD = 6\ncount = 30\nd_minus = 2\nseed = 1\n")
    assert run("generate", "--config", ini, "--count", "20", "--out", tmp_path / "d.csv") == 0
    ds = load_dataset(tmp_path / "d.csv")
    assert ds.Y.shape == (20, 6)


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "padic_pca.cli", "experiment", "--preset", "smoke", "--out", str(tmp_path / "r")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "RPCA (B = 10, r = 1)" in proc.stdout


@pytest.mark.parametrize("argv", [[], ["bogus"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit):
        cli.main(argv)

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_pca.core import Params
from padic_pca.datagen import LabeledDataset, gen_balls
from padic_pca.detect import build_report
from padic_pca.io import (
    FormatError,
    load_dataset,
    load_model,
    model_from_dict,
    model_to_dict,
    report_csv,
    report_from_json,
    report_json,
    report_text,
    save_dataset,
    save_model,
    save_report,
)
from padic_pca.pca import FactorModel, residual, rpca


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_dataset_round_trip(tmp_path, suffix):
    ds = gen_balls(3, 10, 40, Params(7, 5, 1, 6), 2)
    path = tmp_path / f"d{suffix}"
    save_dataset(path, ds)
    back = load_dataset(path)
    assert np.array_equal(back.Y, ds.Y)
    assert np.array_equal(back.labels, ds.labels)
    assert back.params == ds.params
    assert back.meta == json.loads(json.dumps(ds.meta))


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_unlabeled_and_huge_modulus_round_trip(tmp_path, suffix):
    P = Params(7, 30, 1, 2)
    Y = np.array([[7**29 + 5, 0], [1, 7**30 - 1]], dtype=object)
    path = tmp_path / f"h{suffix}"
    save_dataset(path, LabeledDataset(Y, None, P))
    back = load_dataset(path)
    assert back.labels is None
    assert back.Y.tolist() == Y.tolist()


@settings(max_examples=25)
@given(st.sampled_from([(2, 3), (3, 5), (7, 5), (257, 2)]), st.integers(0, 2**32 - 1), st.booleans())
def test_binary_layout_is_lossless(pe, seed, labeled):
    import tempfile
    from pathlib import Path

    P = Params(*pe, 1, 3)
    rng = np.random.default_rng(seed)
    Y = rng.integers(0, P.modulus, size=(5, 3))
    labels = rng.integers(-1, 3, size=5) if labeled else None
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "x.bin"
        save_dataset(path, LabeledDataset(Y, labels, P))
        back = load_dataset(path)
    assert back.Y.tolist() == Y.tolist()
    assert (back.labels is None) == (labels is None)


def test_dataset_format_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n")
    with pytest.raises(FormatError):
        load_dataset(bad)
    bad.write_text('# {"p": 3, "E": 2, "D": 2, "count": 2}\n1,2\n')
    with pytest.raises(FormatError):
        load_dataset(bad)
    bad.write_text('# {"p": 3, "E": 2, "D": 2, "count": 1}\n1,x\n')
    with pytest.raises(FormatError):
        load_dataset(bad)
    ds = gen_balls(2, 0, 10, Params(3, 2, 1, 4), 0)
    good = tmp_path / "t.bin"
    save_dataset(good, ds)
    good.write_bytes(good.read_bytes()[:-20])
    with pytest.raises(FormatError):
        load_dataset(good)


def test_model_round_trip(tmp_path):
    P = Params(7, 5, 1, 8)
    Y = np.random.default_rng(0).integers(0, P.modulus, size=(30, 8))
    model = rpca(Y, 3, P)
    model.info["losses"] = {"data": 10**20, "pca": 5}
    path = tmp_path / "m.json"
    save_model(path, model)
    back = load_model(path)
    assert back.C.tolist() == model.C.tolist()
    assert back.X.tolist() == model.X.tolist()
    assert back.scores == model.scores
    assert back.info["losses"] == {"data": str(10**20), "pca": 5}
    assert "residual" not in back.info
    assert residual(Y, back).tolist() == residual(Y, model).tolist()


def test_model_big_integers_survive_json():
    P = Params(7, 30, 1, 2)
    big = 7**30 - 2
    model = FactorModel(P, 1)
    model.append(np.array([big], dtype=object), np.array([1, big], dtype=object))
    d = json.loads(json.dumps(model_to_dict(model)))
    assert isinstance(d["components"][0]["x_row"][1], str)
    back = model_from_dict(d)
    assert back.X.tolist() == [[1, big]]


def test_model_format_errors():
    with pytest.raises(FormatError):
        model_from_dict({"format": "other"})
    d = model_to_dict(FactorModel(Params(3, 2, 1, 2), 1))
    d["components"] = [{"score": [0, 0], "c_row": [1, 2], "x_row": [1, 1]}]
    with pytest.raises(FormatError):
        model_from_dict(d)


def test_report_renderers(tmp_path):
    P = Params(5, 2, 1, 3)
    v = np.array([1, 7, 12])
    Y = np.stack([(c * v) % 25 for c in (1, 2, 3, 4)] + [np.array([3, 1, 1])])
    model = rpca(Y, 1, P)
    rep = build_report(Y, model, np.array([0, 0, 1, 1, -1]), title="T")
    csv = report_csv(rep).splitlines()
    assert csv[0] == "group,deduced_normal,deduced_anomalous,r_A,r_C"
    assert csv[-1].startswith("N,4,0,0.00,1.00")
    back = report_from_json(report_json(rep))
    assert back.rows == rep.rows and back.title == "T"
    text = report_text(rep)
    assert text.splitlines()[0] == "T"
    assert len({len(line) for line in text.splitlines()[1:]}) == 1
    paths = save_report(tmp_path / "r", rep)
    assert sorted(p.suffix for p in paths) == [".csv", ".json", ".txt"]
    with pytest.raises(ValueError):
        save_report(tmp_path / "r", rep, ["xml"])
    assert Fraction(json.loads(report_json(rep))["rows"][-1]["r_C_exact"]) == 1

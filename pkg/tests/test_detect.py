from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_pca.core import Params
from padic_pca.detect import (
    DetectConfig,
    SampleNorms,
    Verdict,
    build_report,
    classify,
    compress_ratio,
    deduced_anomaly_ratio,
    fmt_ratio,
    group_compress_ratios,
)
from padic_pca.pca import FactorModel, nrpca, rpca


def _rank_one():
    P = Params(5, 2, 1, 3)
    v = np.array([1, 7, 12])
    Y = np.stack([(c * v) % 25 for c in (1, 2, 3, 4)])
    return P, Y, rpca(Y, 1, P)


def test_compress_ratio_examples():
    P, Y, model = _rank_one()
    assert compress_ratio(range(4), Y, model) == 1
    assert compress_ratio([0, 2], Y, FactorModel(P, 4)) == 0
    assert SampleNorms([6], [3]).ratio([0]) == Fraction(1, 2)
    # nothing to compress
    assert SampleNorms([0], [0]).ratio([0]) == 1
    with pytest.raises(ValueError):
        compress_ratio([], Y, model)


def test_classification_threshold_is_strict():
    cfg = DetectConfig(Fraction(1, 2))
    assert SampleNorms([6], [3]).verdict(0, cfg) is Verdict.NORMAL
    assert SampleNorms([6], [4]).verdict(0, cfg) is Verdict.ANOMALOUS
    assert SampleNorms([6], [0]).verdict(0, DetectConfig()) is Verdict.NORMAL
    assert SampleNorms([6], [6]).verdict(0, DetectConfig()) is Verdict.ANOMALOUS


def test_classify_and_anomaly_ratio():
    P, Y, model = _rank_one()
    assert classify(2, Y, model) is Verdict.NORMAL
    assert classify(2, Y, FactorModel(P, 4)) is Verdict.ANOMALOUS
    with pytest.raises(IndexError):
        classify(9, Y, model)
    assert deduced_anomaly_ratio(range(4), Y, model) == 0
    assert deduced_anomaly_ratio(range(4), Y, FactorModel(P, 4)) == 1
    norms = SampleNorms([5, 5, 5, 5], [0, 0, 5, 1])
    hits = sum(norms.verdict(i, DetectConfig()) is Verdict.ANOMALOUS for i in range(4))
    assert Fraction(hits, 4) == Fraction(1, 4)


def test_detect_config():
    assert DetectConfig(0.2).eps_ad == Fraction(1, 5)
    for bad in (0, -1, Fraction(3, 2)):
        with pytest.raises(ValueError):
            DetectConfig(bad)


def test_fmt_ratio_rounds_half_to_even():
    assert fmt_ratio(Fraction(1, 8)) == "0.12"
    assert fmt_ratio(Fraction(3, 8)) == "0.38"
    assert fmt_ratio(Fraction(1)) == "1.00"
    assert fmt_ratio(None) == ""


def test_report_layout():
    P, Y, model = _rank_one()
    labels = np.array([0, 0, 1, 1])
    rep = build_report(Y, model, labels)
    assert [r.group for r in rep.rows] == ["A", "ball 0", "ball 1", "N"]
    a = rep.row("A")
    assert (a.deduced_normal, a.deduced_anomalous, a.r_A, a.r_C) == (0, 0, None, None)
    n = rep.row("N")
    assert (n.deduced_normal, n.deduced_anomalous, n.r_A, n.r_C) == (4, 0, 0, 1)
    assert group_compress_ratios(rep) == {0: 1, 1: 1}
    flat = build_report(Y, model, np.zeros(4, dtype=int), group_rows=False)
    assert [r.group for r in flat.rows] == ["A", "N"]
    bare = build_report(Y, model, None)
    assert [r.group for r in bare.rows] == ["all"]
    with pytest.raises(ValueError):
        build_report(Y, model, labels[:3])


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_report_invariants(seed):
    rng = np.random.default_rng(seed)
    P = Params(3, 3, 1, 6)
    Y = rng.integers(0, P.modulus, size=(40, 6))
    labels = rng.integers(-1, 4, size=40)
    model = nrpca(Y, 3, P) if seed % 2 else rpca(Y, 3, P)
    rep = build_report(Y, model, labels)
    assert rep.total == 40
    groups = [r for r in rep.rows if r.group.startswith("ball")]
    n = rep.row("N")
    assert sum(r.size for r in groups) == n.size
    assert sum(r.deduced_anomalous for r in groups) == n.deduced_anomalous
    for r in rep.rows:
        if r.size:
            assert 0 <= r.r_A <= 1 and 0 <= r.r_C <= 1
            assert r.r_A * r.size == r.deduced_anomalous

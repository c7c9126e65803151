"""Anomaly scoring from a fitted factor model.

A sample whose residual keeps most of its norm was not explained by the
components and is flagged anomalous.  All ratios are exact ``Fraction``s;
rounding to two decimals only happens when a report is rendered.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import Params, as_matrix, row_norms
from .datagen import ANOMALOUS
from .pca import FactorModel, residual


class Verdict(enum.Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"


@dataclass(frozen=True)
class DetectConfig:
    """``eps_ad`` is the compress-ratio threshold below which a sample is anomalous."""

    eps_ad: Fraction = Fraction(1, 5)

    def __post_init__(self):
        value = self.eps_ad
        if isinstance(value, float):
            value = Fraction(str(value))
        value = Fraction(value)
        if not 0 < value <= 1:
            raise ValueError(f"eps_ad must lie in (0, 1], got {value}")
        object.__setattr__(self, "eps_ad", value)


# ---------------------------------------------------------------------------
# Per-sample norms
# ---------------------------------------------------------------------------


@dataclass
class SampleNorms:
    """Rescaled original and residual norm of every sample."""

    original: list[int]
    residual: list[int]

    @classmethod
    def of(cls, Y: np.ndarray, model: FactorModel, params: Params | None = None) -> "SampleNorms":
        params = params or model.params
        Y = as_matrix(Y, params)
        return cls(row_norms(Y, params), row_norms(residual(Y, model), params))

    def ratio(self, subset: Iterable[int]) -> Fraction:
        subset = list(subset)
        if not subset:
            raise ValueError("compress ratio of an empty subset is undefined")
        num = sum(self.residual[i] for i in subset)
        den = sum(self.original[i] for i in subset)
        if den == 0:
            # nothing to compress
            return Fraction(1)
        return 1 - Fraction(num, den)

    def verdict(self, i: int, cfg: DetectConfig) -> Verdict:
        return Verdict.ANOMALOUS if self.ratio([i]) < cfg.eps_ad else Verdict.NORMAL


def compress_ratio(
    subset: Iterable[int], Y: np.ndarray, model: FactorModel, params: Params | None = None
) -> Fraction:
    """``1 - (sum of residual norms) / (sum of original norms)`` over ``subset``."""
    return SampleNorms.of(Y, model, params).ratio(subset)


def classify(
    i: int, Y: np.ndarray, model: FactorModel, cfg: DetectConfig = DetectConfig(), params=None
) -> Verdict:
    """Anomalous iff the singleton compress ratio is strictly below ``eps_ad``."""
    if not 0 <= i < len(Y):
        raise IndexError(f"sample index {i} out of range")
    return SampleNorms.of(Y[i : i + 1], _slice_model(model, i), params).verdict(0, cfg)


def _slice_model(model: FactorModel, i: int) -> FactorModel:
    return FactorModel(
        model.params, 1, [c[i : i + 1] for c in model.coeffs], list(model.components)
    )


def deduced_anomaly_ratio(
    subset: Iterable[int], Y: np.ndarray, model: FactorModel, cfg: DetectConfig = DetectConfig(), params=None
) -> Fraction:
    """Fraction of ``subset`` classified anomalous."""
    subset = list(subset)
    if not subset:
        raise ValueError("anomaly ratio of an empty subset is undefined")
    norms = SampleNorms.of(Y, model, params)
    hits = sum(norms.verdict(i, cfg) is Verdict.ANOMALOUS for i in subset)
    return Fraction(hits, len(subset))


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    group: str
    deduced_normal: int
    deduced_anomalous: int
    r_A: Fraction | None
    r_C: Fraction | None

    @property
    def size(self) -> int:
        return self.deduced_normal + self.deduced_anomalous


@dataclass
class ExperimentReport:
    """Rows in table order: ``A`` first, then per-group rows, ``N`` last."""

    rows: list[ReportRow]
    title: str = ""
    meta: dict = field(default_factory=dict)

    COLUMNS = ("group", "deduced_normal", "deduced_anomalous", "r_A", "r_C")

    def row(self, group: str) -> ReportRow:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)

    @property
    def total(self) -> int:
        return sum(r.size for r in self.rows if r.group in ("A", "N"))


def fmt_ratio(x: Fraction | None) -> str:
    """Two decimals, round half to even; empty for an undefined ratio."""
    if x is None:
        return ""
    d = Decimal(x.numerator) / Decimal(x.denominator)
    return str(d.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def _row(group: str, idx: Sequence[int], norms: SampleNorms, cfg: DetectConfig) -> ReportRow:
    if not idx:
        return ReportRow(group, 0, 0, None, None)
    anomalous = sum(norms.verdict(i, cfg) is Verdict.ANOMALOUS for i in idx)
    return ReportRow(
        group, len(idx) - anomalous, anomalous, Fraction(anomalous, len(idx)), norms.ratio(idx)
    )


def build_report(
    Y: np.ndarray,
    model: FactorModel,
    labels: Sequence[int] | None,
    cfg: DetectConfig = DetectConfig(),
    params: Params | None = None,
    group_rows: bool = True,
    group_name: str = "ball",
    title: str = "",
) -> ExperimentReport:
    """Group samples by label and tabulate detection counts and ratios.

    ``labels[i]`` is -1 for anomalous samples and a normal group id otherwise.
    Without labels only an aggregate row ``all`` is produced.  ``group_rows``
    adds one row per normal group id (named ``"{group_name} {id}"``) between
    the ``A`` and ``N`` rows.
    """
    params = params or model.params
    norms = SampleNorms.of(Y, model, params)
    n = len(norms.original)
    if labels is None:
        return ExperimentReport([_row("all", list(range(n)), norms, cfg)], title)
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.shape[0] if labels.ndim else 0}")
    rows = [_row("A", np.flatnonzero(labels == ANOMALOUS).tolist(), norms, cfg)]
    if group_rows:
        for g in sorted(set(labels[labels != ANOMALOUS].tolist())):
            rows.append(_row(f"{group_name} {g}", np.flatnonzero(labels == g).tolist(), norms, cfg))
    rows.append(_row("N", np.flatnonzero(labels != ANOMALOUS).tolist(), norms, cfg))
    return ExperimentReport(rows, title)


def group_compress_ratios(report: ExperimentReport, group_name: str = "ball") -> dict[int, Fraction]:
    """Per-group r_C keyed by group id (groups with an undefined ratio skipped)."""
    prefix = group_name + " "
    return {
        int(r.group[len(prefix):]): r.r_C
        for r in report.rows
        if r.group.startswith(prefix) and r.r_C is not None
    }

"""Serialization of datasets, models and reports.

Dataset files come in two flavours sharing one header:

* text: a first line ``# {json header}`` followed by CSV rows of base-10
  integers, with the label as an extra last column when present;
* binary: ``PADIC1\\n``, a 4-byte little-endian header length, the JSON
  header, then row-major little-endian unsigned integers of ``width`` bytes
  (enough to hold ``p**E - 1``), then the labels as little-endian int64.

Models are JSON; integers beyond 2**53 are written as strings so that any JSON
reader keeps them exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import Params, as_matrix
from .datagen import LabeledDataset
from .detect import ExperimentReport, ReportRow, fmt_ratio
from .pca import FactorModel

MAGIC = b"PADIC1\n"
JSON_SAFE = 2**53


class FormatError(ValueError):
    """File contents do not match the expected layout."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _int_out(x) -> int | str:
    x = int(x)
    return x if -JSON_SAFE <= x <= JSON_SAFE else str(x)


def _int_in(x) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise FormatError(f"expected an integer, got {x!r}")
    return int(x)


def _header(params: Params, count: int, has_labels: bool, meta: dict | None) -> dict:
    return {
        "format": "padic-dataset",
        "p": params.p,
        "E": params.E,
        "q": params.q,
        "D": params.D,
        "count": count,
        "labels": has_labels,
        "meta": meta or {},
    }


def _params_from(h: dict) -> Params:
    try:
        return Params(int(h["p"]), int(h["E"]), int(h.get("q", 1)), int(h["D"]))
    except KeyError as exc:
        raise FormatError(f"header lacks field {exc}") from None


def byte_width(params: Params) -> int:
    return max(1, ((params.modulus - 1).bit_length() + 7) // 8)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


def save_dataset(path, ds: LabeledDataset, binary: bool | None = None) -> None:
    """Write ``ds``; the binary layout is used for ``binary=True`` or a ``.bin`` suffix."""
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".bin"
    Y = as_matrix(ds.Y, ds.params)
    has_labels = ds.labels is not None
    head = _header(ds.params, Y.shape[0], has_labels, ds.meta)
    if binary:
        _save_binary(path, Y, ds.labels, head, ds.params)
        return
    buf = _io.StringIO()
    buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for i, row in enumerate(Y.tolist()):
        w.writerow(row + [int(ds.labels[i])] if has_labels else row)
    path.write_text(buf.getvalue())


def _save_binary(path: Path, Y, labels, head: dict, params: Params) -> None:
    width = byte_width(params)
    head = dict(head, width=width)
    blob = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        if width in (1, 2, 4, 8) and Y.dtype == np.int64:
            fh.write(Y.astype(f"<u{width}").tobytes())
        else:
            fh.write(b"".join(int(x).to_bytes(width, "little") for x in Y.ravel()))
        if labels is not None:
            fh.write(np.asarray(labels, dtype="<i8").tobytes())


def load_dataset(path) -> LabeledDataset:
    """Read a dataset written by :func:`save_dataset` (either layout)."""
    path = Path(path)
    with open(path, "rb") as fh:
        start = fh.read(len(MAGIC))
    if start == MAGIC:
        return _load_binary(path)
    text = path.read_text()
    first, _, body = text.partition("\n")
    if not first.startswith("#"):
        raise FormatError(f"{path}: missing header line")
    try:
        head = json.loads(first[1:])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad header: {exc}") from None
    params = _params_from(head)
    count, has_labels = int(head["count"]), bool(head.get("labels"))
    width = params.D + (1 if has_labels else 0)
    rows = [r for r in csv.reader(_io.StringIO(body)) if r]
    if len(rows) != count:
        raise FormatError(f"{path}: header says {count} rows, found {len(rows)}")
    try:
        ints = [[int(x) for x in r] for r in rows]
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if any(len(r) != width for r in ints):
        raise FormatError(f"{path}: expected {width} fields per row")
    labels = np.array([r[-1] for r in ints], dtype=np.int64) if has_labels else None
    data = [r[: params.D] for r in ints]
    Y = as_matrix(data, params) if data else as_matrix(np.zeros((0, params.D), np.int64), params)
    return LabeledDataset(Y, labels, params, head.get("meta", {}))


def _load_binary(path: Path) -> LabeledDataset:
    raw = path.read_bytes()
    pos = len(MAGIC)
    (n,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    head = json.loads(raw[pos : pos + n])
    pos += n
    params = _params_from(head)
    count, width = int(head["count"]), int(head["width"])
    size = count * params.D * width
    body = raw[pos : pos + size]
    if len(body) != size:
        raise FormatError(f"{path}: truncated body")
    if width in (1, 2, 4, 8) and params.modulus < 2**62:
        Y = np.frombuffer(body, dtype=f"<u{width}").astype(np.int64).reshape(count, params.D)
    else:
        vals = [int.from_bytes(body[k : k + width], "little") for k in range(0, size, width)]
        Y = np.array(vals, dtype=object).reshape(count, params.D)
    Y = as_matrix(Y, params)
    pos += size
    labels = None
    if head.get("labels"):
        lab = raw[pos : pos + 8 * count]
        if len(lab) != 8 * count:
            raise FormatError(f"{path}: truncated labels")
        labels = np.frombuffer(lab, dtype="<i8").astype(np.int64)
    return LabeledDataset(Y, labels, params, head.get("meta", {}))


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return _int_out(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            v = _jsonable(v)
            if v is not _SKIP:
                out[str(k)] = v
        return out
    if isinstance(value, (list, tuple)):
        return [v for v in map(_jsonable, value) if v is not _SKIP]
    return _SKIP


_SKIP = object()


def model_to_dict(model: FactorModel) -> dict:
    p = model.params
    return {
        "format": "padic-model",
        "params": {"p": p.p, "E": p.E, "q": p.q, "D": p.D},
        "n_samples": model.n_samples,
        # arrays such as the cached residual are not part of the file
        "info": _jsonable(model.info),
        "components": [
            {
                "score": [_int_out(a), _int_out(b)],
                "c_row": [_int_out(v) for v in c],
                "x_row": [_int_out(v) for v in x],
            }
            for c, x, (a, b) in zip(model.coeffs, model.components, model.scores)
        ],
    }


def model_from_dict(d: dict) -> FactorModel:
    if d.get("format") != "padic-model":
        raise FormatError("not a model file")
    params = _params_from(d["params"])
    n = int(d["n_samples"])
    model = FactorModel(params, n, info=dict(d.get("info", {})))
    for comp in d["components"]:
        c = [_int_in(v) for v in comp["c_row"]]
        x = [_int_in(v) for v in comp["x_row"]]
        if len(c) != n or len(x) != params.D:
            raise FormatError("component row length does not match the header")
        C = as_matrix([c], params.with_dim(n))[0]
        X = as_matrix([x], params)[0]
        model.append(C, X)
    return model


def save_model(path, model: FactorModel) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> FactorModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return model_from_dict(d)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _frac(x) -> str | None:
    return None if x is None else f"{x.numerator}/{x.denominator}"


def report_csv(report: ExperimentReport) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ExperimentReport.COLUMNS)
    for r in report.rows:
        w.writerow([r.group, r.deduced_normal, r.deduced_anomalous, fmt_ratio(r.r_A), fmt_ratio(r.r_C)])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    rows = [
        {
            "group": r.group,
            "deduced_normal": r.deduced_normal,
            "deduced_anomalous": r.deduced_anomalous,
            "r_A": fmt_ratio(r.r_A) or None,
            "r_C": fmt_ratio(r.r_C) or None,
            "r_A_exact": _frac(r.r_A),
            "r_C_exact": _frac(r.r_C),
        }
        for r in report.rows
    ]
    return json.dumps({"title": report.title, "meta": _jsonable(report.meta), "rows": rows}, indent=1) + "\n"


def report_text(report: ExperimentReport) -> str:
    """Aligned table, one line per group, ratios to two decimals."""
    head = ["I \\ O", "deduced normal", "deduced anomalous", "r_A", "r_C"]
    body = [
        [r.group, str(r.deduced_normal), str(r.deduced_anomalous), fmt_ratio(r.r_A) or "-", fmt_ratio(r.r_C) or "-"]
        for r in report.rows
    ]
    widths = [max(len(row[k]) for row in [head] + body) for k in range(len(head))]

    def line(cells):
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return " | ".join([first] + rest)

    rule = "-+-".join("-" * w for w in widths)
    out = [report.title] if report.title else []
    out += [line(head), rule] + [line(r) for r in body]
    return "\n".join(out) + "\n"


def report_from_json(text: str) -> ExperimentReport:
    d = json.loads(text)
    rows = [
        ReportRow(
            r["group"],
            int(r["deduced_normal"]),
            int(r["deduced_anomalous"]),
            None if r["r_A_exact"] is None else Fraction(r["r_A_exact"]),
            None if r["r_C_exact"] is None else Fraction(r["r_C_exact"]),
        )
        for r in d["rows"]
    ]
    return ExperimentReport(rows, d.get("title", ""), d.get("meta", {}))


def save_report(prefix, report: ExperimentReport, formats=("csv", "json", "txt")) -> list[Path]:
    """Write ``prefix.csv`` / ``prefix.json`` / ``prefix.txt`` as requested."""
    render = {"csv": report_csv, "json": report_json, "txt": report_text}
    written = []
    for fmt in formats:
        if fmt not in render:
            raise ValueError(f"unknown report format {fmt!r}")
        path = Path(f"{prefix}.{fmt}")
        path.write_text(render[fmt](report))
        written.append(path)
    return written

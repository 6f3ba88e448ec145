"""Cohort CSV ingestion and learning-curve serialisation.

Cohort CSV header: ``id,order,outcome,<predictor...>`` where ``order`` may
be omitted. Learning-curve CSV columns are fixed (see ``CURVE_COLUMNS``)
followed by one ``pass_<rule>`` column per stopping rule and
``replicate_failures``; floats carry 6 significant digits.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    DuplicateOrder,
    EmptyFile,
    MissingHeader,
    MissingValue,
    NonBinaryOutcome,
)
from .model_core import Cohort
from .sequential import (
    STAT_FIELDS,
    IncrementRecord,
    LearningCurve,
    StoppingRule,
    evaluate_rules,
    recruitment_stream,
)

log = logging.getLogger(__name__)

CURVE_COLUMNS = ("n",) + STAT_FIELDS
_PASS_RE = re.compile(r"pass_(\w+?)(>=|<=)([-+0-9.eE]+)_k(\d+)")


def read_cohort_csv(path, seed: Optional[int] = None) -> Cohort:
    """Read a cohort; rows are numbered from 1 after the header in errors.

    Without an ``order`` column the recruitment order is drawn from ``seed``,
    or follows file order when no seed is given.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        header = [h.strip() for h in header]
        has_order = len(header) > 1 and header[1] == "order"
        outcome_col = 2 if has_order else 1
        if not header or header[0] != "id" or len(header) <= outcome_col or header[outcome_col] != "outcome":
            raise MissingHeader(f"{path}: header must start with id,[order,]outcome")
        predictors = header[outcome_col + 1:]
        ids, order, y, X = [], [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"row {row_no}: expected {len(header)} fields, found {len(row)}")
            cells = [c.strip() for c in row]
            for name, cell in zip(header, cells):
                if cell == "":
                    raise MissingValue(row_no, name)
            ids.append(cells[0])
            if has_order:
                order.append(int(cells[1]))
            if cells[outcome_col] not in ("0", "1"):
                raise NonBinaryOutcome(row_no, cells[outcome_col])
            y.append(float(cells[outcome_col]))
            try:
                X.append([float(c) for c in cells[outcome_col + 1:]])
            except ValueError as exc:
                raise DataError(f"row {row_no}: {exc}") from None
    if not ids:
        raise EmptyFile(f"{path} has a header but no rows")
    n = len(ids)
    if has_order:
        if len(set(order)) != n:
            raise DuplicateOrder(f"{path}: duplicate recruitment order values")
        if sorted(order) != list(range(1, n + 1)):
            raise DataError(f"{path}: order must be a permutation of 1..{n}")
    cohort = Cohort(
        ids=np.array(ids),
        order=np.array(order) if has_order else np.arange(1, n + 1),
        y=np.array(y),
        X=np.array(X, dtype=float).reshape(n, len(predictors)),
        predictors=tuple(predictors),
    )
    if not has_order and seed is not None:
        cohort = recruitment_stream(cohort, seed)
    log.info("read %d rows with predictors %s from %s", n, ", ".join(predictors), path)
    return cohort


def write_cohort_csv(cohort: Cohort, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "order", "outcome", *cohort.predictors])
        for i in range(cohort.n):
            w.writerow([cohort.ids[i], int(cohort.order[i]), int(cohort.y[i]),
                        *(repr(float(v)) for v in cohort.X[i])])


def fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.6g}"


def printed(value):
    """``value`` rounded to exactly what the CSV prints (None for NaN)."""
    if value is None or math.isnan(value):
        return None
    return float(fmt(value))


def pass_column(rule: StoppingRule) -> str:
    return f"pass_{rule.metric}{rule.comparator}{rule.threshold:g}_k{rule.k}"


def rule_from_column(name: str) -> StoppingRule:
    m = _PASS_RE.fullmatch(name)
    if not m:
        raise DataError(f"not a pass-flag column: {name!r}")
    return StoppingRule(m.group(1), m.group(2), float(m.group(3)), int(m.group(4)))


def curve_header(curve: LearningCurve):
    return list(CURVE_COLUMNS) + [pass_column(r) for r in curve.rules] + ["replicate_failures"]


def _flag(v):
    return "" if v is None else str(int(v))


def write_learning_curve(curve: LearningCurve, path, format: str = "csv") -> None:
    if not curve.records:
        raise DataError("learning curve has no increments")
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(curve_header(curve))
            for r in curve.records:
                w.writerow([r.n, *(fmt(getattr(r, f)) for f in STAT_FIELDS),
                            *(_flag(p) for p in r.passes), r.replicate_failures])
    elif format == "json":
        Path(path).write_text(json.dumps(curve_to_dict(curve), indent=2, sort_keys=False) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def _plain(obj):
    if is_dataclass(obj):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def curve_to_dict(curve: LearningCurve, provenance: Optional[dict] = None) -> dict:
    records = []
    for r in curve.records:
        rec = {"n": r.n, "usable": r.usable}
        rec.update({f: printed(getattr(r, f)) for f in STAT_FIELDS})
        rec["passes"] = {pass_column(rule): p for rule, p in zip(curve.rules, r.passes)}
        rec["replicate_failures"] = r.replicate_failures
        records.append(rec)
    out = {
        "columns": curve_header(curve),
        "records": records,
        "rules": [str(r) for r in curve.rules],
        "n_stop": dict(curve.n_stop_per_rule),
        "n_stop_overall": curve.n_stop_overall,
        "config": _plain(curve.config) if curve.config is not None else None,
    }
    if provenance is not None:
        out["provenance"] = provenance
    return out


def _num(cell: str) -> float:
    return math.nan if cell in ("", "nan") else float(cell)


def read_learning_curve_csv(path) -> LearningCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header = rows[0]
    if tuple(header[:len(CURVE_COLUMNS)]) != CURVE_COLUMNS or header[-1] != "replicate_failures":
        raise MissingHeader(f"{path}: not a learning-curve CSV")
    rules = tuple(rule_from_column(c) for c in header[len(CURVE_COLUMNS):-1])
    records = []
    for row in rows[1:]:
        stats = {f: _num(c) for f, c in zip(STAT_FIELDS, row[1:len(CURVE_COLUMNS)])}
        flags = tuple(None if c == "" else bool(int(c)) for c in row[len(CURVE_COLUMNS):-1])
        usable = not all(math.isnan(v) for v in stats.values())
        records.append(IncrementRecord(n=int(row[0]), usable=usable, passes=flags,
                                       replicate_failures=int(row[-1]), **stats))
    per_rule, overall = evaluate_rules(records, rules)
    return LearningCurve(tuple(records), rules, per_rule, overall)

"""Feature fusion and preprocessing.

Fusion happens in two steps. :func:`build_design` joins the sources at the
ZCTA level into an unscaled :class:`RawDesign`; a :class:`Preprocessor`
fitted on a subset of its rows then standardizes and one-hot encodes it.
Keeping the two apart lets cross-validation refit the transforms inside
every fold.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import FeatureMatrix, HpiSeries
from .spatial import assign_nearest_storm, impute_nearest_zcta

log = logging.getLogger(__name__)

STORM_COLUMNS = ("max_wind", "min_pressure")
HYDRO_COLUMNS = ("dams", "outlets", "stations", "streamgages")
BUILDING_COLUMNS = ("avg_building_age", "avg_floors", "avg_elevation_diff", "avg_elevated_buildings")
NUMERIC_COLUMNS = STORM_COLUMNS + HYDRO_COLUMNS + BUILDING_COLUMNS
ORDINAL_COLUMN = "category"
CATEGORICAL_COLUMN = "occupancy_type"


# -- scalar transforms -----------------------------------------------------------


def adjust_inflation(cost: float, loss_date: dt.date, hpi: HpiSeries) -> float:
    """Express ``cost`` in baseline-month dollars."""
    if cost < 0:
        raise ValueError(f"cost: {cost} is negative")
    # ratio first so the baseline month is an exact identity
    return cost * (hpi.baseline_value / hpi.value_at(loss_date.year, loss_date.month))


def log_target(adjusted_cost):
    x = np.asarray(adjusted_cost, dtype=float)
    if np.any(x < 0):
        raise ValueError("adjusted_cost: negative cost cannot be log-transformed")
    out = np.log1p(x)
    return float(out) if out.ndim == 0 else out


def inverse_log_target(y):
    out = np.expm1(np.asarray(y, dtype=float))
    return float(out) if out.ndim == 0 else out


# -- fitted transforms -------------------------------------------------------------


@dataclass(frozen=True)
class StandardizationParams:
    columns: tuple
    means: tuple
    stds: tuple

    def to_dict(self):
        return {"columns": list(self.columns), "means": list(self.means), "stds": list(self.stds)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["columns"]), tuple(float(v) for v in d["means"]), tuple(float(v) for v in d["stds"]))


def fit_standardizer(rows, columns: Optional[Sequence[str]] = None) -> StandardizationParams:
    """Column means and population standard deviations."""
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 1:
        raise ValueError("rows: need at least one row to fit a standardizer")
    if columns is None:
        columns = [f"x{j}" for j in range(x.shape[1])]
    means = x.mean(axis=0)
    stds = np.sqrt(((x - means) ** 2).mean(axis=0))
    return StandardizationParams(tuple(columns), tuple(float(m) for m in means), tuple(float(s) for s in stds))


def apply_standardizer(params: StandardizationParams, rows) -> np.ndarray:
    x = np.asarray(rows, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    means = np.asarray(params.means)
    stds = np.asarray(params.stds)
    safe = np.where(stds > 0, stds, 1.0)
    out = np.where(stds > 0, (x - means) / safe, 0.0)
    return out[:, 0] if squeeze else out


@dataclass(frozen=True)
class OneHotSpec:
    column: str
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels: duplicate category labels")

    @property
    def output_columns(self) -> tuple:
        return tuple(f"{self.column}={lab}" for lab in self.labels)

    @classmethod
    def fit(cls, column, labels):
        return cls(column, tuple(sorted(set(labels))))


class UnseenLabelCounter:
    def __init__(self):
        self.count = 0


def one_hot(spec: OneHotSpec, label: str, counter: Optional[UnseenLabelCounter] = None) -> np.ndarray:
    """Indicator vector; an unseen label gives all zeros and is counted."""
    vec = np.zeros(len(spec.labels))
    try:
        vec[spec.labels.index(label)] = 1.0
    except ValueError:
        if counter is not None:
            counter.count += 1
        log.warning("unseen %s label %r encoded as all zeros", spec.column, label)
    return vec


# -- fused design --------------------------------------------------------------------


@dataclass(frozen=True)
class RawDesign:
    """Unscaled per-ZCTA features, one row per ZCTA with losses."""

    row_ids: tuple
    numeric: np.ndarray  # n x len(NUMERIC_COLUMNS)
    category: np.ndarray  # n, Saffir-Simpson category of nearest storm
    occupancy: tuple  # n labels, or () when the categorical column is disabled
    target: np.ndarray
    adjusted_cost: np.ndarray
    storm_distance_km: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    def subset(self, idx) -> "RawDesign":
        idx = np.asarray(idx, dtype=int)
        return RawDesign(
            tuple(self.row_ids[i] for i in idx),
            self.numeric[idx],
            self.category[idx],
            tuple(self.occupancy[i] for i in idx) if self.occupancy else (),
            self.target[idx],
            self.adjusted_cost[idx],
            self.storm_distance_km[idx],
        )

    def with_numeric(self, numeric) -> "RawDesign":
        return RawDesign(
            self.row_ids,
            np.asarray(numeric, dtype=float),
            self.category,
            self.occupancy,
            self.target,
            self.adjusted_cost,
            self.storm_distance_km,
        )


def _first_by_zcta(records, source):
    out = {}
    for r in records:
        if r.zcta_id in out:
            log.warning("%s: duplicate row for ZCTA %s ignored", source, r.zcta_id)
            continue
        out[r.zcta_id] = r
    return out


def _imputed_column(by_zcta, attr, centroids, wanted):
    values = {z: None for z in centroids}
    for z, rec in by_zcta.items():
        if z in centroids:
            values[z] = getattr(rec, attr)
    if all(values[z] is not None for z in wanted):
        return [values[z] for z in wanted]
    filled = impute_nearest_zcta(values, centroids)
    return [filled[z] for z in wanted]


def build_design(bundle, include_occupancy: bool = True) -> RawDesign:
    """Join all sources onto the ZCTAs present in the loss data."""
    if not bundle.losses:
        raise ValueError("losses: bundle has no loss records")
    centroids = bundle.centroids
    grouped = {}
    for rec in bundle.losses:
        grouped.setdefault(rec.zcta_id, []).append(rec)
    dropped = sorted(z for z in grouped if z not in centroids)
    if dropped:
        log.warning("%d loss ZCTAs lack a centroid and are dropped", len(dropped))
    ids = sorted(z for z in grouped if z in centroids)
    if not ids:
        raise ValueError("losses: no loss ZCTA has a centroid")

    zrecs = [z for z in bundle.zctas if z.zcta_id in grouped]
    zrecs.sort(key=lambda z: z.zcta_id)
    storms = assign_nearest_storm(zrecs, bundle.storms)

    hydro = _first_by_zcta(bundle.hydro, "hydro")
    buildings = _first_by_zcta(bundle.buildings, "buildings")
    columns = {}
    for c in STORM_COLUMNS:
        columns[c] = [getattr(storms[z], c) for z in ids]
    for c in HYDRO_COLUMNS:
        columns[c] = _imputed_column(hydro, c, centroids, ids)
    for c in BUILDING_COLUMNS:
        columns[c] = _imputed_column(buildings, c, centroids, ids)
    numeric = np.column_stack([np.asarray(columns[c], dtype=float) for c in NUMERIC_COLUMNS])
    occupancy = tuple(_imputed_column(buildings, "occupancy_type", centroids, ids)) if include_occupancy else ()

    adjusted = []
    for z in ids:
        recs = grouped[z]
        latest = max(r.loss_date for r in recs)
        total = math.fsum(r.total_cost for r in recs)
        adjusted.append(adjust_inflation(total, latest, bundle.hpi))
    adjusted = np.asarray(adjusted)
    return RawDesign(
        tuple(ids),
        numeric,
        np.array([storms[z].category for z in ids], dtype=float),
        occupancy,
        log_target(adjusted),
        adjusted,
        np.array([storms[z].distance_km for z in ids]),
    )


class Preprocessor:
    """Standardizer plus one-hot encoder fitted on training rows only."""

    def __init__(self, scaler: StandardizationParams, onehot: Optional[OneHotSpec]):
        self.scaler = scaler
        self.onehot = onehot
        self.unseen = UnseenLabelCounter()

    @classmethod
    def fit(cls, design: RawDesign, rows=None) -> "Preprocessor":
        d = design if rows is None else design.subset(rows)
        scaler = fit_standardizer(d.numeric, NUMERIC_COLUMNS)
        onehot = OneHotSpec.fit(CATEGORICAL_COLUMN, d.occupancy) if design.occupancy else None
        return cls(scaler, onehot)

    @property
    def column_names(self) -> tuple:
        extra = self.onehot.output_columns if self.onehot is not None else ()
        return tuple(NUMERIC_COLUMNS) + (ORDINAL_COLUMN,) + extra

    def transform(self, design: RawDesign, rows=None) -> np.ndarray:
        d = design if rows is None else design.subset(rows)
        parts = [apply_standardizer(self.scaler, d.numeric), d.category[:, None]]
        if self.onehot is not None:
            if not d.occupancy:
                raise ValueError("occupancy: design lacks the occupancy column the encoder was fitted with")
            parts.append(np.vstack([one_hot(self.onehot, lab, self.unseen) for lab in d.occupancy]))
        return np.hstack(parts)

    def to_dict(self) -> dict:
        return {
            "standardizer": self.scaler.to_dict(),
            "one_hot": None if self.onehot is None else {"column": self.onehot.column, "labels": list(self.onehot.labels)},
        }

    @classmethod
    def from_dict(cls, d) -> "Preprocessor":
        oh = d.get("one_hot")
        return cls(
            StandardizationParams.from_dict(d["standardizer"]),
            None if oh is None else OneHotSpec(oh["column"], tuple(oh["labels"])),
        )


def to_matrix(design: RawDesign, pre: Preprocessor, rows=None) -> FeatureMatrix:
    d = design if rows is None else design.subset(rows)
    return FeatureMatrix(pre.column_names, pre.transform(d), d.target, d.row_ids)


def assemble(bundle, seed: int = 0, include_occupancy: bool = True) -> FeatureMatrix:
    """Full-data feature matrix. ``seed`` is accepted for interface symmetry; assembly is not random."""
    design = build_design(bundle, include_occupancy)
    return to_matrix(design, Preprocessor.fit(design))


# -- CSV interchange ---------------------------------------------------------------


def matrix_to_csv(fm: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["zcta", *fm.column_names, "target"])
    for rid, row, t in zip(fm.row_ids, fm.rows, fm.target):
        w.writerow([rid, *(repr(float(v)) for v in row), repr(float(t))])
    return buf.getvalue()


def matrix_from_csv(text: str) -> FeatureMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if not header or header[0] != "zcta" or header[-1] != "target":
        raise ValueError("header: feature matrix CSV must start with 'zcta' and end with 'target'")
    ids, rows, target = [], [], []
    for row in reader:
        if not row:
            continue
        ids.append(row[0])
        rows.append([float(v) for v in row[1:-1]])
        target.append(float(row[-1]))
    return FeatureMatrix(tuple(header[1:-1]), np.array(rows, dtype=float).reshape(len(ids), len(header) - 2), target, ids)


DESIGN_HEADER = ("zcta",) + NUMERIC_COLUMNS + (ORDINAL_COLUMN, CATEGORICAL_COLUMN, "target")


def design_to_csv(design: RawDesign) -> str:
    """Unscaled design rows; this is the input format for prediction."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DESIGN_HEADER)
    for i, rid in enumerate(design.row_ids):
        occ = design.occupancy[i] if design.occupancy else ""
        w.writerow(
            [rid, *(repr(float(v)) for v in design.numeric[i]), repr(float(design.category[i])), occ, repr(float(design.target[i]))]
        )
    return buf.getvalue()


def design_from_csv(text: str) -> RawDesign:
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in DESIGN_HEADER[:-1] if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"header: design CSV missing columns {missing}")
    ids, numeric, cat, occ, target = [], [], [], [], []
    for row in reader:
        ids.append(row["zcta"])
        numeric.append([float(row[c]) for c in NUMERIC_COLUMNS])
        cat.append(float(row[ORDINAL_COLUMN]))
        occ.append(row[CATEGORICAL_COLUMN])
        t = row.get("target", "")
        target.append(float(t) if t not in ("", None) else math.nan)
    n = len(ids)
    tgt = np.asarray(target, dtype=float)
    return RawDesign(
        tuple(ids),
        np.asarray(numeric, dtype=float).reshape(n, len(NUMERIC_COLUMNS)),
        np.asarray(cat, dtype=float),
        tuple(occ) if any(occ) else (),
        tgt,
        inverse_log_target(np.where(np.isnan(tgt), 0.0, tgt)) if n else np.zeros(0),
        np.full(n, math.nan),
    )

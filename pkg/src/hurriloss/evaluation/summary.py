"""Per-ZCTA summary table for external choropleth plotting."""

from __future__ import annotations

import csv
import io

import numpy as np

from ..features import HYDRO_COLUMNS, NUMERIC_COLUMNS, RawDesign

SUMMARY_COLUMNS = (
    "zcta",
    "lat",
    "lon",
    "adjusted_total_cost",
    "dams",
    "outlets",
    "stations",
    "streamgages",
    "avg_elevated_buildings",
    "nearest_storm_wind",
    "predicted_log_cost",
)


def summary_rows(bundle, design: RawDesign, predictions=None) -> list:
    centroids = bundle.centroids
    col = {c: i for i, c in enumerate(NUMERIC_COLUMNS)}
    if predictions is not None:
        predictions = np.asarray(predictions, dtype=float)
        if predictions.shape != (design.n_rows,):
            raise ValueError(f"predictions: expected {design.n_rows} values, got {predictions.shape}")
    rows = []
    for i, z in enumerate(design.row_ids):
        c = centroids[z]
        num = design.numeric[i]
        rows.append(
            {
                "zcta": z,
                "lat": c.lat,
                "lon": c.lon,
                "adjusted_total_cost": float(design.adjusted_cost[i]),
                **{h: float(num[col[h]]) for h in HYDRO_COLUMNS},
                "avg_elevated_buildings": float(num[col["avg_elevated_buildings"]]),
                "nearest_storm_wind": float(num[col["max_wind"]]),
                "predicted_log_cost": None if predictions is None else float(predictions[i]),
            }
        )
    return rows


def export_zcta_summary(bundle, design: RawDesign, predictions=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in summary_rows(bundle, design, predictions):
        w.writerow(["" if row[c] is None else (row[c] if c == "zcta" else repr(row[c])) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def parse_zcta_summary(text: str) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({c: (row[c] if c == "zcta" else (None if row[c] == "" else float(row[c]))) for c in SUMMARY_COLUMNS})
    return out

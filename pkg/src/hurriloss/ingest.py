"""CSV ingestion of the six source tables into a :class:`DatasetBundle`.

Rows that violate a record invariant are rejected and counted; only a
header missing required columns (or an HPI series that is not strictly
increasing) aborts the parse.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, TextIO

from .core import (
    BuildingAggregates,
    GeoPoint,
    HpiSeries,
    HurricaneRecord,
    HydroCounts,
    LossRecord,
    ZctaRecord,
)

log = logging.getLogger(__name__)

STORM_COLUMNS = ("storm_id", "name", "observed_at", "lat", "lon", "max_wind_kt", "category", "min_pressure_mb")
HYDRO_COLUMNS = ("zcta", "dams", "outlets", "stations", "streamgages")
BUILDING_COLUMNS = (
    "zcta",
    "avg_building_age",
    "avg_floors",
    "avg_elevation_diff_ft",
    "avg_elevated_buildings",
    "occupancy_type",
)
LOSS_COLUMNS = ("zcta", "loss_date", "building_cost_usd", "contents_cost_usd")
HPI_COLUMNS = ("month", "value")
CENTROID_COLUMNS = ("zcta", "lat", "lon")

FILENAMES = {
    "storms": "storms.csv",
    "hydro": "hydro.csv",
    "buildings": "buildings.csv",
    "losses": "losses.csv",
    "hpi": "hpi.csv",
    "zctas": "zcta_centroids.csv",
}


class IngestError(ValueError):
    """Schema-level problem that makes a whole source unusable."""


@dataclass
class SourceReport:
    source: str
    total: int = 0
    accepted: int = 0
    rejected: list = field(default_factory=list)  # (line number, reason)
    missing: dict = field(default_factory=dict)  # column -> count of empty cells
    warnings: list = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected_count,
            "rejections": [{"line": ln, "reason": r} for ln, r in self.rejected],
            "missing": dict(sorted(self.missing.items())),
            "warnings": len(self.warnings),
        }


@dataclass
class IngestReport:
    sources: dict = field(default_factory=dict)
    unmatched_zctas: dict = field(default_factory=dict)  # source -> sorted ids

    def to_dict(self) -> dict:
        return {
            "sources": {k: v.to_dict() for k, v in self.sources.items()},
            "unmatched_zctas": self.unmatched_zctas,
        }

    def summary(self) -> str:
        lines = []
        for name, rep in self.sources.items():
            lines.append(f"{name:10s} total={rep.total} accepted={rep.accepted} rejected={rep.rejected_count}")
            for ln, reason in rep.rejected[:10]:
                lines.append(f"    line {ln}: {reason}")
        for name, ids in self.unmatched_zctas.items():
            if ids:
                lines.append(f"{name:10s} {len(ids)} ZCTA ids without centroid: {', '.join(ids[:10])}")
        return "\n".join(lines)


@dataclass(frozen=True)
class DatasetBundle:
    zctas: tuple
    storms: tuple
    hydro: tuple
    buildings: tuple
    losses: tuple
    hpi: HpiSeries
    occupancy_labels: tuple = ()

    def __post_init__(self):
        for name in ("zctas", "storms", "hydro", "buildings", "losses", "occupancy_labels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ids = [z.zcta_id for z in self.zctas]
        if len(set(ids)) != len(ids):
            raise ValueError("zctas: duplicate zcta_id")

    @property
    def centroids(self) -> dict:
        return {z.zcta_id: z.centroid for z in self.zctas}


# -- cell parsing ------------------------------------------------------------


def _float(cell: str, name: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ValueError(f"{name}: not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{name}: not finite: {cell!r}")
    return v


def _opt_float(cell: str, name: str) -> Optional[float]:
    return None if cell.strip() == "" else _float(cell, name)


def _int(cell: str, name: str) -> int:
    v = _float(cell, name)
    if v != int(v):
        raise ValueError(f"{name}: not an integer: {cell!r}")
    return int(v)


def _opt_int(cell: str, name: str) -> Optional[int]:
    return None if cell.strip() == "" else _int(cell, name)


def parse_timestamp(text: str) -> dt.datetime:
    s = text.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    t = dt.datetime.fromisoformat(s)
    if t.tzinfo is None:
        return t.replace(tzinfo=dt.timezone.utc)
    return t.astimezone(dt.timezone.utc)


def format_timestamp(t: dt.datetime) -> str:
    return t.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_month(text: str) -> tuple:
    s = text.strip()
    parts = s.split("-")
    if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
        raise ValueError(f"month: expected YYYY-MM, got {text!r}")
    y, m = int(parts[0]), int(parts[1])
    if not 1 <= m <= 12:
        raise ValueError(f"month: month number out of range in {text!r}")
    return (y, m)


def format_number(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


# -- generic reader ------------------------------------------------------------


def _read(stream: TextIO, source: str, columns: tuple, build: Callable, nullable=()) -> tuple:
    reader = csv.reader(stream)
    report = SourceReport(source)
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError(f"{source}: empty file, missing header") from None
    header = [h.strip().lstrip("﻿") for h in header]
    absent = [c for c in columns if c not in header]
    if absent:
        raise IngestError(f"{source}: header missing columns {absent}")
    pos = {c: header.index(c) for c in columns}
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        report.total += 1
        if len(row) < len(header):
            report.rejected.append((lineno, f"expected {len(header)} cells, got {len(row)}"))
            continue
        cells = {c: row[pos[c]].strip() for c in columns}
        for c, v in cells.items():
            if v == "":
                report.missing[c] = report.missing.get(c, 0) + 1
        empty_required = [c for c, v in cells.items() if v == "" and c not in nullable]
        if empty_required:
            report.rejected.append((lineno, f"missing required value in {empty_required}"))
            continue
        try:
            rec = build(cells, report)
        except ValueError as exc:
            report.rejected.append((lineno, str(exc)))
            continue
        records.append(rec)
        report.accepted += 1
    if report.rejected:
        log.info("%s: rejected %d of %d rows", source, report.rejected_count, report.total)
    return records, report


def _build_storm(c, report):
    rec = HurricaneRecord(
        storm_id=c["storm_id"],
        name=c["name"],
        observed_at=parse_timestamp(c["observed_at"]),
        position=GeoPoint(_float(c["lat"], "lat"), _float(c["lon"], "lon")),
        max_wind=_float(c["max_wind_kt"], "max_wind_kt"),
        category=_int(c["category"], "category"),
        min_pressure=_float(c["min_pressure_mb"], "min_pressure_mb"),
    )
    if not rec.category_consistent:
        report.warnings.append(f"{rec.storm_id}: category {rec.category} inconsistent with {rec.max_wind} kt")
    return rec


def parse_storms(stream: TextIO) -> tuple:
    return _read(stream, "storms", STORM_COLUMNS, _build_storm, nullable=("name",))


def parse_hydro(stream: TextIO) -> tuple:
    def build(c, _):
        return HydroCounts(
            c["zcta"],
            _opt_int(c["dams"], "dams"),
            _opt_int(c["outlets"], "outlets"),
            _opt_int(c["stations"], "stations"),
            _opt_int(c["streamgages"], "streamgages"),
        )

    return _read(stream, "hydro", HYDRO_COLUMNS, build, nullable=HYDRO_COLUMNS[1:])


def parse_buildings(stream: TextIO, labels: Optional[Iterable[str]] = None) -> tuple:
    """Parse building aggregates; ``labels`` closes the occupancy label set."""
    allowed = None if labels is None else set(labels)

    def build(c, _):
        occ = c["occupancy_type"]
        if allowed is not None and occ not in allowed:
            raise ValueError(f"occupancy_type: unknown label {occ!r}")
        return BuildingAggregates(
            c["zcta"],
            _opt_float(c["avg_building_age"], "avg_building_age"),
            _opt_float(c["avg_floors"], "avg_floors"),
            _opt_float(c["avg_elevation_diff_ft"], "avg_elevation_diff_ft"),
            _opt_float(c["avg_elevated_buildings"], "avg_elevated_buildings"),
            occ,
        )

    return _read(stream, "buildings", BUILDING_COLUMNS, build, nullable=BUILDING_COLUMNS[1:5])


def parse_losses(stream: TextIO) -> tuple:
    def build(c, _):
        try:
            day = dt.date.fromisoformat(c["loss_date"])
        except ValueError:
            raise ValueError(f"loss_date: expected YYYY-MM-DD, got {c['loss_date']!r}") from None
        return LossRecord(
            c["zcta"],
            day,
            _float(c["building_cost_usd"], "building_cost_usd"),
            _float(c["contents_cost_usd"], "contents_cost_usd"),
        )

    return _read(stream, "losses", LOSS_COLUMNS, build)


def parse_hpi(stream: TextIO, baseline_value: Optional[float] = None) -> tuple:
    def build(c, _):
        month = parse_month(c["month"])
        value = _float(c["value"], "value")
        if value <= 0:
            raise ValueError(f"value: index value {value} is not positive")
        return month, value

    rows, report = _read(stream, "hpi", HPI_COLUMNS, build)
    for a, b in zip(rows, rows[1:]):
        if b[0] <= a[0]:
            raise IngestError("months not strictly increasing")
    kwargs = {} if baseline_value is None else {"baseline_value": baseline_value}
    series = HpiSeries(tuple(r[0] for r in rows), tuple(r[1] for r in rows), **kwargs)
    return series, report


def parse_zcta_centroids(stream: TextIO) -> tuple:
    def build(c, _):
        return ZctaRecord(c["zcta"], GeoPoint(_float(c["lat"], "lat"), _float(c["lon"], "lon")))

    records, report = _read(stream, "zctas", CENTROID_COLUMNS, build)
    seen, unique = set(), []
    for rec in records:
        if rec.zcta_id in seen:
            report.accepted -= 1
            report.rejected.append((0, f"zcta: duplicate id {rec.zcta_id}"))
            continue
        seen.add(rec.zcta_id)
        unique.append(rec)
    return unique, report


# -- serialization -------------------------------------------------------------


def _write(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def storms_csv(storms) -> str:
    return _write(
        STORM_COLUMNS,
        (
            [
                s.storm_id,
                s.name,
                format_timestamp(s.observed_at),
                format_number(s.position.lat),
                format_number(s.position.lon),
                format_number(s.max_wind),
                str(s.category),
                format_number(s.min_pressure),
            ]
            for s in storms
        ),
    )


def hydro_csv(hydro) -> str:
    return _write(
        HYDRO_COLUMNS,
        ([h.zcta_id] + [format_number(getattr(h, c)) for c in HYDRO_COLUMNS[1:]] for h in hydro),
    )


def buildings_csv(buildings) -> str:
    return _write(
        BUILDING_COLUMNS,
        (
            [
                b.zcta_id,
                format_number(b.avg_building_age),
                format_number(b.avg_floors),
                format_number(b.avg_elevation_diff),
                format_number(b.avg_elevated_buildings),
                b.occupancy_type,
            ]
            for b in buildings
        ),
    )


def losses_csv(losses) -> str:
    return _write(
        LOSS_COLUMNS,
        (
            [l.zcta_id, l.loss_date.isoformat(), format_number(l.building_cost), format_number(l.contents_cost)]
            for l in losses
        ),
    )


def hpi_csv(hpi: HpiSeries) -> str:
    return _write(HPI_COLUMNS, ([f"{y:04d}-{m:02d}", format_number(v)] for (y, m), v in zip(hpi.months, hpi.values)))


def centroids_csv(zctas) -> str:
    return _write(
        CENTROID_COLUMNS,
        ([z.zcta_id, format_number(z.centroid.lat), format_number(z.centroid.lon)] for z in zctas),
    )


def bundle_to_csv(bundle: DatasetBundle) -> dict:
    """Map of file name to CSV text for every source table."""
    return {
        FILENAMES["storms"]: storms_csv(bundle.storms),
        FILENAMES["hydro"]: hydro_csv(bundle.hydro),
        FILENAMES["buildings"]: buildings_csv(bundle.buildings),
        FILENAMES["losses"]: losses_csv(bundle.losses),
        FILENAMES["hpi"]: hpi_csv(bundle.hpi),
        FILENAMES["zctas"]: centroids_csv(bundle.zctas),
    }


def write_bundle(bundle: DatasetBundle, directory) -> list:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, text in bundle_to_csv(bundle).items():
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def parse_bundle(texts: dict, occupancy_labels=None, hpi_baseline=None) -> tuple:
    """Parse a bundle from a mapping of file name to CSV text."""

    def stream(key):
        return io.StringIO(texts[FILENAMES[key]])

    report = IngestReport()
    zctas, report.sources["zctas"] = parse_zcta_centroids(stream("zctas"))
    storms, report.sources["storms"] = parse_storms(stream("storms"))
    hydro, report.sources["hydro"] = parse_hydro(stream("hydro"))
    buildings, report.sources["buildings"] = parse_buildings(stream("buildings"), occupancy_labels)
    losses, report.sources["losses"] = parse_losses(stream("losses"))
    hpi, report.sources["hpi"] = parse_hpi(stream("hpi"), hpi_baseline)

    known = {z.zcta_id for z in zctas}
    for name, recs in (("hydro", hydro), ("buildings", buildings), ("losses", losses)):
        report.unmatched_zctas[name] = sorted({r.zcta_id for r in recs} - known)

    labels = tuple(occupancy_labels) if occupancy_labels is not None else tuple(
        sorted({b.occupancy_type for b in buildings})
    )
    bundle = DatasetBundle(zctas, storms, hydro, buildings, losses, hpi, labels)
    return bundle, report


def read_bundle(directory, occupancy_labels=None, hpi_baseline=None) -> tuple:
    texts = {}
    for fname in FILENAMES.values():
        path = os.path.join(directory, fname)
        with open(path, encoding="utf-8", newline="") as fh:
            texts[fname] = fh.read()
    return parse_bundle(texts, occupancy_labels, hpi_baseline)


def read_bundle_paths(paths: dict, occupancy_labels=None, hpi_baseline=None) -> tuple:
    """Like :func:`read_bundle` but with an explicit path per source key."""
    texts = {}
    for key, fname in FILENAMES.items():
        with open(paths[key], encoding="utf-8", newline="") as fh:
            texts[fname] = fh.read()
    return parse_bundle(texts, occupancy_labels, hpi_baseline)

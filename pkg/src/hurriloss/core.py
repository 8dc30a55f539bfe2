"""Shared domain types and seed derivation.

All records are frozen dataclasses validated on construction; a violated
invariant raises ``ValueError`` whose message starts with the field name.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import math
import re
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

EARTH_RADIUS_KM = 6371.0088
HPI_BASELINE = 820.29

_ZCTA_RE = re.compile(r"^[0-9]{5}$")

# Saffir-Simpson lower wind bounds (knots) for categories 1..5.
SAFFIR_SIMPSON_KT = (64.0, 83.0, 96.0, 113.0, 137.0)

_U64 = (1 << 64) - 1


def saffir_simpson_category(max_wind_kt: float) -> int:
    """Category 0-5 implied by a sustained wind speed in knots."""
    cat = 0
    for i, lower in enumerate(SAFFIR_SIMPSON_KT, start=1):
        if max_wind_kt >= lower:
            cat = i
    return cat


def _finite(name, value):
    if value is None or not math.isfinite(value):
        raise ValueError(f"{name}: must be a finite number, got {value!r}")


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        _finite("lat", self.lat)
        _finite("lon", self.lon)
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat: {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon: {self.lon} outside [-180, 180]")


def validate_zcta_id(zcta_id: str) -> str:
    if not isinstance(zcta_id, str) or not _ZCTA_RE.match(zcta_id):
        raise ValueError(f"zcta_id: expected five decimal digits, got {zcta_id!r}")
    return zcta_id


@dataclass(frozen=True)
class ZctaRecord:
    zcta_id: str
    centroid: GeoPoint

    def __post_init__(self):
        validate_zcta_id(self.zcta_id)


@dataclass(frozen=True)
class HurricaneRecord:
    storm_id: str
    observed_at: dt.datetime
    position: GeoPoint
    max_wind: float
    category: int
    min_pressure: float
    name: str = ""

    def __post_init__(self):
        if not self.storm_id:
            raise ValueError("storm_id: must be non-empty")
        if self.observed_at.tzinfo is None:
            object.__setattr__(self, "observed_at", self.observed_at.replace(tzinfo=dt.timezone.utc))
        _finite("max_wind", self.max_wind)
        if self.max_wind < 0:
            raise ValueError(f"max_wind: {self.max_wind} is negative")
        if isinstance(self.category, bool) or int(self.category) != self.category:
            raise ValueError(f"category: {self.category!r} is not an integer")
        if not 0 <= self.category <= 5:
            raise ValueError("category out of range")
        _finite("min_pressure", self.min_pressure)
        if not 800.0 < self.min_pressure < 1100.0:
            raise ValueError(f"min_pressure: {self.min_pressure} outside (800, 1100)")

    @property
    def category_consistent(self) -> bool:
        return saffir_simpson_category(self.max_wind) == self.category


def _count(name, value):
    if value is None:
        return
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise ValueError(f"{name}: must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class HydroCounts:
    """Water-feature counts per ZCTA. ``None`` marks a missing cell."""

    zcta_id: str
    dams: Optional[int]
    outlets: Optional[int]
    stations: Optional[int]
    streamgages: Optional[int]

    def __post_init__(self):
        validate_zcta_id(self.zcta_id)
        for name in ("dams", "outlets", "stations", "streamgages"):
            _count(name, getattr(self, name))


@dataclass(frozen=True)
class BuildingAggregates:
    """Built-environment aggregates per ZCTA. ``None`` marks a missing cell."""

    zcta_id: str
    avg_building_age: Optional[float]
    avg_floors: Optional[float]
    avg_elevation_diff: Optional[float]
    avg_elevated_buildings: Optional[float]
    occupancy_type: str

    def __post_init__(self):
        validate_zcta_id(self.zcta_id)
        for name in ("avg_building_age", "avg_floors", "avg_elevation_diff", "avg_elevated_buildings"):
            v = getattr(self, name)
            if v is None:
                continue
            _finite(name, v)
            if name != "avg_elevation_diff" and v < 0:
                raise ValueError(f"{name}: {v} is negative")
        if not self.occupancy_type:
            raise ValueError("occupancy_type: must be non-empty")


@dataclass(frozen=True)
class LossRecord:
    zcta_id: str
    loss_date: dt.date
    building_cost: float
    contents_cost: float

    def __post_init__(self):
        validate_zcta_id(self.zcta_id)
        for name in ("building_cost", "contents_cost"):
            v = getattr(self, name)
            _finite(name, v)
            if v < 0:
                raise ValueError(f"{name}: {v} is negative")

    @property
    def total_cost(self) -> float:
        return self.building_cost + self.contents_cost


@dataclass(frozen=True)
class HpiSeries:
    """Monthly house price index; months are ``(year, month)`` tuples."""

    months: tuple
    values: tuple
    baseline_value: float = HPI_BASELINE

    def __post_init__(self):
        object.__setattr__(self, "months", tuple(tuple(m) for m in self.months))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.months) != len(self.values):
            raise ValueError("values: length differs from months")
        for a, b in zip(self.months, self.months[1:]):
            if b <= a:
                raise ValueError("months not strictly increasing")
        for v in self.values:
            _finite("values", v)
            if v <= 0:
                raise ValueError(f"values: index value {v} is not positive")
        _finite("baseline_value", self.baseline_value)
        if self.baseline_value <= 0:
            raise ValueError("baseline_value: must be positive")

    def value_at(self, year: int, month: int) -> float:
        """Index for a month, falling back to the nearest preceding month."""
        import bisect

        if not self.months:
            raise ValueError("months: HPI series is empty")
        i = bisect.bisect_right(self.months, (year, month)) - 1
        if i < 0:
            first = self.months[0]
            raise ValueError(
                f"loss month {year:04d}-{month:02d} precedes first HPI month {first[0]:04d}-{first[1]:02d}"
            )
        return self.values[i]


@dataclass(frozen=True)
class FeatureMatrix:
    column_names: tuple
    rows: np.ndarray
    target: np.ndarray
    row_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        rows = np.array(self.rows, dtype=float, copy=True)
        target = np.array(self.target, dtype=float, copy=True)
        if rows.ndim != 2:
            rows = rows.reshape(len(self.row_ids), len(self.column_names))
        rows.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "target", target)
        if len(set(self.column_names)) != len(self.column_names):
            raise ValueError("column_names: duplicate names")
        if rows.shape[1] != len(self.column_names):
            raise ValueError(f"rows: {rows.shape[1]} columns but {len(self.column_names)} names")
        if not (rows.shape[0] == target.shape[0] == len(self.row_ids)):
            raise ValueError("target: row counts of rows, target and row_ids differ")
        if not np.all(np.isfinite(rows)):
            raise ValueError("rows: contains NaN or infinite values")
        if not np.all(np.isfinite(target)):
            raise ValueError("target: contains NaN or infinite values")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def derive_seed(master: int, label: str, index: int = 0) -> int:
    """Mix a master seed, a purpose label and an index into a 64-bit sub-seed."""
    if not 0 <= master <= _U64:
        raise ValueError(f"master: {master} is not a 64-bit unsigned integer")
    payload = struct.pack("<Qq", master, index) + label.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def rng_for(master: int, label: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, label, index)))


__all__ = [
    "EARTH_RADIUS_KM",
    "HPI_BASELINE",
    "GeoPoint",
    "ZctaRecord",
    "HurricaneRecord",
    "HydroCounts",
    "BuildingAggregates",
    "LossRecord",
    "HpiSeries",
    "FeatureMatrix",
    "derive_seed",
    "rng_for",
    "saffir_simpson_category",
]

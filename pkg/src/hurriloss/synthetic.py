"""Deterministic synthetic bundles with a known log-loss law.

The latent target for ZCTA i is::

    log_loss_i = INTERCEPT + COEF_WIND * wind_i + COEF_ELEVATED * elevated_i
                 + COEF_ELEVATION_DIFF * elev_diff_i + COEF_DAMS * dams_i + eps_i

where every regressor is standardized (population std) over the ZCTAs and
``eps_i ~ Normal(0, noise_sigma)``. Costs are back-derived so that the
feature pipeline (inflation adjustment then ``log1p``) recovers log_loss.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .core import (
    HPI_BASELINE,
    BuildingAggregates,
    GeoPoint,
    HpiSeries,
    HurricaneRecord,
    HydroCounts,
    LossRecord,
    ZctaRecord,
    rng_for,
    saffir_simpson_category,
)
from .ingest import DatasetBundle
from .spatial import assign_nearest_storm

INTERCEPT = 10.0
COEF_WIND = 1.5
COEF_ELEVATED = 1.0
COEF_ELEVATION_DIFF = -0.8
COEF_DAMS = 0.5

LAT_RANGE = (24.5, 31.0)
LON_RANGE = (-87.6, -80.0)

OCCUPANCY_LABELS = ("multi_family", "non_residential", "single_family")
FIXES_PER_STORM = 3
HPI_START = (2000, 1)
HPI_END = (2025, 1)
LOSS_YEARS = (2005, 2024)
BUILDING_SHARE = 0.7


def generator_constants() -> dict:
    return {
        "intercept": INTERCEPT,
        "coef_wind": COEF_WIND,
        "coef_elevated_buildings": COEF_ELEVATED,
        "coef_elevation_diff": COEF_ELEVATION_DIFF,
        "coef_dams": COEF_DAMS,
        "lat_range": list(LAT_RANGE),
        "lon_range": list(LON_RANGE),
        "hpi_baseline": HPI_BASELINE,
    }


def standardize(values) -> np.ndarray:
    """Population z-score; constant columns map to zero."""
    x = np.asarray(values, dtype=float)
    mean = x.mean()
    std = x.std()
    if std == 0:
        return np.zeros_like(x)
    return (x - mean) / std


def generative_log_loss(wind, elevated, elev_diff, dams, noise=0.0):
    """Apply the generative law to already-standardized regressors."""
    return (
        INTERCEPT
        + COEF_WIND * np.asarray(wind)
        + COEF_ELEVATED * np.asarray(elevated)
        + COEF_ELEVATION_DIFF * np.asarray(elev_diff)
        + COEF_DAMS * np.asarray(dams)
        + noise
    )


def population_r2(noise_sigma: float) -> float:
    signal = COEF_WIND**2 + COEF_ELEVATED**2 + COEF_ELEVATION_DIFF**2 + COEF_DAMS**2
    return signal / (signal + noise_sigma**2)


def _months(start, end):
    y, m = start
    out = []
    while (y, m) <= end:
        out.append((y, m))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def generate_synthetic(seed: int, n_zctas: int, n_storms: int, noise_sigma: float = 0.3) -> DatasetBundle:
    if n_zctas < 1:
        raise ValueError("n_zctas: must be at least 1")
    if n_storms < 1:
        raise ValueError("n_storms: must be at least 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma: must be non-negative")
    if n_zctas > 100_000:
        raise ValueError("n_zctas: at most 100000 five-digit ids exist")

    # ZCTAs
    rng = rng_for(seed, "synth-zcta")
    ids = np.sort(rng.choice(100_000, size=n_zctas, replace=False))
    lat = rng.uniform(*LAT_RANGE, size=n_zctas)
    lon = rng.uniform(*LON_RANGE, size=n_zctas)
    zctas = [ZctaRecord(f"{i:05d}", GeoPoint(float(a), float(b))) for i, a, b in zip(ids, lat, lon)]

    # storms: a few fixes each, the first being the peak-intensity fix
    rng = rng_for(seed, "synth-storm")
    storms = []
    epoch = dt.datetime(2004, 1, 1, tzinfo=dt.timezone.utc)
    for s in range(n_storms):
        peak = float(rng.uniform(35.0, 160.0))
        start = epoch + dt.timedelta(hours=6 * int(rng.integers(0, 20 * 365 * 4)))
        for k in range(FIXES_PER_STORM):
            wind = peak * (1.0 - 0.2 * k)
            storms.append(
                HurricaneRecord(
                    storm_id=f"SYN{s + 1:05d}",
                    name=f"SYNTH{s + 1}",
                    observed_at=start + dt.timedelta(hours=6 * k),
                    position=GeoPoint(float(rng.uniform(*LAT_RANGE)), float(rng.uniform(*LON_RANGE))),
                    max_wind=wind,
                    category=saffir_simpson_category(wind),
                    min_pressure=float(1013.0 - 0.75 * wind + rng.normal(0.0, 2.0)),
                )
            )

    # hydrography counts
    rng = rng_for(seed, "synth-hydro")
    counts = rng.poisson((2.0, 1.5, 1.0, 2.0), size=(n_zctas, 4))
    hydro = [HydroCounts(z.zcta_id, *(int(c) for c in row)) for z, row in zip(zctas, counts)]

    # building aggregates
    rng = rng_for(seed, "synth-building")
    age = rng.uniform(5.0, 70.0, n_zctas)
    floors = rng.uniform(1.0, 3.0, n_zctas)
    elev_diff = rng.normal(0.0, 3.0, n_zctas)
    elevated = rng.uniform(0.0, 10.0, n_zctas)
    occ = rng.integers(0, len(OCCUPANCY_LABELS), n_zctas)
    buildings = [
        BuildingAggregates(z.zcta_id, float(a), float(f), float(d), float(e), OCCUPANCY_LABELS[o])
        for z, a, f, d, e, o in zip(zctas, age, floors, elev_diff, elevated, occ)
    ]

    # house price index ending exactly at the baseline
    rng = rng_for(seed, "synth-hpi")
    months = _months(HPI_START, HPI_END)
    steps = 0.0045 + 0.004 * rng.standard_normal(len(months) - 1)
    log_path = np.concatenate([[0.0], np.cumsum(steps)])
    values = HPI_BASELINE * np.exp(log_path - log_path[-1])
    values[-1] = HPI_BASELINE
    hpi = HpiSeries(tuple(months), tuple(float(v) for v in values))

    # latent target
    assigned = assign_nearest_storm(zctas, storms)
    wind = np.array([assigned[z.zcta_id].max_wind for z in zctas])
    rng = rng_for(seed, "synth-noise")
    eps = rng.normal(0.0, noise_sigma, n_zctas) if noise_sigma > 0 else np.zeros(n_zctas)
    log_loss = generative_log_loss(
        standardize(wind), standardize(elevated), standardize(elev_diff), standardize(counts[:, 0]), eps
    )

    # losses: 1-3 claims per ZCTA, adjusted with the latest claim month
    rng = rng_for(seed, "synth-loss")
    first = dt.date(LOSS_YEARS[0], 1, 1)
    span = (dt.date(LOSS_YEARS[1], 12, 31) - first).days
    losses = []
    for z, target in zip(zctas, log_loss):
        k = int(rng.integers(1, 4))
        days = sorted(first + dt.timedelta(days=int(d)) for d in rng.integers(0, span + 1, size=k))
        last = days[-1]
        raw_total = float(np.expm1(target)) * hpi.value_at(last.year, last.month) / hpi.baseline_value
        shares = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
        for day, share in zip(days, shares):
            part = raw_total * float(share)
            losses.append(LossRecord(z.zcta_id, day, part * BUILDING_SHARE, part * (1.0 - BUILDING_SHARE)))

    used = tuple(sorted({b.occupancy_type for b in buildings}))
    return DatasetBundle(zctas, storms, hydro, buildings, losses, hpi, used)

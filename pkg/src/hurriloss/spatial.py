"""Great-circle geometry and nearest-neighbour joins on ZCTA centroids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import EARTH_RADIUS_KM, GeoPoint, HurricaneRecord, ZctaRecord


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def _unit_vectors(points: Sequence[GeoPoint]) -> np.ndarray:
    lat = np.radians([p.lat for p in points])
    lon = np.radians([p.lon for p in points])
    return np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])


class NeighborIndex:
    """Nearest-neighbour lookup over labelled points.

    A k-d tree on unit-sphere chord coordinates proposes candidates; the
    winner is then chosen by exact haversine distance with ties going to
    the lexicographically smallest id, so answers match a linear scan.
    """

    # Relative slack on the chord radius so that near-ties are all rescored.
    _SLACK = 1e-7

    def __init__(self, points: Iterable[tuple]):
        pts = list(points)
        if not pts:
            raise ValueError("points: index needs at least one point")
        ids = [p[0] for p in pts]
        if len(set(ids)) != len(ids):
            seen, dup = set(), []
            for i in ids:
                if i in seen:
                    dup.append(i)
                seen.add(i)
            raise ValueError(f"points: duplicate ids {sorted(set(dup))[:5]}")
        self.ids = tuple(ids)
        self.locations = tuple(p[1] for p in pts)
        self._xyz = _unit_vectors(self.locations)
        self._tree = cKDTree(self._xyz)

    def __len__(self):
        return len(self.ids)

    def nearest(self, query: GeoPoint) -> tuple:
        """Return ``(id, distance_km)`` of the nearest indexed point."""
        q = _unit_vectors([query])[0]
        chord, _ = self._tree.query(q, k=1)
        radius = chord * (1.0 + self._SLACK) + 1e-12
        cand = self._tree.query_ball_point(q, radius)
        best = None
        for j in cand:
            d = haversine_km(query, self.locations[j])
            key = (d, self.ids[j])
            if best is None or key < best:
                best = key
        return best[1], best[0]


def build_index(points: Iterable[tuple]) -> NeighborIndex:
    return NeighborIndex(points)


def linear_nearest(points: Sequence[tuple], query: GeoPoint) -> tuple:
    """Exhaustive scan with the same tie-break as :class:`NeighborIndex`."""
    best = None
    for pid, loc in points:
        key = (haversine_km(query, loc), pid)
        if best is None or key < best:
            best = key
    return best[1], best[0]


@dataclass(frozen=True)
class StormSummary:
    storm_id: str
    position: GeoPoint
    max_wind: float
    category: int
    min_pressure: float


@dataclass(frozen=True)
class StormAssignment:
    storm_id: str
    max_wind: float
    category: int
    min_pressure: float
    distance_km: float


def summarize_storms(storms: Sequence[HurricaneRecord]) -> list:
    """Collapse track fixes into one summary per storm.

    The representative position and category come from the peak-wind fix
    (earliest on ties); pressure is the track minimum.
    """
    by_id = {}
    for rec in storms:
        by_id.setdefault(rec.storm_id, []).append(rec)
    out = []
    for sid in sorted(by_id):
        fixes = by_id[sid]
        peak = min(fixes, key=lambda r: (-r.max_wind, r.observed_at))
        out.append(
            StormSummary(
                storm_id=sid,
                position=peak.position,
                max_wind=peak.max_wind,
                category=peak.category,
                min_pressure=min(r.min_pressure for r in fixes),
            )
        )
    return out


def assign_nearest_storm(zctas: Sequence[ZctaRecord], storms: Sequence[HurricaneRecord]) -> dict:
    if not storms:
        raise ValueError("no storms available")
    if not zctas:
        raise ValueError("zctas: no ZCTAs to assign")
    summaries = {s.storm_id: s for s in summarize_storms(storms)}
    index = NeighborIndex((sid, s.position) for sid, s in summaries.items())
    out = {}
    for z in zctas:
        sid, dist = index.nearest(z.centroid)
        s = summaries[sid]
        out[z.zcta_id] = StormAssignment(sid, s.max_wind, s.category, s.min_pressure, dist)
    return out


def impute_nearest_zcta(values: Mapping[str, Optional[float]], centroids: Mapping[str, GeoPoint]) -> dict:
    """Fill missing entries with the value of the nearest ZCTA that has one."""
    donors = [(z, centroids[z]) for z, v in values.items() if v is not None and z in centroids]
    if not donors:
        raise ValueError("values: all values missing, nothing to impute from")
    missing = [z for z, v in values.items() if v is None]
    out = dict(values)
    if not missing:
        return out
    index = NeighborIndex(donors)
    for z in missing:
        if z not in centroids:
            raise ValueError(f"centroids: no centroid for ZCTA {z}")
        donor, _ = index.nearest(centroids[z])
        out[z] = values[donor]
    return out

"""Declination-zone spatial index: cone search and neighbor enumeration.

The sphere is cut into constant-height declination bands ("zones"); within a
zone objects are sorted by RA so candidates for a search fall inside a small
RA window found by binary search. Candidate windows are conservative (they may
over-select, especially near the poles) and every candidate is verified with
the exact separation, so correctness never depends on the window math.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import EquatorialPosition, SkyObject, positions_array, separation_deg
from .errors import IndexError_

DEFAULT_ZONE_HEIGHT_DEG = 4.0 / 60.0  # 4 arcmin, ~ typical match radius x safety


@dataclass(frozen=True)
class ConeQuery:
    center: EquatorialPosition
    radius_deg: float

    def __post_init__(self):
        if not (0.0 <= self.radius_deg <= 180.0):
            raise IndexError_(f"cone radius must be in [0, 180]: {self.radius_deg!r}")


class ZoneIndex:
    """CSR-layout zone index over a fixed object set.

    Objects are addressed by their position ("ref") in the indexed sequence.
    Immutable after build; safe for unrestricted concurrent readers.
    """

    def __init__(
        self,
        zone_height_deg: float,
        starts: np.ndarray,
        refs: np.ndarray,
        ra: np.ndarray,
        dec: np.ndarray,
    ):
        self.zone_height_deg = float(zone_height_deg)
        self.n_zones = len(starts) - 1
        self.starts = starts  # int64[n_zones+1], zone z occupies [starts[z], starts[z+1])
        self.refs = refs  # int64[N], original positions, sorted by (zone, ra)
        self.ra = ra  # float64[N], aligned with refs
        self.dec = dec  # float64[N]
        self.object_count = int(len(refs))

    # -- construction ------------------------------------------------------

    @classmethod
    def from_arrays(
        cls, ra: np.ndarray, dec: np.ndarray, zone_height_deg: float
    ) -> "ZoneIndex":
        if not (0.0 < zone_height_deg <= 180.0):
            raise IndexError_(f"zone height must be in (0, 180]: {zone_height_deg!r}")
        ra = np.asarray(ra, dtype=np.float64)
        dec = np.asarray(dec, dtype=np.float64)
        n_zones = max(1, math.ceil(180.0 / zone_height_deg))
        zone = np.floor((dec + 90.0) / zone_height_deg).astype(np.int64)
        # dec = +90 lands exactly on the upper edge; keep it in the top zone
        np.clip(zone, 0, n_zones - 1, out=zone)
        order = np.lexsort((ra, zone))
        starts = np.zeros(n_zones + 1, dtype=np.int64)
        counts = np.bincount(zone, minlength=n_zones)
        np.cumsum(counts, out=starts[1:])
        return cls(zone_height_deg, starts, order.astype(np.int64), ra[order], dec[order])

    def zone_of(self, dec_deg: float) -> int:
        z = int(math.floor((dec_deg + 90.0) / self.zone_height_deg))
        return min(max(z, 0), self.n_zones - 1)

    # -- snapshot ------------------------------------------------------------

    def save(self, path) -> None:
        np.savez(
            path,
            zone_height_deg=np.float64(self.zone_height_deg),
            starts=self.starts,
            refs=self.refs,
            ra=self.ra,
            dec=self.dec,
        )

    @classmethod
    def load(cls, path) -> "ZoneIndex":
        with np.load(path) as z:
            return cls(
                float(z["zone_height_deg"]),
                z["starts"].copy(),
                z["refs"].copy(),
                z["ra"].copy(),
                z["dec"].copy(),
            )

    # -- search --------------------------------------------------------------

    def _ra_ranges(self, z: int, ra_c: float, half_width: float) -> list[tuple[int, int]]:
        """Index ranges inside zone z whose RA lies within +-half_width of ra_c,
        split in two when the window straddles RA 0/360."""
        lo, hi = int(self.starts[z]), int(self.starts[z + 1])
        if lo == hi:
            return []
        if half_width >= 180.0:
            return [(lo, hi)]
        zra = self.ra[lo:hi]
        a, b = ra_c - half_width, ra_c + half_width
        spans = []
        if a < 0.0:
            spans = [(0.0, b), (a + 360.0, 360.0)]
        elif b >= 360.0:
            spans = [(a, 360.0), (0.0, b - 360.0)]
        else:
            spans = [(a, b)]
        out = []
        for s, e in spans:
            i = int(np.searchsorted(zra, s, side="left"))
            j = int(np.searchsorted(zra, e, side="right"))
            if i < j:
                out.append((lo + i, lo + j))
        return out

    def cone_search(self, q: ConeQuery) -> np.ndarray:
        """Refs of every object within q.radius_deg of q.center, ascending.

        Zones are limited to dec within [center.dec - r, center.dec + r]; the
        per-zone RA half-width is r / cos(dec of the zone edge nearest the
        pole), widened to the bounding half-extent of the cone circle
        (arcsin(sin r / cos dec_c)) so the window never under-selects, with a
        full-zone scan when it degenerates near the poles.
        """
        r = q.radius_deg
        ra_c, dec_c = q.center.ra_deg, q.center.dec_deg
        dec_lo = max(-90.0, dec_c - r)
        dec_hi = min(90.0, dec_c + r)
        z_lo = self.zone_of(dec_lo)
        z_hi = self.zone_of(dec_hi)

        # RA half-extent of the whole cone circle; full scan if it reaches a pole.
        sin_r = math.sin(math.radians(r))
        cos_dc = math.cos(math.radians(dec_c))
        if abs(dec_c) + r >= 90.0 or sin_r >= cos_dc:
            global_half = 180.0
        else:
            global_half = math.degrees(math.asin(sin_r / cos_dc))

        hits: list[np.ndarray] = []
        h = self.zone_height_deg
        for z in range(z_lo, z_hi + 1):
            edge_lo = -90.0 + z * h
            edge_hi = min(90.0, -90.0 + (z + 1) * h)
            worst = max(abs(max(edge_lo, dec_lo)), abs(min(edge_hi, dec_hi)))
            cos_w = math.cos(math.radians(worst))
            if cos_w <= sin_r or cos_w <= 0.0:
                half = 180.0
            else:
                half = max(min(180.0, r / cos_w), global_half)
            for i, j in self._ra_ranges(z, ra_c, half):
                sep = separation_deg(self.ra[i:j], self.dec[i:j], ra_c, dec_c)
                sel = np.nonzero(sep <= r)[0]
                if len(sel):
                    hits.append(self.refs[i + sel])
        if not hits:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(hits))

    def neighbor_pairs(
        self, radius_deg: float
    ) -> Iterator[tuple[int, int, float]]:
        """Every unordered pair of indexed objects with separation <= radius,
        emitted exactly once as (ref_a, ref_b, separation_deg); no self-pairs.

        Requires radius <= zone height so candidates live in the home zone and
        the one above it.
        """
        if radius_deg < 0:
            raise IndexError_(f"radius must be >= 0: {radius_deg!r}")
        if radius_deg > self.zone_height_deg:
            raise IndexError_(
                f"radius {radius_deg} exceeds zone height "
                f"{self.zone_height_deg}; rebuild the index with taller zones"
            )
        sin_r = math.sin(math.radians(radius_deg))
        for z in range(self.n_zones):
            lo, hi = int(self.starts[z]), int(self.starts[z + 1])
            for p in range(lo, hi):
                ra_i = float(self.ra[p])
                dec_i = float(self.dec[p])
                cos_d = math.cos(math.radians(dec_i))
                if abs(dec_i) + radius_deg >= 90.0 or sin_r >= cos_d:
                    half = 180.0
                else:
                    half = math.degrees(math.asin(sin_r / cos_d))
                # same zone: emit only partners at a later slot to de-duplicate
                for i, j in self._ra_ranges(z, ra_i, half):
                    s = max(i, p + 1)
                    if s >= j:
                        continue
                    sep = separation_deg(self.ra[s:j], self.dec[s:j], ra_i, dec_i)
                    for k in np.nonzero(sep <= radius_deg)[0]:
                        yield int(self.refs[p]), int(self.refs[s + k]), float(sep[k])
                # next zone up: zones differ, so every match is a fresh pair
                if z + 1 < self.n_zones:
                    for i, j in self._ra_ranges(z + 1, ra_i, half):
                        sep = separation_deg(self.ra[i:j], self.dec[i:j], ra_i, dec_i)
                        for k in np.nonzero(sep <= radius_deg)[0]:
                            yield int(self.refs[p]), int(self.refs[i + k]), float(
                                sep[k]
                            )


def build_index(
    objects: Sequence[SkyObject], zone_height_deg: float = DEFAULT_ZONE_HEIGHT_DEG
) -> ZoneIndex:
    """Index a catalog's objects; O(N log N) build, immutable afterwards."""
    ra, dec = positions_array(objects)
    return ZoneIndex.from_arrays(ra, dec, zone_height_deg)


def cone_search(index: ZoneIndex, q: ConeQuery) -> np.ndarray:
    return index.cone_search(q)


def neighbor_pairs(index: ZoneIndex, radius_deg: float):
    return index.neighbor_pairs(radius_deg)

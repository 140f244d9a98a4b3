"""Equatorial geometry, photometric conversions, and the domestic object model.

Everything here is pure and immutable; angles are degrees internally, with
arcseconds only at API edges (astrometric errors, extents). 1 deg = 3600 arcsec.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import CoordinateError, MissingBandError, PhotometryError

ARCSEC_PER_DEG = 3600.0


def normalize_ra(ra_raw: float) -> float:
    """Reduce a right ascension to [0, 360). Non-finite input is an error."""
    if not math.isfinite(ra_raw):
        raise CoordinateError(f"non-finite right ascension: {ra_raw!r}")
    ra = math.fmod(ra_raw, 360.0)
    if ra < 0.0:
        ra += 360.0
    # fmod(-1e-18, 360) + 360 rounds to 360.0; fold that back.
    if ra >= 360.0:
        ra = 0.0
    return ra


@dataclass(frozen=True)
class EquatorialPosition:
    """A position on the celestial sphere, with optional observation epoch.

    RA is normalized to [0, 360) on construction; a declination outside
    [-90, +90] is a construction error, never clamped.
    """

    ra_deg: float
    dec_deg: float
    epoch_mjd: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "ra_deg", normalize_ra(float(self.ra_deg)))
        dec = float(self.dec_deg)
        if not math.isfinite(dec) or dec < -90.0 or dec > 90.0:
            raise CoordinateError(f"declination out of range [-90, +90]: {dec!r}")
        object.__setattr__(self, "dec_deg", dec)


class ObjectClass(enum.Enum):
    STAR = "STAR"
    GALAXY = "GALAXY"
    QSO = "QSO"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SkyObject:
    """One catalog row in the domestic model.

    mags maps band label -> magnitude; a band missing from the mapping means
    the survey did not measure it (never 0). sigma_pos_arcsec is the 1-sigma
    astrometric error and must be positive.
    """

    object_id: int
    pos: EquatorialPosition
    sigma_pos_arcsec: float
    mags: Mapping[str, float] = field(default_factory=dict)
    obj_class: ObjectClass = ObjectClass.UNKNOWN
    extent_arcsec: Optional[float] = None

    def __post_init__(self):
        if self.object_id < 0 or self.object_id >= 2**64:
            raise CoordinateError(f"object_id out of 64-bit range: {self.object_id}")
        if not (self.sigma_pos_arcsec > 0) or not math.isfinite(self.sigma_pos_arcsec):
            raise CoordinateError(
                f"sigma_pos_arcsec must be > 0, got {self.sigma_pos_arcsec!r}"
            )
        for band, mag in self.mags.items():
            if not math.isfinite(mag):
                raise CoordinateError(f"non-finite magnitude in band {band}: {mag!r}")
        if self.extent_arcsec is not None and not (self.extent_arcsec >= 0):
            raise CoordinateError(f"extent_arcsec must be >= 0: {self.extent_arcsec!r}")


def to_unit_vector(p: EquatorialPosition) -> np.ndarray:
    """Spherical -> Cartesian unit vector (x toward ra=0/dec=0, z toward dec=90)."""
    ra = math.radians(p.ra_deg)
    dec = math.radians(p.dec_deg)
    return np.array(
        [math.cos(dec) * math.cos(ra), math.cos(dec) * math.sin(ra), math.sin(dec)]
    )


def separation_deg(ra1, dec1, ra2, dec2):
    """Angular separation in degrees; accepts scalars or numpy arrays.

    Vincenty form of atan2(|a x b|, a . b) on unit vectors: stable at both
    0 and 180 degrees, unlike arccos of the dot product.
    """
    p1 = np.radians(ra1)
    t1 = np.radians(dec1)
    p2 = np.radians(ra2)
    t2 = np.radians(dec2)
    dp = p2 - p1
    cos_t2 = np.cos(t2)
    sin_t2 = np.sin(t2)
    cos_t1 = np.cos(t1)
    sin_t1 = np.sin(t1)
    num = np.hypot(cos_t2 * np.sin(dp), cos_t1 * sin_t2 - sin_t1 * cos_t2 * np.cos(dp))
    den = sin_t1 * sin_t2 + cos_t1 * cos_t2 * np.cos(dp)
    return np.degrees(np.arctan2(num, den))


def angular_separation(a: EquatorialPosition, b: EquatorialPosition) -> float:
    """Great-circle separation of two positions, degrees in [0, 180]."""
    return float(separation_deg(a.ra_deg, a.dec_deg, b.ra_deg, b.dec_deg))


def flux_to_magnitude(flux: float, flux_zero: float) -> float:
    """Pogson conversion m = -2.5 log10(flux / flux_zero).

    Both arguments must be positive and finite; 5 magnitudes correspond to a
    factor of 100 in flux.
    """
    if not (flux > 0) or not math.isfinite(flux):
        raise PhotometryError(f"flux must be > 0, got {flux!r}")
    if not (flux_zero > 0) or not math.isfinite(flux_zero):
        raise PhotometryError(f"flux zero-point must be > 0, got {flux_zero!r}")
    return -2.5 * math.log10(flux / flux_zero)


def color_index(mags: Mapping[str, float], band_a: str, band_b: str) -> float:
    """Color m_a - m_b from a band->magnitude mapping.

    Raises MissingBandError naming the absent band.
    """
    if band_a not in mags:
        raise MissingBandError(band_a)
    if band_b not in mags:
        raise MissingBandError(band_b)
    return mags[band_a] - mags[band_b]


KIND_INT = "int"
KIND_FLOAT = "float"
KIND_TEXT = "text"


@dataclass
class ResultTable:
    """Tabular answer: ordered (name, kind) columns plus value-tuple rows.

    kind is one of int/float/text; every column is nullable (None values).
    elapsed_ms is informational and excluded from equality so that repeated
    executions of a deterministic query compare equal.
    """

    columns: list[tuple[str, str]]
    rows: list[tuple]
    row_count: int = field(default=0)
    elapsed_ms: float = field(default=0.0, compare=False)

    def __post_init__(self):
        names = [n for n, _ in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names: {names}")
        arity = len(self.columns)
        for r in self.rows:
            if len(r) != arity:
                raise ValueError(f"row arity {len(r)} != column arity {arity}")
        self.row_count = len(self.rows)

    @property
    def column_names(self) -> list[str]:
        return [n for n, _ in self.columns]


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_to_csv(table: ResultTable) -> str:
    """Deterministic CSV rendering: header row, repr-shortest floats, empty
    field for NULL."""
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.column_names)
    for row in table.rows:
        w.writerow([_format_value(v) for v in row])
    return buf.getvalue()


def table_to_json_dict(table: ResultTable) -> dict:
    """Wire shape for result tables.

    Timing is deliberately not serialized: identical queries must produce
    byte-identical bodies.
    """
    return {
        "columns": [{"name": n, "kind": k} for n, k in table.columns],
        "rows": [list(r) for r in table.rows],
        "stats": {"row_count": table.row_count},
    }


def table_from_json_dict(doc: dict) -> ResultTable:
    cols = [(c["name"], c["kind"]) for c in doc["columns"]]
    rows = [tuple(r) for r in doc["rows"]]
    return ResultTable(columns=cols, rows=rows)


def positions_array(objects: Sequence[SkyObject]) -> tuple[np.ndarray, np.ndarray]:
    """Extract (ra, dec) float64 arrays from a sequence of objects."""
    n = len(objects)
    ra = np.empty(n, dtype=np.float64)
    dec = np.empty(n, dtype=np.float64)
    for i, o in enumerate(objects):
        ra[i] = o.pos.ra_deg
        dec[i] = o.pos.dec_deg
    return ra, dec

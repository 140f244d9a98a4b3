"""k-sigma positional matching of probe positions against an indexed catalog.

A probe matches an object when their separation is at most
min(max_radius, k * sqrt(sigma_probe^2 + sigma_object^2)) arcseconds -- a
circular gate sized by the combined astrometric error with a hard cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ARCSEC_PER_DEG, EquatorialPosition, separation_deg
from .errors import SkyfedError
from .ingest import Catalog
from .zones import ConeQuery, ZoneIndex

DEFAULT_K = 3.0
DEFAULT_MAX_RADIUS_ARCSEC = 30.0


@dataclass(frozen=True)
class Probe:
    probe_id: int
    ra_deg: float
    dec_deg: float
    sigma_arcsec: float


@dataclass(frozen=True)
class ProbeMatch:
    ref: int  # catalog position of the matched object
    object_id: int
    separation_arcsec: float


def match_probes(
    catalog: Catalog,
    index: ZoneIndex,
    probes: list[Probe],
    k: float = DEFAULT_K,
    max_radius_arcsec: float = DEFAULT_MAX_RADIUS_ARCSEC,
) -> list[list[ProbeMatch]]:
    """Match lists per probe, in probe order; each list sorted by
    (separation, object_id)."""
    if not probes:
        raise SkyfedError("probe list must not be empty")
    if not (k > 0):
        raise SkyfedError(f"k must be > 0, got {k!r}")
    if not (max_radius_arcsec > 0):
        raise SkyfedError(f"max_radius_arcsec must be > 0, got {max_radius_arcsec!r}")

    sigma_cat = np.array([o.sigma_pos_arcsec for o in catalog.objects])
    sigma_max = float(sigma_cat.max()) if len(sigma_cat) else 0.0
    ra = catalog.ra
    dec = catalog.dec

    out: list[list[ProbeMatch]] = []
    for p in probes:
        if not (p.sigma_arcsec > 0):
            raise SkyfedError(f"probe {p.probe_id}: sigma must be > 0")
        # conservative search radius: widest gate any object could need
        reach = min(
            max_radius_arcsec, k * float(np.hypot(p.sigma_arcsec, sigma_max))
        )
        refs = index.cone_search(
            ConeQuery(EquatorialPosition(p.ra_deg, p.dec_deg), reach / ARCSEC_PER_DEG)
        )
        matches: list[ProbeMatch] = []
        if len(refs):
            sep = (
                separation_deg(ra[refs], dec[refs], p.ra_deg, p.dec_deg)
                * ARCSEC_PER_DEG
            )
            gate = np.minimum(
                max_radius_arcsec,
                k * np.hypot(p.sigma_arcsec, sigma_cat[refs]),
            )
            hit = np.nonzero(sep <= gate)[0]
            found = [
                ProbeMatch(
                    ref=int(refs[j]),
                    object_id=catalog.objects[int(refs[j])].object_id,
                    separation_arcsec=float(sep[j]),
                )
                for j in hit
            ]
            matches = sorted(found, key=lambda m: (m.separation_arcsec, m.object_id))
        out.append(matches)
    return out

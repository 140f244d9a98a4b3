"""Deterministic synthetic sky catalogs with planted ground truth.

Positions are uniform on the sphere (uniform RA, dec = asin(2u - 1)) clipped
to an optional declination band. Planted features -- movers, clusters,
isolated points, cross-survey coincidences -- are kept clear of the random
field so their ground truth stays unambiguous; everything lands in a manifest
the acceptance suite reads back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ARCSEC_PER_DEG, EquatorialPosition, ObjectClass, SkyObject, separation_deg
from .ingest import Catalog, CatalogSchema, ColumnMapping, export_domestic

EPOCH_A_MJD = 52000.0
EPOCH_B_MJD = 52010.0


@dataclass(frozen=True)
class FixtureSpec:
    objects: int
    seed: int
    movers: int = 0
    clusters: int = 0
    cluster_size: int = 100
    cluster_sigma_arcsec: float = 10.0
    isolated: int = 0
    coincidences: int = 0
    surveys: tuple = ("photoobj",)
    bands: tuple = ("g", "r", "i")
    dec_min: float = -90.0
    dec_max: float = 90.0
    mover_min_arcsec: float = 5.0
    mover_max_arcsec: float = 40.0


def synthetic_schema(survey: str, bands, epoch_mjd: float) -> CatalogSchema:
    cols = [
        ColumnMapping("object_id", "object_id"),
        ColumnMapping("ra", "ra", "deg"),
        ColumnMapping("dec", "dec", "deg"),
        ColumnMapping("sigma_pos", "sigma_pos", "arcsec"),
        ColumnMapping("class", "class", class_map={c.name: c.name for c in ObjectClass}),
        ColumnMapping("extent", "extent", "arcsec"),
    ]
    cols += [ColumnMapping(f"mag_{b}", f"mag:{b}", "mag") for b in bands]
    return CatalogSchema(
        survey_name=survey,
        bands=tuple(bands),
        columns=tuple(cols),
        sigma_default_arcsec=0.1,
        epoch_mjd=epoch_mjd,
    )


def _sample_positions(rng, n, dec_min, dec_max):
    ra = rng.uniform(0.0, 360.0, n)
    z = rng.uniform(math.sin(math.radians(dec_min)), math.sin(math.radians(dec_max)), n)
    dec = np.degrees(np.arcsin(z))
    return ra, dec


def _min_separation_to(ra, dec, ra_all, dec_all) -> float:
    if len(ra_all) == 0:
        return 180.0
    return float(np.min(separation_deg(ra_all, dec_all, ra, dec)))


def _sample_clear(rng, dec_min, dec_max, ra_all, dec_all, clear_deg: float):
    """One position at least clear_deg away from everything placed so far."""
    for _ in range(10_000):
        ra, dec = _sample_positions(rng, 1, dec_min, dec_max)
        if _min_separation_to(ra[0], dec[0], ra_all, dec_all) >= clear_deg:
            return float(ra[0]), float(dec[0])
    raise RuntimeError("could not place a planted object clear of the field")


def _displace(rng, ra, dec, dist_arcsec):
    """Move a position by dist_arcsec in a random direction (tangent plane)."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    d = dist_arcsec / ARCSEC_PER_DEG
    ddec = d * math.sin(theta)
    dra = d * math.cos(theta) / max(math.cos(math.radians(dec)), 1e-9)
    new_dec = min(max(dec + ddec, -90.0), 90.0)
    return (ra + dra) % 360.0, new_dec


class _Builder:
    """Accumulates objects for one catalog epoch."""

    def __init__(self, schema: CatalogSchema, rng, bands):
        self.schema = schema
        self.rng = rng
        self.bands = bands
        self.objects: list[SkyObject] = []
        self.ra: list[float] = []
        self.dec: list[float] = []

    def positions(self):
        return np.asarray(self.ra), np.asarray(self.dec)

    def add(self, object_id, ra, dec, sigma=None, obj_class=None, mags=None, extent=None):
        rng = self.rng
        if sigma is None:
            sigma = float(rng.uniform(0.05, 0.3))
        if obj_class is None:
            u = rng.random()
            obj_class = (
                ObjectClass.STAR if u < 0.5 else ObjectClass.GALAXY if u < 0.9 else ObjectClass.QSO
            )
        if mags is None:
            mags = {}
            for b in self.bands:
                if rng.random() < 0.05:
                    continue  # band not measured
                mags[b] = float(rng.uniform(14.0, 24.0))
        if extent is None:
            if obj_class is ObjectClass.GALAXY:
                extent = abs(float(rng.normal(3.0, 2.0)))
            elif obj_class is ObjectClass.STAR:
                extent = 0.0
            else:
                extent = None
        obj = SkyObject(
            object_id=object_id,
            pos=EquatorialPosition(ra, dec, self.schema.epoch_mjd),
            sigma_pos_arcsec=sigma,
            mags=mags,
            obj_class=obj_class,
            extent_arcsec=extent,
        )
        self.objects.append(obj)
        self.ra.append(obj.pos.ra_deg)
        self.dec.append(obj.pos.dec_deg)
        return obj

    def catalog(self) -> Catalog:
        return Catalog(schema=self.schema, objects=self.objects)


def generate_fixture(spec: FixtureSpec) -> tuple[dict, dict]:
    """Build catalogs plus a ground-truth manifest.

    Returns (catalogs, manifest) where catalogs maps store name -> Catalog.
    With movers > 0 the first survey gets a second-epoch twin named
    "<survey>_b" holding the same static sky with the movers displaced.
    """
    catalogs: dict[str, Catalog] = {}
    manifest: dict = {
        "spec": {
            "objects": spec.objects,
            "seed": spec.seed,
            "movers": spec.movers,
            "clusters": spec.clusters,
            "cluster_size": spec.cluster_size,
            "cluster_sigma_arcsec": spec.cluster_sigma_arcsec,
            "isolated": spec.isolated,
            "coincidences": spec.coincidences,
            "surveys": list(spec.surveys),
            "bands": list(spec.bands),
            "dec_min": spec.dec_min,
            "dec_max": spec.dec_max,
        },
        "catalogs": {},
        "movers": [],
        "clusters": [],
        "isolated": [],
        "coincidences": [],
    }

    # shared coincidence sky positions, kept clear of everything else later
    coin_rng = np.random.default_rng([spec.seed, 9_999])
    coin_ra = np.empty(0)
    coin_dec = np.empty(0)
    if spec.coincidences:
        band_lo = max(spec.dec_min, -85.0)
        band_hi = min(spec.dec_max, 85.0)
        ras, decs = [], []
        for _ in range(spec.coincidences):
            ra, dec = _sample_clear(
                coin_rng, band_lo, band_hi, np.asarray(ras), np.asarray(decs), 0.2
            )
            ras.append(ra)
            decs.append(dec)
        coin_ra = np.asarray(ras)
        coin_dec = np.asarray(decs)
        manifest["coincidences"] = [
            {"ra": ras[i], "dec": decs[i], "ids": {}} for i in range(spec.coincidences)
        ]

    for si, survey in enumerate(spec.surveys):
        rng = np.random.default_rng([spec.seed, si])
        schema = synthetic_schema(survey, spec.bands, EPOCH_A_MJD)
        b = _Builder(schema, rng, spec.bands)
        next_id = 0

        # random static field, kept clear of the planted coincidence spots
        ra_f, dec_f = _sample_positions(rng, spec.objects, spec.dec_min, spec.dec_max)
        clear = (3.0 * spec.mover_max_arcsec + 60.0) / ARCSEC_PER_DEG
        for i in range(spec.objects):
            if len(coin_ra) and _min_separation_to(ra_f[i], dec_f[i], coin_ra, coin_dec) < clear:
                ra_f[i], dec_f[i] = _sample_clear(rng, spec.dec_min, spec.dec_max, coin_ra, coin_dec, clear)
            b.add(next_id, float(ra_f[i]), float(dec_f[i]))
            next_id += 1

        if si == 0:
            # clusters: tight gaussian blobs well away from each other
            for ci in range(spec.clusters):
                ra_all, dec_all = b.positions()
                band_lo = max(spec.dec_min, -75.0)
                band_hi = min(spec.dec_max, 75.0)
                cra, cdec = _sample_clear(rng, band_lo, band_hi, ra_all, dec_all, 1.0)
                member_ids = []
                for _ in range(spec.cluster_size):
                    dra = rng.normal(0.0, spec.cluster_sigma_arcsec) / ARCSEC_PER_DEG
                    ddec = rng.normal(0.0, spec.cluster_sigma_arcsec) / ARCSEC_PER_DEG
                    mra = (cra + dra / math.cos(math.radians(cdec))) % 360.0
                    mdec = min(max(cdec + ddec, -90.0), 90.0)
                    b.add(next_id, mra, mdec)
                    member_ids.append(next_id)
                    next_id += 1
                manifest["clusters"].append(
                    {"ra": cra, "dec": cdec, "object_ids": member_ids}
                )

            # isolated points: nothing within 2 degrees
            for _ in range(spec.isolated):
                ra_all, dec_all = b.positions()
                ira, idec = _sample_clear(rng, spec.dec_min, spec.dec_max, ra_all, dec_all, 2.0)
                b.add(next_id, ira, idec)
                manifest["isolated"].append({"object_id": next_id, "ra": ira, "dec": idec})
                next_id += 1

        # coincidences: one jittered detection per survey at each shared spot
        for i in range(spec.coincidences):
            jra = coin_ra[i] + rng.normal(0.0, 0.05) / ARCSEC_PER_DEG
            jdec = coin_dec[i] + rng.normal(0.0, 0.05) / ARCSEC_PER_DEG
            b.add(next_id, float(jra), float(min(max(jdec, -90.0), 90.0)), sigma=0.1)
            manifest["coincidences"][i]["ids"][survey] = next_id
            next_id += 1

        movers_here = spec.movers if si == 0 else 0
        mover_rows = []
        if movers_here:
            # epoch-a mover detections, clear of the static field so the
            # planted truth cannot collide with chance neighbors
            clear_deg = (2.0 * spec.mover_max_arcsec + 120.0) / ARCSEC_PER_DEG
            for _ in range(movers_here):
                ra_all, dec_all = b.positions()
                band_lo = max(spec.dec_min, -85.0)
                band_hi = min(spec.dec_max, 85.0)
                mra, mdec = _sample_clear(rng, band_lo, band_hi, ra_all, dec_all, clear_deg)
                dist = float(rng.uniform(spec.mover_min_arcsec, spec.mover_max_arcsec))
                mover_rows.append((next_id, mra, mdec, dist))
                b.add(next_id, mra, mdec)
                next_id += 1

        catalog_a = b.catalog()
        catalogs[survey] = catalog_a
        manifest["catalogs"][survey] = {
            "store": survey,
            "objects": len(catalog_a),
            "epoch_mjd": EPOCH_A_MJD,
        }

        if movers_here:
            schema_b = synthetic_schema(survey, spec.bands, EPOCH_B_MJD)
            bb = _Builder(schema_b, np.random.default_rng([spec.seed, si, 1]), spec.bands)
            mover_ids = {mid for mid, *_ in mover_rows}
            for o in catalog_a.objects:
                if o.object_id in mover_ids:
                    continue
                bb.add(
                    o.object_id,
                    o.pos.ra_deg,
                    o.pos.dec_deg,
                    sigma=o.sigma_pos_arcsec,
                    obj_class=o.obj_class,
                    mags=dict(o.mags),
                    extent=o.extent_arcsec,
                )
            dt_days = EPOCH_B_MJD - EPOCH_A_MJD
            for mid, mra, mdec, dist in mover_rows:
                nra, ndec = _displace(rng, mra, mdec, dist)
                bb.add(mid, nra, ndec)
                sep = float(separation_deg(mra, mdec, nra, ndec)) * ARCSEC_PER_DEG
                manifest["movers"].append(
                    {
                        "object_id": mid,
                        "separation_arcsec": sep,
                        "rate_arcsec_per_day": sep / dt_days,
                    }
                )
            name_b = f"{survey}_b"
            catalogs[name_b] = bb.catalog()
            manifest["catalogs"][name_b] = {
                "store": name_b,
                "objects": len(catalogs[name_b]),
                "epoch_mjd": EPOCH_B_MJD,
            }

    return catalogs, manifest


def write_fixture(spec: FixtureSpec, out_dir) -> dict:
    """Generate and write stores plus manifest.json under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalogs, manifest = generate_fixture(spec)
    for name, catalog in catalogs.items():
        export_domestic(catalog, out / name)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest

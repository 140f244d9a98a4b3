"""Convert foreign survey files into the domestic catalog model.

A JSON schema descriptor declares how a survey's native CSV columns map onto
the domestic fields (with unit conversions, flux zero-points and class
translation tables). Ingest rejects bad rows individually -- archives are
dirty and a load must survive them -- while structural problems (missing
header columns, unreadable files) abort.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import (
    ARCSEC_PER_DEG,
    EquatorialPosition,
    ObjectClass,
    SkyObject,
    flux_to_magnitude,
    normalize_ra,
)
from .errors import CoordinateError, IngestError, PhotometryError, SchemaError

SURVEY_NAME_RE = re.compile(r"^[a-z0-9_]+$")

SCALAR_TARGETS = {"ra", "dec", "object_id", "sigma_pos", "class", "extent"}
UNITS = {"deg", "rad", "hours", "arcsec", "mag", "flux"}
UNIT_COMPAT = {
    "ra": {"deg", "rad", "hours"},
    "dec": {"deg", "rad"},
    "sigma_pos": {"arcsec", "deg"},
    "extent": {"arcsec", "deg"},
    "mag": {"mag"},
    "flux": {"flux"},
}


@dataclass(frozen=True)
class ColumnMapping:
    source_column: str
    target: str  # ra | dec | object_id | sigma_pos | class | extent | mag:<band> | flux:<band>
    unit: Optional[str] = None
    flux_zero: Optional[float] = None
    class_map: Optional[dict[str, str]] = None

    @property
    def band(self) -> Optional[str]:
        if self.target.startswith(("mag:", "flux:")):
            return self.target.split(":", 1)[1]
        return None


@dataclass(frozen=True)
class CatalogSchema:
    survey_name: str
    bands: tuple[str, ...]
    columns: tuple[ColumnMapping, ...]
    sigma_default_arcsec: float = 0.1
    epoch_mjd: Optional[float] = None

    def domestic_columns(self) -> list[str]:
        cols = ["object_id", "ra", "dec", "sigma_pos", "class", "extent"]
        cols += [f"mag_{b}" for b in self.bands]
        return cols


@dataclass
class Provenance:
    source_file: str
    read: int
    accepted: int
    rejected: int
    unknown_class: int
    ingested_at: str


@dataclass(eq=False)
class Catalog:
    schema: CatalogSchema
    objects: list[SkyObject]
    provenance: Optional[Provenance] = None
    _ra: Optional[np.ndarray] = field(default=None, repr=False)
    _dec: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        ids = [o.object_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise IngestError("duplicate object_id in catalog")

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def ra(self) -> np.ndarray:
        if self._ra is None:
            self._build_arrays()
        return self._ra

    @property
    def dec(self) -> np.ndarray:
        if self._dec is None:
            self._build_arrays()
        return self._dec

    def _build_arrays(self):
        n = len(self.objects)
        ra = np.empty(n)
        dec = np.empty(n)
        for i, o in enumerate(self.objects):
            ra[i] = o.pos.ra_deg
            dec[i] = o.pos.dec_deg
        self._ra = ra
        self._dec = dec

    def max_sigma_arcsec(self) -> float:
        if not self.objects:
            return 0.0
        return max(o.sigma_pos_arcsec for o in self.objects)


@dataclass
class Rejection:
    line: int
    reason: str
    detail: str = ""


@dataclass
class IngestReport:
    read: int = 0
    accepted: int = 0
    rejected_rows: list[Rejection] = field(default_factory=list)
    unknown_class: int = 0

    @property
    def rejected(self) -> int:
        return len(self.rejected_rows)


# -- schema descriptor -------------------------------------------------------


def parse_schema(descriptor_text: str) -> CatalogSchema:
    """Validate a JSON schema descriptor; reports every problem, not just the
    first."""
    try:
        doc = json.loads(descriptor_text)
    except json.JSONDecodeError as e:
        raise SchemaError([f"descriptor is not valid JSON: {e}"]) from e

    problems: list[str] = []
    if not isinstance(doc, dict):
        raise SchemaError(["descriptor must be a JSON object"])

    survey = doc.get("survey")
    if not isinstance(survey, str) or not SURVEY_NAME_RE.match(survey or ""):
        problems.append(f"invalid survey name: {survey!r} (want lowercase [a-z0-9_])")

    bands = doc.get("bands", [])
    if not isinstance(bands, list) or not all(isinstance(b, str) for b in bands):
        problems.append("bands must be a list of band labels")
        bands = []
    if len(set(bands)) != len(bands):
        problems.append("duplicate band labels")

    sigma_default = doc.get("sigma_default_arcsec", 0.1)
    if not isinstance(sigma_default, (int, float)) or not sigma_default > 0:
        problems.append(f"sigma_default_arcsec must be > 0: {sigma_default!r}")

    epoch = doc.get("epoch_mjd")
    if epoch is not None and not isinstance(epoch, (int, float)):
        problems.append(f"epoch_mjd must be a number: {epoch!r}")

    raw_cols = doc.get("columns", [])
    if not isinstance(raw_cols, list):
        problems.append("columns must be a list")
        raw_cols = []

    mappings: list[ColumnMapping] = []
    seen_targets: set[str] = set()
    for i, rc in enumerate(raw_cols):
        where = f"columns[{i}]"
        if not isinstance(rc, dict):
            problems.append(f"{where}: must be an object")
            continue
        source = rc.get("source")
        target = rc.get("target")
        unit = rc.get("unit")
        if not isinstance(source, str) or not source:
            problems.append(f"{where}: missing source column name")
            continue
        if not isinstance(target, str):
            problems.append(f"{where}: missing target")
            continue
        base = target.split(":", 1)[0]
        band = target.split(":", 1)[1] if ":" in target else None
        if target in seen_targets:
            problems.append(f"duplicate target: {target}")
        seen_targets.add(target)
        if base in ("mag", "flux"):
            if not band:
                problems.append(f"{where}: {base} target needs a band, e.g. {base}:g")
                continue
            if band not in bands:
                problems.append(f"{where}: band {band!r} not in bands list")
        elif target not in SCALAR_TARGETS:
            problems.append(f"unknown target: {target}")
            continue
        compat = UNIT_COMPAT.get(base)
        if compat is not None:
            if unit not in UNITS:
                problems.append(f"{where}: missing or unknown unit {unit!r}")
            elif unit not in compat:
                problems.append(
                    f"incompatible unit for {target}: {unit} (allowed: {sorted(compat)})"
                )
        flux_zero = rc.get("flux_zero")
        if base == "flux":
            if not isinstance(flux_zero, (int, float)) or not flux_zero > 0:
                problems.append(f"{where}: flux target requires positive flux_zero")
        class_map = rc.get("class_map")
        if target == "class":
            if not isinstance(class_map, dict) or not class_map:
                problems.append(f"{where}: class target requires a class_map table")
            else:
                bad = [v for v in class_map.values() if v not in ObjectClass.__members__]
                if bad:
                    problems.append(f"{where}: class_map values must be object classes, got {bad}")
        mappings.append(
            ColumnMapping(
                source_column=source,
                target=target,
                unit=unit if isinstance(unit, str) else None,
                flux_zero=float(flux_zero) if isinstance(flux_zero, (int, float)) else None,
                class_map=dict(class_map) if isinstance(class_map, dict) else None,
            )
        )

    targets = {m.target for m in mappings}
    if "ra" not in targets:
        problems.append("missing target: ra")
    if "dec" not in targets:
        problems.append("missing target: dec")
    for b in bands:
        if f"mag:{b}" in targets and f"flux:{b}" in targets:
            problems.append(f"band {b} mapped from both mag and flux")

    if problems:
        raise SchemaError(problems)
    return CatalogSchema(
        survey_name=survey,
        bands=tuple(bands),
        columns=tuple(mappings),
        sigma_default_arcsec=float(sigma_default),
        epoch_mjd=float(epoch) if epoch is not None else None,
    )


def schema_to_descriptor(schema: CatalogSchema) -> dict:
    cols = []
    for m in schema.columns:
        c: dict = {"source": m.source_column, "target": m.target}
        if m.unit is not None:
            c["unit"] = m.unit
        if m.flux_zero is not None:
            c["flux_zero"] = m.flux_zero
        if m.class_map is not None:
            c["class_map"] = m.class_map
        cols.append(c)
    doc: dict = {
        "survey": schema.survey_name,
        "bands": list(schema.bands),
        "sigma_default_arcsec": schema.sigma_default_arcsec,
        "columns": cols,
    }
    if schema.epoch_mjd is not None:
        doc["epoch_mjd"] = schema.epoch_mjd
    return doc


# -- row conversion ----------------------------------------------------------


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def _convert_angle(value: float, unit: str) -> float:
    if unit == "deg":
        return value
    if unit == "rad":
        return math.degrees(value)
    if unit == "hours":
        return value * 15.0
    raise ValueError(f"bad angle unit {unit}")


def _convert_arcsec(value: float, unit: str) -> float:
    if unit == "arcsec":
        return value
    if unit == "deg":
        return value * ARCSEC_PER_DEG
    raise ValueError(f"bad arcsec unit {unit}")


def ingest_csv(
    path, schema: CatalogSchema, source_name: Optional[str] = None
) -> tuple[Catalog, IngestReport]:
    """Load a foreign CSV under a schema mapping.

    Rows violating domestic invariants are rejected with a line number and a
    machine-readable reason and never abort the load; a header that lacks a
    mapped source column aborts.
    """
    path = Path(path)
    report = IngestReport()
    objects: list[SkyObject] = []
    seen_ids: set[int] = set()
    next_seq_id = 0
    has_id_mapping = any(m.target == "object_id" for m in schema.columns)

    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise IngestError(f"cannot open {path}: {e}") from e

    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file, no header row")
        header = set(reader.fieldnames)
        missing = [m.source_column for m in schema.columns if m.source_column not in header]
        if missing:
            raise IngestError(f"{path}: header lacks mapped columns: {missing}")

        for row in reader:
            report.read += 1
            line = reader.line_num
            try:
                obj, unknown_class = _convert_row(
                    row, schema, next_seq_id if not has_id_mapping else None
                )
            except _RowRejected as rej:
                report.rejected_rows.append(Rejection(line, rej.reason, rej.detail))
                continue
            if obj.object_id in seen_ids:
                report.rejected_rows.append(
                    Rejection(line, "duplicate_object_id", str(obj.object_id))
                )
                continue
            seen_ids.add(obj.object_id)
            if not has_id_mapping:
                next_seq_id += 1
            if unknown_class:
                report.unknown_class += 1
            objects.append(obj)
            report.accepted += 1

    provenance = Provenance(
        source_file=source_name or path.name,
        read=report.read,
        accepted=report.accepted,
        rejected=report.rejected,
        unknown_class=report.unknown_class,
        ingested_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
    )
    return Catalog(schema=schema, objects=objects, provenance=provenance), report


class _RowRejected(Exception):
    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail


def _convert_row(
    row: dict, schema: CatalogSchema, seq_id: Optional[int]
) -> tuple[SkyObject, bool]:
    ra = dec = None
    object_id = seq_id
    sigma = None
    extent = None
    obj_class = ObjectClass.UNKNOWN
    unknown_class = False
    class_mapped = False
    mags: dict[str, float] = {}

    for m in schema.columns:
        raw = row.get(m.source_column)
        if raw is None:
            raise _RowRejected("missing_value", m.source_column)
        raw = raw.strip()
        base = m.target.split(":", 1)[0]
        if raw == "":
            # magnitudes/fluxes/extent/sigma/class may be absent; positions and ids may not
            if base in ("mag", "flux"):
                continue
            if m.target in ("extent", "sigma_pos", "class"):
                continue
            raise _RowRejected("missing_value", m.source_column)
        try:
            if m.target == "ra":
                ra = normalize_ra(_convert_angle(_parse_float(raw), m.unit))
            elif m.target == "dec":
                dec = _convert_angle(_parse_float(raw), m.unit)
            elif m.target == "object_id":
                object_id = int(raw, 10)
            elif m.target == "sigma_pos":
                sigma = _convert_arcsec(_parse_float(raw), m.unit)
            elif m.target == "extent":
                extent = _convert_arcsec(_parse_float(raw), m.unit)
            elif base == "mag":
                mags[m.band] = _parse_float(raw)
            elif base == "flux":
                try:
                    mags[m.band] = flux_to_magnitude(_parse_float(raw), m.flux_zero)
                except PhotometryError as e:
                    raise _RowRejected("nonpositive_flux", f"{m.source_column}: {e}")
            elif m.target == "class":
                class_mapped = True
                name = m.class_map.get(raw)
                if name is None:
                    obj_class = ObjectClass.UNKNOWN
                    unknown_class = True
                else:
                    obj_class = ObjectClass[name]
        except _RowRejected:
            raise
        except (ValueError, CoordinateError) as e:
            raise _RowRejected("bad_number", f"{m.source_column}: {e}")

    if ra is None:
        raise _RowRejected("missing_value", "ra")
    if dec is None:
        raise _RowRejected("missing_value", "dec")
    if object_id is None:
        raise _RowRejected("missing_value", "object_id")
    if sigma is None:
        sigma = schema.sigma_default_arcsec
    if not class_mapped:
        unknown_class = False

    try:
        pos = EquatorialPosition(ra, dec, schema.epoch_mjd)
    except CoordinateError:
        raise _RowRejected("dec_out_of_range", repr(dec))
    try:
        obj = SkyObject(
            object_id=object_id,
            pos=pos,
            sigma_pos_arcsec=sigma,
            mags=mags,
            obj_class=obj_class,
            extent_arcsec=extent,
        )
    except CoordinateError as e:
        msg = str(e)
        if "sigma" in msg:
            raise _RowRejected("nonpositive_sigma", repr(sigma))
        if "extent" in msg:
            raise _RowRejected("negative_extent", repr(extent))
        if "object_id" in msg:
            raise _RowRejected("id_out_of_range", repr(object_id))
        raise _RowRejected("invalid_row", msg)
    return obj, unknown_class


# -- domestic export / store -------------------------------------------------

CATALOG_FILE = "catalog.csv"
SCHEMA_FILE = "schema.json"
PROVENANCE_FILE = "provenance.json"
INDEX_FILE = "zones.npz"


def domestic_schema(schema: CatalogSchema) -> CatalogSchema:
    """The identity mapping a domestic CSV round-trips through."""
    identity_classes = {c.name: c.name for c in ObjectClass}
    cols = [
        ColumnMapping("object_id", "object_id"),
        ColumnMapping("ra", "ra", "deg"),
        ColumnMapping("dec", "dec", "deg"),
        ColumnMapping("sigma_pos", "sigma_pos", "arcsec"),
        ColumnMapping("class", "class", class_map=identity_classes),
        ColumnMapping("extent", "extent", "arcsec"),
    ]
    cols += [ColumnMapping(f"mag_{b}", f"mag:{b}", "mag") for b in schema.bands]
    return CatalogSchema(
        survey_name=schema.survey_name,
        bands=schema.bands,
        columns=tuple(cols),
        sigma_default_arcsec=schema.sigma_default_arcsec,
        epoch_mjd=schema.epoch_mjd,
    )


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def export_domestic(catalog: Catalog, out_dir) -> Path:
    """Write the catalog as a domestic store: normalized CSV + regenerated
    descriptor (+ provenance). Ingesting the output reproduces the catalog."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dschema = domestic_schema(catalog.schema)
    cols = catalog.schema.domestic_columns()
    with open(out / CATALOG_FILE, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for o in catalog.objects:
            row = [
                str(o.object_id),
                repr(o.pos.ra_deg),
                repr(o.pos.dec_deg),
                repr(o.sigma_pos_arcsec),
                o.obj_class.name,
                _fmt(o.extent_arcsec),
            ]
            row += [_fmt(o.mags.get(b)) for b in catalog.schema.bands]
            w.writerow(row)
    with open(out / SCHEMA_FILE, "w", encoding="utf-8") as fh:
        json.dump(schema_to_descriptor(dschema), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if catalog.provenance is not None:
        with open(out / PROVENANCE_FILE, "w", encoding="utf-8") as fh:
            json.dump(vars(catalog.provenance), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return out


def load_store(store_dir, schema_path=None) -> Catalog:
    """Load a domestic store directory written by export_domestic."""
    store = Path(store_dir)
    spath = Path(schema_path) if schema_path else store / SCHEMA_FILE
    try:
        schema = parse_schema(spath.read_text(encoding="utf-8"))
    except OSError as e:
        raise IngestError(f"cannot read schema {spath}: {e}") from e
    catalog, report = ingest_csv(store / CATALOG_FILE, schema)
    if report.rejected:
        raise IngestError(
            f"domestic store {store} has {report.rejected} invalid rows; "
            "stores must round-trip cleanly"
        )
    return catalog

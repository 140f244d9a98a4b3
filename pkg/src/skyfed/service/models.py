"""Pydantic request/response models shared by the node and portal services.

Result tables and sky objects serialize with repr-shortest floats and None
for NULL; timing never enters a body, so identical requests produce
byte-identical responses.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

from ..core import ResultTable


class QueryRequest(BaseModel):
    q: str


class ProbeIn(BaseModel):
    probe_id: int
    ra_deg: float
    dec_deg: float
    sigma_arcsec: float


class XMatchRequest(BaseModel):
    positions: list[ProbeIn]
    k: float = 3.0
    max_radius_arcsec: float = 30.0


class ColumnOut(BaseModel):
    name: str
    kind: str


class TableStats(BaseModel):
    row_count: int


class TableOut(BaseModel):
    columns: list[ColumnOut]
    rows: list[list[Any]]
    stats: TableStats

    @classmethod
    def from_table(cls, table: ResultTable) -> "TableOut":
        return cls(
            columns=[ColumnOut(name=n, kind=k) for n, k in table.columns],
            rows=[list(r) for r in table.rows],
            stats=TableStats(row_count=table.row_count),
        )


class MetadataOut(BaseModel):
    survey: str
    table: str
    bands: list[str]
    columns: list[str]
    object_count: int
    epoch_mjd: Optional[float] = None


class MatchOut(BaseModel):
    object: dict[str, Any]
    separation_arcsec: float


class ProbeResultOut(BaseModel):
    probe_id: int
    matches: list[MatchOut]


class XMatchOut(BaseModel):
    results: list[ProbeResultOut]


class ConeOut(BaseModel):
    objects: list[dict[str, Any]]
    count: int


class ErrorBody(BaseModel):
    code: str
    message: str
    offset: Optional[int] = None


class ErrorOut(BaseModel):
    error: ErrorBody


class SurveyInfo(BaseModel):
    survey: str
    url: str
    object_count: int
    bands: list[str]


class SurveysOut(BaseModel):
    surveys: list[SurveyInfo]
    default_k: float = Field(default=3.0)
    default_max_radius_arcsec: float = Field(default=30.0)


def object_to_dict(obj, bands) -> dict:
    """Flat domestic-column serialization of one catalog object."""
    out = {
        "object_id": obj.object_id,
        "ra": obj.pos.ra_deg,
        "dec": obj.pos.dec_deg,
        "sigma_pos": obj.sigma_pos_arcsec,
        "class": obj.obj_class.name,
        "extent": obj.extent_arcsec,
    }
    for b in bands:
        out[f"mag_{b}"] = obj.mags.get(b)
    return out

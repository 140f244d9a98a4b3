"""Per-archive catalog service: metadata, query, cone search, batch xmatch.

The HTTP layer is a pure adapter over the library calls -- every endpoint
result equals the corresponding in-process call; only serialization, row
caps, and time budgets live here. All 4xx/5xx bodies share one envelope:
{"error": {"code", "message", "offset"?}}.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..core import EquatorialPosition, table_to_json_dict
from ..errors import QueryError, QueryTimeout, RowCapExceeded, SkyfedError
from ..ingest import Catalog, load_store
from ..query import parse, plan
from ..query.executor import execute
from ..xmatch import Probe, match_probes
from ..zones import ConeQuery, ZoneIndex, build_index
from .models import (
    ErrorBody,
    ErrorOut,
    MetadataOut,
    QueryRequest,
    XMatchRequest,
    object_to_dict,
)

log = logging.getLogger("skyfed.node")

DEFAULT_ZONE_HEIGHT_DEG = 4.0 / 60.0
INDEX_SNAPSHOT = "zones.npz"


@dataclass(frozen=True)
class NodeConfig:
    store: str
    bind: str = "127.0.0.1"
    port: int = 8040
    schema: Optional[str] = None  # defaults to <store>/schema.json
    zone_height_deg: float = DEFAULT_ZONE_HEIGHT_DEG
    row_cap: int = 100_000
    timeout_ms: int = 30_000

    def __post_init__(self):
        if not (0 < self.port < 65536):
            raise SkyfedError(f"invalid port {self.port}")
        if not (self.zone_height_deg > 0):
            raise SkyfedError("zone_height_deg must be > 0")


def load_node_config(path) -> NodeConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = NodeConfig(**doc)
    if not Path(cfg.store).is_dir():
        raise SkyfedError(f"catalog store does not exist: {cfg.store}")
    if cfg.schema is not None and not Path(cfg.schema).is_file():
        raise SkyfedError(f"schema descriptor does not exist: {cfg.schema}")
    return cfg


def build_node_state(config: NodeConfig) -> tuple[Catalog, ZoneIndex]:
    """Load the store and its zone index (reusing a matching snapshot)."""
    catalog = load_store(config.store, config.schema)
    snap = Path(config.store) / INDEX_SNAPSHOT
    if snap.exists():
        try:
            index = ZoneIndex.load(snap)
            if (
                index.zone_height_deg == config.zone_height_deg
                and index.object_count == len(catalog)
            ):
                return catalog, index
        except Exception:  # stale or foreign snapshot: rebuild below
            log.warning("ignoring unreadable index snapshot %s", snap)
    index = build_index(catalog.objects, config.zone_height_deg)
    try:
        index.save(snap)
    except OSError:
        log.warning("could not write index snapshot %s", snap)
    return catalog, index


STATUS_BY_CODE = {
    "parse_error": 400,
    "plan_error": 400,
    "query_too_large": 400,
    "bad_request": 400,
    "row_cap_exceeded": 413,
    "timeout": 408,
    "node_unreachable": 502,
}


def error_response(code: str, message: str, offset: Optional[int] = None) -> JSONResponse:
    status = STATUS_BY_CODE.get(code, 400)
    body = ErrorOut(error=ErrorBody(code=code, message=message, offset=offset))
    return JSONResponse(status_code=status, content=body.model_dump(exclude_none=True))


def install_error_handlers(app: FastAPI):
    @app.exception_handler(SkyfedError)
    async def _domain_error(request: Request, exc: SkyfedError):
        offset = exc.offset if isinstance(exc, QueryError) else None
        return error_response(exc.code, str(exc), offset)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return error_response("bad_request", str(exc.errors()[:3]))

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        code = {404: "not_found", 405: "method_not_allowed"}.get(exc.status_code, "http_error")
        body = ErrorOut(error=ErrorBody(code=code, message=str(exc.detail)))
        return JSONResponse(status_code=exc.status_code, content=body.model_dump(exclude_none=True))

    @app.exception_handler(Exception)
    async def _internal_error(request: Request, exc: Exception):
        log.exception("internal error serving %s", request.url.path)
        body = ErrorOut(error=ErrorBody(code="internal", message="internal error"))
        return JSONResponse(status_code=500, content=body.model_dump(exclude_none=True))


def create_node_app(
    catalog: Catalog, index: ZoneIndex, config: Optional[NodeConfig] = None
) -> FastAPI:
    cfg = config or NodeConfig(store="<in-memory>")
    app = FastAPI(title=f"skyfed node: {catalog.schema.survey_name}", docs_url=None)
    install_error_handlers(app)
    bands = list(catalog.schema.bands)
    columns = catalog.schema.domestic_columns()

    def deadline() -> float:
        return time.monotonic() + cfg.timeout_ms / 1000.0

    @app.get("/v1/metadata", response_model=MetadataOut)
    def metadata() -> MetadataOut:
        return MetadataOut(
            survey=catalog.schema.survey_name,
            table=catalog.schema.survey_name,
            bands=bands,
            columns=columns,
            object_count=len(catalog),
            epoch_mjd=catalog.schema.epoch_mjd,
        )

    # bulk endpoints return prebuilt JSON: pydantic re-validation of 10^5-cell
    # tables costs more than the query itself

    @app.post("/v1/query")
    def query(body: QueryRequest) -> JSONResponse:
        ast = parse(body.q)
        p = plan(ast, catalog.schema)
        table = execute(p, catalog, index, row_cap=cfg.row_cap, deadline=deadline())
        return JSONResponse(table_to_json_dict(table))

    @app.get("/v1/cone")
    def cone(ra: float, dec: float, r_deg: float) -> JSONResponse:
        if not (0.0 <= r_deg <= 180.0):
            raise QueryError(f"r_deg must be in [0, 180], got {r_deg}")
        refs = index.cone_search(ConeQuery(EquatorialPosition(ra, dec), r_deg))
        if len(refs) > cfg.row_cap:
            raise RowCapExceeded(f"cone returns {len(refs)} objects; cap is {cfg.row_cap}")
        objs = [object_to_dict(catalog.objects[int(i)], bands) for i in refs]
        return JSONResponse({"objects": objs, "count": len(objs)})

    @app.post("/v1/xmatch")
    def xmatch(body: XMatchRequest) -> JSONResponse:
        probes = [
            Probe(p.probe_id, p.ra_deg, p.dec_deg, p.sigma_arcsec) for p in body.positions
        ]
        t_stop = deadline()
        results = match_probes(
            catalog, index, probes, k=body.k, max_radius_arcsec=body.max_radius_arcsec
        )
        if time.monotonic() > t_stop:
            raise QueryTimeout("xmatch exceeded the request time budget")
        out = [
            {
                "probe_id": p.probe_id,
                "matches": [
                    {
                        "object": object_to_dict(catalog.objects[m.ref], bands),
                        "separation_arcsec": m.separation_arcsec,
                    }
                    for m in matches
                ],
            }
            for p, matches in zip(probes, results)
        ]
        return JSONResponse({"results": out})

    return app


def create_node_app_from_config(config: NodeConfig) -> FastAPI:
    catalog, index = build_node_state(config)
    return create_node_app(catalog, index, config)

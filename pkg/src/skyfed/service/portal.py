"""The mediator portal's HTTP face: federation metadata, federated queries,
and the static web console."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..core import table_to_json_dict
from ..federation import Federation, FederationConfig, UpstreamError
from .models import ErrorBody, ErrorOut, QueryRequest, SurveyInfo, SurveysOut
from .node import install_error_handlers

log = logging.getLogger("skyfed.portal")

FALLBACK_PAGE = """<!doctype html>
<html><head><title>skyfed portal</title></head>
<body>
<h1>skyfed portal</h1>
<p>The web console bundle is not installed. POST queries to
<code>/v1/fedquery</code> as <code>{"q": "..."}</code>, or list surveys at
<code>/v1/surveys</code>.</p>
</body></html>
"""


def create_portal_app(federation: Federation, console_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="skyfed portal", docs_url=None)
    install_error_handlers(app)

    @app.exception_handler(UpstreamError)
    async def _upstream_error(request: Request, exc: UpstreamError):
        body = ErrorOut(error=ErrorBody(code=exc.code, message=str(exc), offset=exc.offset))
        return JSONResponse(
            status_code=exc.status, content=body.model_dump(exclude_none=True)
        )

    @app.get("/v1/surveys", response_model=SurveysOut)
    def surveys() -> SurveysOut:
        infos = [
            SurveyInfo(
                survey=m.survey,
                url=m.url,
                object_count=m.object_count,
                bands=list(m.bands),
            )
            for m in federation.surveys_info()
        ]
        return SurveysOut(
            surveys=infos,
            default_k=federation.config.k,
            default_max_radius_arcsec=federation.config.max_radius_arcsec,
        )

    @app.post("/v1/fedquery")
    def fedquery(body: QueryRequest) -> JSONResponse:
        # prebuilt JSON: skips pydantic re-validation of large tables
        return JSONResponse(table_to_json_dict(federation.fedquery(body.q)))

    console = console_dir or federation.config.console_dir
    if console and Path(console).is_dir():
        app.mount("/", StaticFiles(directory=console, html=True), name="console")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return FALLBACK_PAGE

    return app


def create_portal_app_from_config(config: FederationConfig) -> FastAPI:
    return create_portal_app(Federation(config))

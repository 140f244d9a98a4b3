"""Federated cross-match engine: plan a query across catalog nodes, stream
probe batches, and assemble combined result tables.

Matching is anchor-relative: the anchor survey's objects (cheapest filtered
set) are sent as probes to every chain survey's xmatch endpoint; a tuple
survives only if every chain survey matched (inner semantics). All matching
happens in domestic units with the k-sigma gate; node failures fail the whole
query, never a silent partial answer.
"""

from __future__ import annotations

import itertools
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import httpx
import numpy as np

from .core import ResultTable, table_from_json_dict
from .errors import (
    FederationError,
    NodeUnreachable,
    ParseError,
    PlanError,
    QueryTimeout,
    SkyfedError,
)
from .query.executor import ColumnTable, run_plan
from .query.nodes import (
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    OrderItem,
    Query,
    SelectItem,
    TableSource,
    Unary,
    XMatchSource,
    conjoin,
    conjuncts,
    pretty,
    pretty_expr,
    walk,
)
from .query.parser import parse
from .query.planner import ColumnInfo, build_plan

log = logging.getLogger("skyfed.portal")

DOMESTIC_BASE = ["object_id", "ra", "dec", "sigma_pos", "class", "extent"]
SEPARATION_COL = "separation_arcsec"


@dataclass(frozen=True)
class FederationNode:
    survey: str
    url: str


@dataclass(frozen=True)
class FederationConfig:
    nodes: tuple
    # max in-flight requests per node; 1 pipelines batches over a keep-alive
    # connection, which beats true concurrency against single-process nodes
    concurrency: int = 1
    batch_size: int = 1000
    k: float = 3.0
    max_radius_arcsec: float = 30.0
    row_cap: int = 100_000
    timeout_ms: int = 60_000
    bind: str = "127.0.0.1"
    port: int = 8030
    console_dir: Optional[str] = None

    def __post_init__(self):
        if not self.nodes:
            raise SkyfedError("federation needs at least one node")
        names = [n.survey for n in self.nodes]
        if len(set(names)) != len(names):
            raise SkyfedError(f"duplicate survey names in federation: {names}")
        if self.concurrency < 1 or self.batch_size < 1:
            raise SkyfedError("concurrency and batch_size must be >= 1")


def load_federation_config(path) -> FederationConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    nodes = tuple(FederationNode(n["survey"], n["url"]) for n in doc.pop("nodes", []))
    return FederationConfig(nodes=nodes, **doc)


@dataclass(frozen=True)
class SurveyMeta:
    survey: str
    url: str
    table: str
    bands: tuple
    columns: tuple
    object_count: int
    epoch_mjd: Optional[float]


@dataclass(frozen=True)
class XMatchPlan:
    anchor_survey: str
    anchor_filter: Optional[Expr]  # bare-name conjuncts pushed to the anchor node
    chain: tuple  # remaining surveys, ascending object count
    k: float
    max_radius_arcsec: float
    match_mode: str  # "all" | "best"
    ast: Query  # qualified AST (every column survey-qualified)
    estimates: dict = field(default_factory=dict)


class UpstreamError(SkyfedError):
    """A node answered our generated call with an error envelope."""

    def __init__(self, survey: str, status: int, code: str, message: str, offset=None):
        super().__init__(f"{survey}: {message}")
        self.survey = survey
        self.status = status
        self.code = code
        self.offset = offset


# -- AST utilities -------------------------------------------------------------


def _rewrite(e: Expr, fn) -> Expr:
    out = fn(e)
    if out is not e:
        return out
    if isinstance(e, Unary):
        return Unary(e.op, _rewrite(e.operand, fn), offset=e.offset)
    if isinstance(e, Binary):
        return Binary(e.op, _rewrite(e.left, fn), _rewrite(e.right, fn), offset=e.offset)
    if isinstance(e, FuncCall):
        return FuncCall(e.name, tuple(_rewrite(a, fn) for a in e.args), e.star, offset=e.offset)
    return e


def dequalify(e: Expr) -> Expr:
    """survey.col -> col, for pushdown into a single node's dialect."""

    def fn(n):
        if isinstance(n, ColumnRef) and n.survey is not None:
            return ColumnRef(n.name, offset=n.offset)
        return n

    return _rewrite(e, fn)


def flatten_qualifiers(e: Expr) -> Expr:
    """survey.col -> one flat name 'survey.col' for the joined-table planner."""

    def fn(n):
        if isinstance(n, ColumnRef) and n.survey is not None:
            return ColumnRef(f"{n.survey}.{n.name}", offset=n.offset)
        return n

    return _rewrite(e, fn)


def referenced_surveys(e: Expr) -> set:
    return {n.survey for n in walk(e) if isinstance(n, ColumnRef) and n.survey}


def _cone_to_separation(e: Expr, survey: str) -> Expr:
    """CONE(ra0, dec0, r) -> SEPARATION(survey.ra, survey.dec, ra0, dec0) <= r."""

    def fn(n):
        if isinstance(n, FuncCall) and n.name == "CONE" and len(n.args) == 3:
            sep = FuncCall(
                "SEPARATION",
                (
                    ColumnRef("ra", survey=survey),
                    ColumnRef("dec", survey=survey),
                    n.args[0],
                    n.args[1],
                ),
                offset=n.offset,
            )
            return Binary("<=", sep, n.args[2], offset=n.offset)
        return n

    return _rewrite(e, fn)


def parse_federated(text: str) -> Query:
    """Parse portal-dialect text and fully qualify every column reference.

    With several surveys in scope an unqualified column is an error listing
    the candidate surveys; with one survey it resolves implicitly.
    """
    ast = parse(text)
    if isinstance(ast.source, TableSource):
        return ast  # single-survey passthrough form
    surveys = ast.source.surveys
    if len(set(surveys)) != len(surveys):
        raise ParseError(f"duplicate survey in XMATCH: {surveys}", ast.source.offset)
    alias_names = {it.alias for it in ast.select if it.alias}

    def qualify(e: Expr, allow_aliases: bool) -> Expr:
        def fn(n):
            if isinstance(n, ColumnRef):
                if n.survey is not None:
                    if n.survey not in surveys:
                        raise ParseError(
                            f"unknown survey {n.survey!r} (XMATCH scope: {', '.join(surveys)})",
                            n.offset,
                        )
                    return n
                if allow_aliases and n.name in alias_names:
                    return n
                if len(surveys) == 1:
                    return ColumnRef(n.name, survey=surveys[0], offset=n.offset)
                raise ParseError(
                    f"ambiguous column {n.name!r}: qualify with one of "
                    f"{', '.join(surveys)}",
                    n.offset,
                )
            return n

        return _rewrite(e, fn)

    select = tuple(
        it if it.star else SelectItem(qualify(it.expr, False), it.alias, it.star)
        for it in ast.select
    )
    where = qualify(ast.where, False) if ast.where is not None else None
    group_by = tuple(qualify(g, True) for g in ast.group_by)
    order_by = tuple(OrderItem(qualify(o.expr, True), o.descending) for o in ast.order_by)
    return Query(
        select=select,
        source=ast.source,
        where=where,
        group_by=group_by,
        order_by=order_by,
        limit=ast.limit,
    )


# -- the federation ------------------------------------------------------------


class Federation:
    """Mediator over catalog nodes; config and cached metadata are immutable
    during a query."""

    def __init__(self, config: FederationConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self.urls = {n.survey: n.url for n in config.nodes}
        self.client = client or httpx.Client(timeout=30.0)
        self._meta: dict[str, SurveyMeta] = {}

    def close(self):
        self.client.close()

    # -- node I/O ---------------------------------------------------------

    def _url(self, survey: str) -> str:
        url = self.urls.get(survey)
        if url is None:
            raise FederationError(
                f"unknown survey {survey!r} (federation has: {', '.join(sorted(self.urls))})"
            )
        return url

    def _raise_upstream(self, survey: str, resp: httpx.Response):
        try:
            doc = resp.json()
            err = doc["error"]
            raise UpstreamError(
                survey, resp.status_code, err.get("code", "upstream_error"),
                err.get("message", ""), err.get("offset"),
            )
        except (ValueError, KeyError):
            raise UpstreamError(
                survey, resp.status_code, "upstream_error", f"HTTP {resp.status_code}"
            ) from None

    def _get(self, survey: str, path: str, params=None) -> dict:
        url = self._url(survey)
        try:
            resp = self.client.get(f"{url}{path}", params=params)
        except httpx.HTTPError as e:
            raise NodeUnreachable(survey, str(e)) from e
        if resp.status_code != 200:
            self._raise_upstream(survey, resp)
        return resp.json()

    def _post(self, survey: str, path: str, body: dict) -> dict:
        url = self._url(survey)
        try:
            resp = self.client.post(f"{url}{path}", json=body)
        except httpx.HTTPError as e:
            raise NodeUnreachable(survey, str(e)) from e
        if resp.status_code != 200:
            self._raise_upstream(survey, resp)
        return resp.json()

    def metadata(self, survey: str) -> SurveyMeta:
        meta = self._meta.get(survey)
        if meta is None:
            doc = self._get(survey, "/v1/metadata")
            meta = SurveyMeta(
                survey=survey,
                url=self._url(survey),
                table=doc["table"],
                bands=tuple(doc["bands"]),
                columns=tuple(doc["columns"]),
                object_count=int(doc["object_count"]),
                epoch_mjd=doc.get("epoch_mjd"),
            )
            self._meta[survey] = meta
        return meta

    def surveys_info(self) -> list[SurveyMeta]:
        return [self.metadata(n.survey) for n in self.config.nodes]

    def node_query(self, survey: str, text: str) -> ResultTable:
        doc = self._post(survey, "/v1/query", {"q": text})
        return table_from_json_dict(doc)

    # -- planning -----------------------------------------------------------

    def plan_xmatch(self, ast: Query) -> XMatchPlan:
        src = ast.source
        assert isinstance(src, XMatchSource)
        for s in src.surveys:
            self._url(s)  # unknown survey fails now, before any I/O
        metas = {s: self.metadata(s) for s in src.surveys}

        # attribute WHERE conjuncts to surveys; CONE carries no column refs,
        # so it is only attributable when a single survey is in scope
        per_survey: dict[str, list] = {s: [] for s in src.surveys}
        portal_parts = []
        if ast.where is not None:
            for part in conjuncts(ast.where):
                refs = referenced_surveys(part)
                if len(refs) == 0 and len(src.surveys) == 1:
                    refs = {src.surveys[0]}
                for n in walk(part):
                    if isinstance(n, FuncCall) and n.name == "CONE" and len(refs) != 1:
                        raise PlanError(
                            "CONE is ambiguous across surveys; use "
                            "SEPARATION(survey.ra, survey.dec, ra0, dec0) <= r",
                            n.offset,
                        )
                if len(refs) == 1:
                    survey = next(iter(refs))
                    per_survey[survey].append(part)
                    # the portal re-checks every conjunct over the joined
                    # tuples, where CONE must become an explicit separation
                    portal_parts.append(_cone_to_separation(part, survey))
                else:
                    portal_parts.append(part)
        ast = Query(
            select=ast.select,
            source=ast.source,
            where=conjoin(portal_parts) if portal_parts else None,
            group_by=ast.group_by,
            order_by=ast.order_by,
            limit=ast.limit,
        )

        # anchor: smallest estimated filtered cardinality
        estimates: dict[str, int] = {}
        for s in src.surveys:
            if per_survey[s]:
                where_text = pretty_expr(dequalify(conjoin(per_survey[s])))
                q = f"SELECT COUNT(*) FROM {metas[s].table} WHERE {where_text}"
                estimates[s] = int(self.node_query(s, q).rows[0][0])
            else:
                estimates[s] = metas[s].object_count
        anchor = min(
            src.surveys, key=lambda s: (estimates[s], metas[s].object_count, s)
        )
        chain = tuple(
            sorted(
                (s for s in src.surveys if s != anchor),
                key=lambda s: (metas[s].object_count, s),
            )
        )
        anchor_filter = (
            dequalify(conjoin(per_survey[anchor])) if per_survey[anchor] else None
        )
        return XMatchPlan(
            anchor_survey=anchor,
            anchor_filter=anchor_filter,
            chain=chain,
            k=src.k if src.k is not None else self.config.k,
            max_radius_arcsec=(
                src.max_radius_arcsec
                if src.max_radius_arcsec is not None
                else self.config.max_radius_arcsec
            ),
            match_mode=src.mode or "all",
            ast=ast,
            estimates=estimates,
        )

    # -- execution ----------------------------------------------------------

    def _survey_block(self, survey: str) -> list[str]:
        meta = self.metadata(survey)
        return DOMESTIC_BASE + [f"mag_{b}" for b in meta.bands] + [SEPARATION_COL]

    def _chain_matches(self, plan: XMatchPlan, survey: str, probes: list[dict]) -> dict:
        """probe_id -> list of match dicts, via batched xmatch calls with a
        bounded number of in-flight requests."""
        cfg = self.config
        batches = [
            probes[i : i + cfg.batch_size] for i in range(0, len(probes), cfg.batch_size)
        ]
        out: dict[int, list] = {}

        def one(batch):
            return self._post(
                survey,
                "/v1/xmatch",
                {
                    "positions": batch,
                    "k": plan.k,
                    "max_radius_arcsec": plan.max_radius_arcsec,
                },
            )

        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            for doc in pool.map(one, batches):
                for pr in doc["results"]:
                    out[int(pr["probe_id"])] = pr["matches"]
        return out

    def execute_xmatch(self, plan: XMatchPlan, deadline: Optional[float] = None) -> ResultTable:
        anchor = plan.anchor_survey
        anchor_meta = self.metadata(anchor)

        where = f" WHERE {pretty_expr(plan.anchor_filter)}" if plan.anchor_filter else ""
        anchor_table = self.node_query(
            anchor, f"SELECT * FROM {anchor_meta.table}{where}"
        )
        names = anchor_table.column_names
        anchor_rows = [dict(zip(names, r)) for r in anchor_table.rows]
        if deadline is not None and time.monotonic() > deadline:
            raise QueryTimeout("federated query exceeded its time budget")

        probes = [
            {
                "probe_id": i,
                "ra_deg": row["ra"],
                "dec_deg": row["dec"],
                "sigma_arcsec": row["sigma_pos"],
            }
            for i, row in enumerate(anchor_rows)
        ]

        chain_matches: dict[str, dict[int, list]] = {}
        if plan.chain and probes:
            with ThreadPoolExecutor(max_workers=max(1, len(plan.chain))) as pool:
                futs = {
                    s: pool.submit(self._chain_matches, plan, s, probes)
                    for s in plan.chain
                }
                chain_matches = {s: f.result() for s, f in futs.items()}
        if deadline is not None and time.monotonic() > deadline:
            raise QueryTimeout("federated query exceeded its time budget")

        # assemble surviving tuples: anchor row + one match per chain survey
        tuples: list[tuple] = []  # (id_vector, anchor_row, {survey: match})
        for i, row in enumerate(anchor_rows):
            per_survey_lists = []
            dead = False
            for s in plan.chain:
                matches = chain_matches.get(s, {}).get(i, [])
                if not matches:
                    dead = True
                    break
                if plan.match_mode == "best":
                    best = min(
                        matches,
                        key=lambda m: (m["separation_arcsec"], m["object"]["object_id"]),
                    )
                    per_survey_lists.append([best])
                else:
                    per_survey_lists.append(matches)
            if dead:
                continue
            for combo in itertools.product(*per_survey_lists):
                idvec = (row["object_id"],) + tuple(
                    m["object"]["object_id"] for m in combo
                )
                tuples.append((idvec, row, dict(zip(plan.chain, combo))))
        tuples.sort(key=lambda t: t[0])

        return self._project(plan, tuples, deadline)

    def _project(self, plan: XMatchPlan, tuples: list, deadline) -> ResultTable:
        surveys = (plan.anchor_survey,) + plan.chain
        # joined-table column metadata
        col_info: dict[str, ColumnInfo] = {}
        star_cols: list[str] = []
        kinds = {"object_id": "int", "class": "text"}
        for s in surveys:
            for c in self._survey_block(s):
                name = f"{s}.{c}"
                kind = kinds.get(c, "float")
                col_info[name] = ColumnInfo(name, kind, nullable=True)
                star_cols.append(name)

        n = len(tuples)
        data: dict[str, list] = {name: [] for name in star_cols}
        for idvec, row, combo in tuples:
            for c in self._survey_block(plan.anchor_survey):
                key = f"{plan.anchor_survey}.{c}"
                data[key].append(0.0 if c == SEPARATION_COL else row.get(c))
            for s in plan.chain:
                m = combo[s]
                obj = m["object"]
                for c in self._survey_block(s):
                    key = f"{s}.{c}"
                    data[key].append(
                        m["separation_arcsec"] if c == SEPARATION_COL else obj.get(c)
                    )

        cols = {}
        for name in star_cols:
            kind = col_info[name].kind
            if kind == "text":
                arr = np.array(data[name], dtype=object)
            else:
                arr = np.array(
                    [np.nan if v is None else float(v) for v in data[name]],
                    dtype=np.float64,
                )
            cols[name] = (kind, arr)
        table = ColumnTable(
            n=n, cols=cols, tiebreak=np.arange(n, dtype=np.uint64), ra_col=None, dec_col=None
        )

        flat_ast = self._flatten_ast(plan.ast)
        qplan = build_plan(
            flat_ast,
            col_info,
            table="xmatch",
            star_columns=star_cols,
            allow_cone=False,
        )
        return run_plan(qplan, table, row_cap=self.config.row_cap, deadline=deadline)

    @staticmethod
    def _flatten_ast(ast: Query) -> Query:
        select = tuple(
            it if it.star else SelectItem(flatten_qualifiers(it.expr), it.alias, it.star)
            for it in ast.select
        )
        return Query(
            select=select,
            source=ast.source,
            where=flatten_qualifiers(ast.where) if ast.where is not None else None,
            group_by=tuple(flatten_qualifiers(g) for g in ast.group_by),
            order_by=tuple(
                OrderItem(flatten_qualifiers(o.expr), o.descending) for o in ast.order_by
            ),
            limit=ast.limit,
        )

    # -- entry point ----------------------------------------------------------

    def fedquery(self, text: str) -> ResultTable:
        deadline = time.monotonic() + self.config.timeout_ms / 1000.0
        ast = parse_federated(text)
        if isinstance(ast.source, TableSource):
            # plain node query addressed to one survey
            survey = ast.source.name
            self._url(survey)
            return self.node_query(survey, pretty(ast))
        plan = self.plan_xmatch(ast)
        log.info(
            "xmatch plan: anchor=%s chain=%s k=%s cap=%s mode=%s estimates=%s",
            plan.anchor_survey,
            plan.chain,
            plan.k,
            plan.max_radius_arcsec,
            plan.match_mode,
            plan.estimates,
        )
        return self.execute_xmatch(plan, deadline)

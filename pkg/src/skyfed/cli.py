"""Single entry point driving ingest, services, queries, cross-matches,
mining, and fixture generation.

Exit codes: 0 success, 1 domain/validation error, 2 usage error,
3 upstream/IO failure. Logs and reports go to stderr; stdout carries data
only (CSV by default, JSON with --format json).
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from .core import ResultTable, table_from_json_dict, table_to_csv, table_to_json_dict
from .errors import IngestError, QueryError, SkyfedError
from .ingest import export_domestic, ingest_csv, load_store, parse_schema
from .service.node import NodeConfig, build_node_state, load_node_config

log = logging.getLogger("skyfed.cli")

EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_UPSTREAM = 3

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    level = LOG_LEVELS.get(os.environ.get("SKYFED_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _fail(code: str, message: str, exit_code: int):
    print(f"error: {code}: {message}", file=sys.stderr)
    sys.exit(exit_code)


def _caret_fail(code: str, message: str, offset, query: str):
    print(f"error: {code}: {message}", file=sys.stderr)
    if offset is not None:
        char = len(query.encode("utf-8")[:offset].decode("utf-8", "ignore"))
        line_start = query.rfind("\n", 0, char) + 1
        line_end = query.find("\n", char)
        if line_end < 0:
            line_end = len(query)
        print(query[line_start:line_end], file=sys.stderr)
        print(" " * (char - line_start) + "^", file=sys.stderr)
    sys.exit(EXIT_DOMAIN)


def _emit_table(table: ResultTable, fmt: str):
    if fmt == "json":
        sys.stdout.write(json.dumps(table_to_json_dict(table)) + "\n")
    else:
        sys.stdout.write(table_to_csv(table))


def _load_store_indexed(store: str):
    cfg = NodeConfig(store=store)
    return build_node_state(cfg)


@click.group()
def cli():
    """Desk-scale federated sky-catalog toolkit."""


# -- ingest / export -----------------------------------------------------------


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(), help="foreign CSV file")
@click.option("--schema", "schema_path", required=True, type=click.Path(), help="JSON schema descriptor")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="domestic store directory")
def ingest(input_path, schema_path, out_dir):
    """Convert a foreign survey CSV into a domestic store."""
    try:
        schema = parse_schema(Path(schema_path).read_text(encoding="utf-8"))
    except OSError as e:
        _fail("io_error", f"cannot read schema: {e}", EXIT_UPSTREAM)
    catalog, report = ingest_csv(input_path, schema)
    for rej in report.rejected_rows:
        print(
            json.dumps({"line": rej.line, "reason": rej.reason, "detail": rej.detail}),
            file=sys.stderr,
        )
    export_domestic(catalog, out_dir)
    print(
        json.dumps(
            {
                "read": report.read,
                "accepted": report.accepted,
                "rejected": report.rejected,
                "unknown_class": report.unknown_class,
            }
        ),
        file=sys.stderr,
    )
    if report.accepted == 0:
        sys.exit(EXIT_DOMAIN)


@cli.command()
@click.option("--store", required=True, type=click.Path(), help="existing store directory")
@click.option("--out", "out_dir", required=True, type=click.Path())
def export(store, out_dir):
    """Re-export a domestic store (normalization fixpoint)."""
    catalog = load_store(store)
    export_domestic(catalog, out_dir)


# -- services --------------------------------------------------------------------


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def node(config_path):
    """Serve one catalog as a SkyNode (foreground)."""
    import uvicorn

    from .service.node import create_node_app

    cfg = load_node_config(config_path)
    catalog, index = build_node_state(cfg)
    app = create_node_app(catalog, index, cfg)
    log.info("node %s: %d objects on %s:%d", catalog.schema.survey_name, len(catalog), cfg.bind, cfg.port)
    uvicorn.run(app, host=cfg.bind, port=cfg.port, log_level="warning")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def portal(config_path):
    """Serve the federation portal (foreground)."""
    import uvicorn

    from .federation import Federation, load_federation_config
    from .service.portal import create_portal_app

    cfg = load_federation_config(config_path)
    fed = Federation(cfg)
    app = create_portal_app(fed)
    log.info("portal over %d nodes on %s:%d", len(cfg.nodes), cfg.bind, cfg.port)
    uvicorn.run(app, host=cfg.bind, port=cfg.port, log_level="warning")


# -- queries ---------------------------------------------------------------------


@cli.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.argument("query_text")
def query(store, fmt, query_text):
    """Run a query against a local store."""
    from .query import parse, plan
    from .query.executor import execute

    catalog, index = _load_store_indexed(store)
    try:
        ast = parse(query_text)
        p = plan(ast, catalog.schema)
        table = execute(p, catalog, index)
    except QueryError as e:
        _caret_fail(e.code, str(e), e.offset, query_text)
    _emit_table(table, fmt)


@cli.command()
@click.option("--portal", "portal_url", required=True, help="portal base URL")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.argument("query_text")
def fedquery(portal_url, fmt, query_text):
    """Run a federated query through a portal."""
    import httpx

    try:
        resp = httpx.post(
            f"{portal_url.rstrip('/')}/v1/fedquery", json={"q": query_text}, timeout=120.0
        )
    except httpx.HTTPError as e:
        _fail("portal_unreachable", str(e), EXIT_UPSTREAM)
    if resp.status_code == 200:
        doc = resp.json()
        if fmt == "json":
            sys.stdout.write(json.dumps(doc) + "\n")
        else:
            sys.stdout.write(table_to_csv(table_from_json_dict(doc)))
        return
    try:
        err = resp.json()["error"]
    except Exception:
        _fail("portal_error", f"HTTP {resp.status_code}", EXIT_UPSTREAM)
    if resp.status_code >= 500:
        _fail(err.get("code", "upstream"), err.get("message", ""), EXIT_UPSTREAM)
    _caret_fail(err.get("code", "error"), err.get("message", ""), err.get("offset"), query_text)


@cli.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--ra", required=True, type=float)
@click.option("--dec", required=True, type=float)
@click.option("--r-deg", required=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def cone(store, ra, dec, r_deg, fmt):
    """Cone search against a local store; prints matching objects."""
    from .core import EquatorialPosition
    from .zones import ConeQuery

    catalog, index = _load_store_indexed(store)
    refs = index.cone_search(ConeQuery(EquatorialPosition(ra, dec), r_deg))
    cols = catalog.schema.domestic_columns()
    kinds = {"object_id": "int", "class": "text"}
    columns = [(c, kinds.get(c, "float")) for c in cols]
    rows = []
    for i in refs:
        o = catalog.objects[int(i)]
        row = [o.object_id, o.pos.ra_deg, o.pos.dec_deg, o.sigma_pos_arcsec, o.obj_class.name, o.extent_arcsec]
        row += [o.mags.get(b) for b in catalog.schema.bands]
        rows.append(tuple(row))
    _emit_table(ResultTable(columns=columns, rows=rows), fmt)


@cli.command()
@click.option("--store", required=True, type=click.Path())
@click.option("--probes", "probes_path", required=True, type=click.Path(), help="CSV: probe_id,ra_deg,dec_deg,sigma_arcsec")
@click.option("--k", type=float, default=3.0, show_default=True)
@click.option("--max-radius", "max_radius", type=float, default=30.0, show_default=True, help="hard cap, arcsec")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def xmatch(store, probes_path, k, max_radius, fmt):
    """Cross-match probe positions against a local store."""
    import csv as _csv

    from .xmatch import Probe, match_probes

    catalog, index = _load_store_indexed(store)
    probes = []
    try:
        with open(probes_path, newline="", encoding="utf-8") as fh:
            for row in _csv.DictReader(fh):
                probes.append(
                    Probe(
                        int(row["probe_id"]),
                        float(row["ra_deg"]),
                        float(row["dec_deg"]),
                        float(row["sigma_arcsec"]),
                    )
                )
    except (KeyError, ValueError) as e:
        _fail("bad_probes", f"cannot parse probe file: {e}", EXIT_DOMAIN)
    results = match_probes(catalog, index, probes, k=k, max_radius_arcsec=max_radius)
    rows = [
        (p.probe_id, m.object_id, m.separation_arcsec)
        for p, matches in zip(probes, results)
        for m in matches
    ]
    table = ResultTable(
        columns=[("probe_id", "int"), ("object_id", "int"), ("separation_arcsec", "float")],
        rows=rows,
    )
    _emit_table(table, fmt)


# -- mining ------------------------------------------------------------------------


@cli.group()
def mine():
    """Mining operations over local stores."""


@mine.command("grided-count")
@click.option("--store", required=True, type=click.Path())
@click.option("--cell-deg", required=True, type=float)
@click.option("--cut", "cut_text", default=None, help="boolean predicate, node dialect")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def mine_grided_count(store, cell_deg, cut_text, fmt):
    """Per-cell counts of objects passing a cut."""
    from .mining import GridSpec, compile_cut, grided_count

    catalog, _ = _load_store_indexed(store)
    cut = compile_cut(cut_text, catalog) if cut_text else None
    grid = grided_count(catalog, GridSpec(cell_deg), cut)
    rows = [(x, y, n) for (x, y), n in sorted(grid.items())]
    _emit_table(
        ResultTable(columns=[("cx", "int"), ("cy", "int"), ("count", "int")], rows=rows),
        fmt,
    )


@mine.command("fof")
@click.option("--store", required=True, type=click.Path())
@click.option("--link-radius-arcsec", required=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def mine_fof(store, link_radius_arcsec, fmt):
    """Friends-of-friends cluster labels."""
    from .mining import friends_of_friends

    catalog, index = _load_store_indexed(store)
    labeling = friends_of_friends(catalog, index, link_radius_arcsec)
    rows = sorted(labeling.labels.items())
    _emit_table(
        ResultTable(columns=[("object_id", "int"), ("cluster_id", "int")], rows=rows), fmt
    )


@mine.command("isolated")
@click.option("--store", required=True, type=click.Path())
@click.option("--radius-arcsec", required=True, type=float)
@click.option("--max-neighbors", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def mine_isolated(store, radius_arcsec, max_neighbors, fmt):
    """Objects with at most --max-neighbors others within the radius."""
    from .mining import isolated_points

    catalog, index = _load_store_indexed(store)
    ids = isolated_points(catalog, index, radius_arcsec, max_neighbors)
    _emit_table(ResultTable(columns=[("object_id", "int")], rows=[(i,) for i in ids]), fmt)


@mine.command("movers")
@click.option("--store-a", required=True, type=click.Path(), help="first-epoch store")
@click.option("--store-b", required=True, type=click.Path(), help="second-epoch store")
@click.option("--min-sep-arcsec", required=True, type=float)
@click.option("--max-sep-arcsec", required=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def mine_movers(store_a, store_b, min_sep_arcsec, max_sep_arcsec, fmt):
    """Displaced detections between two epochs."""
    from .mining import moving_candidates

    cat_a = load_store(store_a)
    cat_b = load_store(store_b)
    try:
        cands = moving_candidates(cat_a, cat_b, min_sep_arcsec, max_sep_arcsec)
    except ValueError as e:
        _fail("bad_window", str(e), EXIT_DOMAIN)
    rows = [
        (m.id_a, m.id_b, m.separation_arcsec, m.rate_arcsec_per_day) for m in cands
    ]
    _emit_table(
        ResultTable(
            columns=[
                ("id_a", "int"),
                ("id_b", "int"),
                ("separation_arcsec", "float"),
                ("rate_arcsec_per_day", "float"),
            ],
            rows=rows,
        ),
        fmt,
    )


# -- fixtures -----------------------------------------------------------------------


@cli.command("gen-fixture")
@click.option("--objects", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--movers", type=int, default=0, show_default=True)
@click.option("--clusters", type=int, default=0, show_default=True)
@click.option("--cluster-size", type=int, default=100, show_default=True)
@click.option("--cluster-sigma-arcsec", type=float, default=10.0, show_default=True)
@click.option("--isolated", type=int, default=0, show_default=True)
@click.option("--coincidences", type=int, default=0, show_default=True)
@click.option("--surveys", default="photoobj", show_default=True, help="comma-separated survey names")
@click.option("--bands", default="g,r,i", show_default=True)
@click.option("--dec-min", type=float, default=-90.0, show_default=True)
@click.option("--dec-max", type=float, default=90.0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def gen_fixture(
    objects, seed, movers, clusters, cluster_size, cluster_sigma_arcsec,
    isolated, coincidences, surveys, bands, dec_min, dec_max, out_dir,
):
    """Deterministic synthetic catalogs with a ground-truth manifest."""
    from .fixtures import FixtureSpec, write_fixture

    if objects < 0:
        raise click.UsageError("--objects must be >= 0")
    spec = FixtureSpec(
        objects=objects,
        seed=seed,
        movers=movers,
        clusters=clusters,
        cluster_size=cluster_size,
        cluster_sigma_arcsec=cluster_sigma_arcsec,
        isolated=isolated,
        coincidences=coincidences,
        surveys=tuple(s.strip() for s in surveys.split(",") if s.strip()),
        bands=tuple(b.strip() for b in bands.split(",") if b.strip()),
        dec_min=dec_min,
        dec_max=dec_max,
    )
    manifest = write_fixture(spec, out_dir)
    log.info(
        "fixture written: %d catalog(s), %d movers, %d clusters",
        len(manifest["catalogs"]), len(manifest["movers"]), len(manifest["clusters"]),
    )


def main():
    _configure_logging()
    try:
        cli(prog_name="skyfed")
    except QueryError as e:
        _fail(e.code, str(e), EXIT_DOMAIN)
    except IngestError as e:
        if isinstance(e.__cause__, OSError):
            _fail(e.code, str(e), EXIT_UPSTREAM)
        _fail(e.code, str(e), EXIT_DOMAIN)
    except SkyfedError as e:
        _fail(e.code, str(e), EXIT_DOMAIN)
    except OSError as e:
        _fail("io_error", str(e), EXIT_UPSTREAM)


if __name__ == "__main__":
    main()

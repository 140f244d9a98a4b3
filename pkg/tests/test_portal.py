import dataclasses

import httpx
import pytest
from fastapi.testclient import TestClient

from skyfed.errors import FederationError, NodeUnreachable, ParseError, PlanError
from skyfed.federation import (
    Federation,
    FederationConfig,
    FederationNode,
    parse_federated,
)
from skyfed.fixtures import FixtureSpec, generate_fixture
from skyfed.query import parse, pretty
from skyfed.query.nodes import TableSource, XMatchSource
from skyfed.service.node import NodeConfig, create_node_app
from skyfed.service.portal import create_portal_app
from skyfed.zones import build_index

from oracle_interp import run_query
from oracles import brute_fed_matches, fed_tuple_set
from server_util import run_apps
from tablecmp import assert_tables_equal

SURVEYS = ("sdss", "first", "twomass")


@pytest.fixture(scope="module")
def fed_fixture():
    catalogs, manifest = generate_fixture(
        FixtureSpec(objects=2000, seed=41, coincidences=50, surveys=SURVEYS)
    )
    return catalogs, manifest


@pytest.fixture(scope="module")
def federation(fed_fixture):
    catalogs, _ = fed_fixture
    apps = {
        s: create_node_app(catalogs[s], build_index(catalogs[s].objects), NodeConfig(store="<t>"))
        for s in SURVEYS
    }
    with run_apps(apps) as urls:
        config = FederationConfig(
            nodes=tuple(FederationNode(s, urls[s]) for s in SURVEYS)
        )
        fed = Federation(config)
        yield catalogs, fed
        fed.close()


class TestParseFederated:
    def test_two_survey_skeleton(self):
        ast = parse_federated(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3"
        )
        assert isinstance(ast.source, XMatchSource)
        assert ast.source.surveys == ("sdss", "first")
        assert ast.source.k == 3.0

    def test_ambiguous_column_lists_candidates(self):
        with pytest.raises(ParseError) as err:
            parse_federated("SELECT ra FROM XMATCH(sdss, first)")
        msg = str(err.value)
        assert "ambiguous" in msg and "sdss" in msg and "first" in msg

    def test_single_survey_implicit_qualification(self):
        ast = parse_federated("SELECT ra FROM XMATCH(sdss)")
        assert ast.select[0].expr.survey == "sdss"

    def test_unknown_survey_in_column(self):
        with pytest.raises(ParseError) as err:
            parse_federated("SELECT nope.ra FROM XMATCH(sdss, first)")
        assert "unknown survey" in str(err.value)

    def test_alias_in_order_by_not_ambiguous(self):
        ast = parse_federated(
            "SELECT sdss.mag_g - first.mag_g AS c FROM XMATCH(sdss, first) ORDER BY c"
        )
        assert ast.order_by[0].expr.name == "c"

    def test_passthrough_table_source(self):
        ast = parse_federated("SELECT COUNT(*) FROM sdss")
        assert isinstance(ast.source, TableSource)

    def test_round_trip_federated_corpus(self):
        from test_query_lang import federated_queries

        for f in federated_queries():
            ast = parse(f.read_text().strip())
            assert parse(pretty(ast)) == ast, f.name


class TestPlanXmatch:
    def test_filtered_survey_becomes_anchor(self, federation):
        _, fed = federation
        ast = parse_federated(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(first, sdss) "
            "WHERE sdss.mag_g < 15.0"
        )
        plan = fed.plan_xmatch(ast)
        assert plan.anchor_survey == "sdss"
        assert plan.chain == ("first",)
        assert plan.estimates["sdss"] < plan.estimates["first"]
        assert plan.anchor_filter is not None

    def test_single_survey_degenerate(self, federation):
        catalogs, fed = federation
        table = fed.fedquery("SELECT COUNT(*) FROM XMATCH(sdss)")
        assert table.rows[0][0] == len(catalogs["sdss"])

    def test_unknown_survey_in_xmatch(self, federation):
        _, fed = federation
        with pytest.raises(FederationError) as err:
            fed.fedquery("SELECT nope.ra FROM XMATCH(nope)")
        assert "unknown survey" in str(err.value)
        assert err.value.code == "plan_error"

    def test_cone_rejected_with_hint(self, federation):
        _, fed = federation
        with pytest.raises(PlanError) as err:
            fed.fedquery(
                "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) "
                "WHERE CONE(10.0, 10.0, 1.0)"
            )
        assert "SEPARATION" in str(err.value)

    def test_cone_allowed_for_single_survey_xmatch(self, federation):
        catalogs, fed = federation
        got = fed.fedquery(
            "SELECT sdss.object_id FROM XMATCH(sdss) WHERE CONE(180.0, 0.0, 20.0) "
            "ORDER BY sdss.object_id"
        )
        from skyfed.core import separation_deg

        cat = catalogs["sdss"]
        want = sorted(
            o.object_id
            for o in cat.objects
            if separation_deg(o.pos.ra_deg, o.pos.dec_deg, 180.0, 0.0) <= 20.0
        )
        assert [r[0] for r in got.rows] == want
        assert len(want) > 0


class TestExecuteXmatch:
    def test_planted_triple(self):
        catalogs, manifest = generate_fixture(
            FixtureSpec(objects=50, seed=43, coincidences=1, surveys=SURVEYS)
        )
        apps = {
            s: create_node_app(catalogs[s], build_index(catalogs[s].objects), NodeConfig(store="<t>"))
            for s in SURVEYS
        }
        with run_apps(apps) as urls:
            fed = Federation(
                FederationConfig(nodes=tuple(FederationNode(s, urls[s]) for s in SURVEYS))
            )
            try:
                table = fed.fedquery(
                    "SELECT sdss.object_id, first.object_id, twomass.object_id, "
                    "first.separation_arcsec, twomass.separation_arcsec "
                    "FROM XMATCH(sdss, first, twomass) WITH k = 3.0"
                )
            finally:
                fed.close()
        planted = manifest["coincidences"][0]["ids"]
        assert table.row_count == 1
        row = dict(zip(table.column_names, table.rows[0]))
        assert row["sdss.object_id"] == planted["sdss"]
        assert row["first.object_id"] == planted["first"]
        assert row["twomass.object_id"] == planted["twomass"]
        assert 0.0 <= row["first.separation_arcsec"] < 0.5
        assert 0.0 <= row["twomass.separation_arcsec"] < 0.5

    def test_anchor_only_object_gives_no_tuple(self, federation):
        catalogs, fed = federation
        # tight k over the random field: only planted coincidences survive
        table = fed.fedquery(
            "SELECT sdss.object_id, first.object_id, twomass.object_id "
            "FROM XMATCH(sdss, first, twomass) WITH k = 3.0"
        )
        matches = brute_fed_matches(
            catalogs["sdss"],
            {s: catalogs[s] for s in ("first", "twomass")},
            3.0,
            30.0,
        )
        want = fed_tuple_set(matches, ("first", "twomass"))
        got = {tuple(r) for r in table.rows}
        assert got == want
        assert len(got) >= 50  # the planted coincidences all survived

    def test_mode_best_and_monotonicity_in_k(self, federation):
        catalogs, fed = federation
        q_all_k2 = fed.fedquery(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 2.0"
        )
        q_all_k3 = fed.fedquery(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3.0"
        )
        assert {tuple(r) for r in q_all_k2.rows} <= {tuple(r) for r in q_all_k3.rows}

        q_best = fed.fedquery(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) "
            "WITH k = 3.0, mode = best"
        )
        anchors = [r[0] for r in q_best.rows]
        assert len(anchors) == len(set(anchors))  # one tuple per anchor
        matches = brute_fed_matches(catalogs["sdss"], {"first": catalogs["first"]}, 3.0, 30.0)
        want_best = fed_tuple_set(matches, ("first",), mode="best")
        assert {tuple(r) for r in q_best.rows} == want_best

    def test_chain_permutation_invariance(self, federation):
        _, fed = federation
        ast = parse_federated(
            "SELECT sdss.object_id, first.object_id, twomass.object_id "
            "FROM XMATCH(sdss, first, twomass) WITH k = 3.0"
        )
        plan = fed.plan_xmatch(ast)
        flipped = dataclasses.replace(plan, chain=tuple(reversed(plan.chain)))
        t1 = fed.execute_xmatch(plan)
        t2 = fed.execute_xmatch(flipped)
        key1 = {tuple(r) for r in t1.rows}
        key2 = {tuple(r) for r in t2.rows}
        assert key1 == key2

    def test_pair_level_match_symmetry(self, federation):
        # the k-sigma gate is symmetric in the two errors, so swapping the
        # anchor must yield the same set of matched pairs
        _, fed = federation
        ast = parse_federated(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3.0"
        )
        plan = fed.plan_xmatch(ast)
        swapped = dataclasses.replace(
            plan, anchor_survey=plan.chain[0], chain=(plan.anchor_survey,)
        )
        t1 = fed.execute_xmatch(plan)
        t2 = fed.execute_xmatch(swapped)
        cols1 = dict(zip(t1.column_names, range(len(t1.column_names))))
        cols2 = dict(zip(t2.column_names, range(len(t2.column_names))))
        pairs1 = {
            (r[cols1["sdss.object_id"]], r[cols1["first.object_id"]]) for r in t1.rows
        }
        pairs2 = {
            (r[cols2["sdss.object_id"]], r[cols2["first.object_id"]]) for r in t2.rows
        }
        assert pairs1 == pairs2

    def test_no_duplicate_tuples(self, federation):
        _, fed = federation
        table = fed.fedquery(
            "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3.0"
        )
        assert len(table.rows) == len({tuple(r) for r in table.rows})

    def test_federated_filter_and_projection_vs_oracle(self, federation):
        catalogs, fed = federation
        text = (
            "SELECT sdss.object_id, sdss.mag_g - twomass.mag_g AS crosscolor "
            "FROM XMATCH(sdss, twomass) WITH k = 3.0 "
            "WHERE sdss.class = 'GALAXY' ORDER BY crosscolor DESC LIMIT 20"
        )
        got = fed.fedquery(text)

        # オracle: joined rows from the brute matcher, then the naive interpreter
        matches = brute_fed_matches(catalogs["sdss"], {"twomass": catalogs["twomass"]}, 3.0, 30.0)
        rows = []
        for oa, per_survey in matches:
            for ob, sep in per_survey["twomass"]:
                row = {}
                for prefix, obj in (("sdss", oa), ("twomass", ob)):
                    row[f"{prefix}.object_id"] = obj.object_id
                    row[f"{prefix}.ra"] = obj.pos.ra_deg
                    row[f"{prefix}.dec"] = obj.pos.dec_deg
                    row[f"{prefix}.sigma_pos"] = obj.sigma_pos_arcsec
                    row[f"{prefix}.class"] = obj.obj_class.name
                    row[f"{prefix}.extent"] = obj.extent_arcsec
                    for b in ("g", "r", "i"):
                        row[f"{prefix}.mag_{b}"] = obj.mags.get(b)
                row["sdss.separation_arcsec"] = 0.0
                row["twomass.separation_arcsec"] = sep
                row["__tiebreak__"] = (oa.object_id, ob.object_id)
                rows.append(row)
        from skyfed.federation import Federation as F

        flat = F._flatten_ast(parse_federated(text))
        want = run_query(flat, rows=rows, star_columns=[])
        assert_tables_equal(got, want, context="federated filter/projection")


@pytest.fixture(scope="module")
def portal_client(federation):
    _, fed = federation
    app = create_portal_app(fed)
    with TestClient(app, raise_server_exceptions=False) as client:
        yield client


class TestPortalEndpoints:
    def test_surveys_metadata(self, portal_client, fed_fixture):
        catalogs, _ = fed_fixture
        doc = portal_client.get("/v1/surveys").json()
        got = {s["survey"]: s["object_count"] for s in doc["surveys"]}
        assert got == {s: len(catalogs[s]) for s in SURVEYS}

    def test_fedquery_combined_columns(self, portal_client):
        resp = portal_client.post(
            "/v1/fedquery",
            json={"q": "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3.0"},
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert [c["name"] for c in doc["columns"]] == ["sdss.object_id", "first.object_id"]

    def test_unknown_survey_400(self, portal_client):
        resp = portal_client.post(
            "/v1/fedquery", json={"q": "SELECT nope.x FROM XMATCH(nope)"}
        )
        assert resp.status_code == 400
        assert "unknown survey" in resp.json()["error"]["message"]

    def test_parse_error_offset(self, portal_client):
        resp = portal_client.post("/v1/fedquery", json={"q": "SELEC 1"})
        assert resp.status_code == 400
        assert resp.json()["error"]["offset"] == 0

    def test_deterministic_bodies(self, portal_client):
        body = {"q": "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first) WITH k = 3.0"}
        a = portal_client.post("/v1/fedquery", json=body)
        b = portal_client.post("/v1/fedquery", json=body)
        assert a.content == b.content

    def test_passthrough_query(self, portal_client, fed_fixture):
        catalogs, _ = fed_fixture
        resp = portal_client.post("/v1/fedquery", json={"q": "SELECT COUNT(*) FROM sdss"})
        assert resp.json()["rows"] == [[len(catalogs["sdss"])]]

    def test_console_fallback_page(self, portal_client):
        resp = portal_client.get("/")
        assert resp.status_code == 200
        assert "skyfed portal" in resp.text


class TestNodeFailure:
    def test_stopped_node_names_it(self, fed_fixture):
        catalogs, _ = fed_fixture
        app = create_node_app(
            catalogs["sdss"], build_index(catalogs["sdss"].objects), NodeConfig(store="<t>")
        )
        with run_apps({"sdss": app}) as urls:
            config = FederationConfig(
                nodes=(
                    FederationNode("sdss", urls["sdss"]),
                    FederationNode("first", "http://127.0.0.1:9"),  # nothing listens here
                )
            )
            fed = Federation(config, client=httpx.Client(timeout=2.0))
            try:
                with pytest.raises(NodeUnreachable) as err:
                    fed.fedquery(
                        "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first)"
                    )
                assert err.value.survey == "first"
            finally:
                fed.close()

    def test_portal_returns_502(self, fed_fixture):
        catalogs, _ = fed_fixture
        app = create_node_app(
            catalogs["sdss"], build_index(catalogs["sdss"].objects), NodeConfig(store="<t>")
        )
        with run_apps({"sdss": app}) as urls:
            config = FederationConfig(
                nodes=(
                    FederationNode("sdss", urls["sdss"]),
                    FederationNode("first", "http://127.0.0.1:9"),
                )
            )
            fed = Federation(config, client=httpx.Client(timeout=2.0))
            portal = create_portal_app(fed)
            with TestClient(portal, raise_server_exceptions=False) as client:
                resp = client.post(
                    "/v1/fedquery",
                    json={"q": "SELECT sdss.object_id, first.object_id FROM XMATCH(sdss, first)"},
                )
            fed.close()
            assert resp.status_code == 502
            err = resp.json()["error"]
            assert err["code"] == "node_unreachable"
            assert "first" in err["message"]

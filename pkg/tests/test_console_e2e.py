"""Console end-to-end over a live federation, driving the BUILT frontend
modules from Node (this sandbox has no browser; the DOM layer is covered by
the frontend's own vitest suite)."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from skyfed.federation import Federation, FederationConfig, FederationNode
from skyfed.fixtures import FixtureSpec, generate_fixture
from skyfed.service.node import NodeConfig, create_node_app
from skyfed.service.portal import create_portal_app
from skyfed.zones import build_index

from server_util import run_app, run_apps

REPO = Path(__file__).resolve().parent.parent
DIST = REPO / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    not (DIST / "js" / "api.js").exists() or shutil.which("node") is None,
    reason="frontend bundle not built or node unavailable",
)

SURVEYS = ("sdss", "first")


@pytest.fixture(scope="module")
def stack():
    catalogs, _ = generate_fixture(
        FixtureSpec(objects=1500, seed=88, coincidences=40, surveys=SURVEYS)
    )
    apps = {
        s: create_node_app(catalogs[s], build_index(catalogs[s].objects), NodeConfig(store="<t>"))
        for s in SURVEYS
    }
    with run_apps(apps) as urls:
        fed = Federation(
            FederationConfig(nodes=tuple(FederationNode(s, urls[s]) for s in SURVEYS))
        )
        portal = create_portal_app(fed, console_dir=str(DIST))
        with run_app(portal) as portal_url:
            yield portal_url
        fed.close()


def test_portal_serves_console_bundle(stack):
    import httpx

    page = httpx.get(f"{stack}/")
    assert page.status_code == 200
    assert "skyfed console" in page.text
    js = httpx.get(f"{stack}/js/main.js")
    assert js.status_code == 200
    assert "fedquery" in js.text


def test_console_behaviors_end_to_end(stack, tmp_path):
    corpus = REPO / "corpus" / "federated" / "f01.sql"
    proc = subprocess.run(
        ["node", str(REPO / "frontend" / "scripts" / "e2e.mjs"), stack, str(corpus)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    result = json.loads(proc.stdout)

    # 1. corpus query row count equals the CLI's
    cli = subprocess.run(
        [sys.executable, "-m", "skyfed.cli", "fedquery", "--portal", stack,
         corpus.read_text().strip()],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert cli.returncode == 0, cli.stderr
    cli_rows = len(cli.stdout.splitlines()) - 1  # header line
    assert result["corpus"]["kind"] == "table"
    assert result["corpus"]["rowCount"] == cli_rows
    assert cli_rows >= 40  # the planted coincidences

    # 2. syntax error renders a caret at the server-reported offset
    se = result["syntaxError"]
    assert se["kind"] == "error"
    assert se["code"] == "parse_error"
    assert se["offset"] == 0
    assert se["caretBlock"] == "SELEC 1\n^"

    # 3. brushing produces a CONE predicate whose execution returns exactly
    #    the brushed markers' objects
    brush = result["brush"]
    assert brush.get("exactMatch") is True, brush
    assert brush["highlightedCount"] >= 1
    assert brush["predicate"].startswith("CONE(")

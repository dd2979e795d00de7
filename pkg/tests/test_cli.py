"""CLI against a live node: every command group end to end."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from conftest import REL_M_FB, register_cluster
from knowmesh import Node
from knowmesh.cli import main
from knowmesh.config import ENV_VAR, NodeConfig
from knowmesh.service import NodeServer


@pytest.fixture
def live(tmp_path):
    node = register_cluster(Node("mirima", data_dir=tmp_path / "data"))
    srv = NodeServer(node, "127.0.0.1", 0).start()
    config = NodeConfig(partner_id="mirima", listen=f"127.0.0.1:{srv.port}",
                        data_dir=str(tmp_path / "data"))
    config_path = tmp_path / "knowmesh.json"
    config.save(config_path)
    yield srv, str(config_path)
    srv.stop()


def run(config_path, *args, expect_exit=0):
    result = CliRunner().invoke(main, ["--config", config_path, *args])
    assert result.exit_code == expect_exit, result.output
    return json.loads(result.output.strip()) if result.output.strip() else None


def test_card_lifecycle(live):
    _, config = live
    card = run(config, "card", "create", "--title", "M. Production process",
               "--perspective", "Partner", "--nature", "Experience", "--form", "Explicit",
               "--body", "varnish, assemble")
    cid = card["card_id"]
    run(config, "card", "edit", cid, "--author", "fb", "--body", "v2")
    history = run(config, "card", "history", cid)
    assert [r["author"] for r in history] == ["mirima", "fb"]
    run(config, "card", "comment", cid, "--author", "mirima", "--text", "ok")
    shown = run(config, "card", "show", cid)
    assert shown["comments"][0]["text"] == "ok"
    run(config, "card", "classify", cid, "--perspective", "Partner",
        "--nature", "Methodology", "--form", "Explicit")
    hits = run(config, "card", "search", "--nature", "Methodology")
    assert [c["card_id"] for c in hits] == [cid]


def test_tacit_card_with_expert(live):
    _, config = live
    card = run(config, "card", "create", "--title", "Varnish expert",
               "--perspective", "Partner", "--nature", "Experience", "--form", "Tacit",
               "--expert", "A. Varnisher|FB|workshop 2")
    assert card["expert_refs"] == [
        {"name": "A. Varnisher", "organisation": "FB", "contact": "workshop 2"}
    ]


def test_links(live):
    _, config = live
    a = run(config, "card", "create", "--title", "seat production", "--perspective", "Partner",
            "--nature", "Experience", "--form", "Explicit", "--body", "a")["card_id"]
    b = run(config, "card", "create", "--title", "M. Production process", "--perspective",
            "Partner", "--nature", "Experience", "--form", "Explicit", "--body", "b")["card_id"]
    run(config, "card", "link", a, b, "PartOf")
    assert run(config, "card", "show", a)["links"] == [
        {"source": a, "target": b, "link_type": "PartOf"}
    ]
    run(config, "card", "link", a, b, "PartOf", "--remove")
    assert run(config, "card", "show", a)["links"] == []


def test_partner_and_relationship_commands(live):
    _, config = live
    run(config, "partner", "add", "--name", "New Firm", "--kind", "Firm", "--id", "newf")
    partners = run(config, "partner", "list")
    assert any(p["partner_id"] == "newf" for p in partners)
    rel = run(config, "rel", "propose", "newf", "fb", "--id", "rel-new")
    assert rel["state"] == "Analysis"
    assert run(config, "rel", "define", "rel-new", "--goal", "learn")["state"] == "Defining"
    assert run(config, "rel", "collaborate", "rel-new")["state"] == "Collaborating"
    assert run(config, "rel", "facilitator", "rel-new", "uni")["facilitator"] == "uni"
    assert run(config, "rel", "close", "rel-new")["state"] == "Closed"


def test_share_and_error_surface(live):
    _, config = live
    card = run(config, "card", "create", "--title", "X", "--perspective", "Partner",
               "--nature", "Experience", "--form", "Explicit", "--body", "x")
    grant = run(config, "share", "grant", card["card_id"], REL_M_FB)
    assert grant["revoked"] is False
    run(config, "share", "revoke", grant["grant_id"])
    result = CliRunner().invoke(main, ["--config", config, "share", "revoke", grant["grant_id"]])
    assert result.exit_code != 0
    assert "AlreadyRevoked" in result.output


def test_process_commands(live):
    _, config = live
    card = run(config, "card", "create", "--title", "X", "--perspective", "Partner",
               "--nature", "Experience", "--form", "Explicit", "--body", "x")
    process = run(config, "process", "define", "--name", "stool production",
                  "--activity", "varnishing|fb|" + REL_M_FB,
                  "--activity", "assembly|mirima|" + REL_M_FB)
    activity = process["activities"][1]["activity_id"]
    run(config, "process", "attach", process["process_id"], activity, card["card_id"],
        "--note", "ctx")
    report = run(config, "process", "report", process["process_id"])
    assert report["coverage"] == 0.5


def test_bundle_commands(live, tmp_path):
    _, config = live
    card = run(config, "card", "create", "--title", "X", "--perspective", "Partner",
               "--nature", "Experience", "--form", "Explicit", "--body", "x")
    out = tmp_path / "bundle.json"
    written = run(config, "bundle", "export", card["card_id"], "--out", str(out))
    assert written["manifest"]["card_count"] == 1
    report = run(config, "bundle", "import", str(out), "--policy", "Skip")
    assert report == {"added": 0, "merged": 0, "skipped": 1}


def test_env_var_config(live, monkeypatch):
    _, config = live
    monkeypatch.setenv(ENV_VAR, config)
    result = CliRunner().invoke(main, ["partner", "list"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)


def test_sync_pull_command(tmp_path):
    m = register_cluster(Node("mirima"))
    fb = register_cluster(Node("fb"))
    m_srv = NodeServer(m, "127.0.0.1", 0).start()
    fb_srv = NodeServer(fb, "127.0.0.1", 0).start()
    from knowmesh.service import HttpPeer

    fb.set_peer(REL_M_FB, HttpPeer(m_srv.base_url))
    fb_config = tmp_path / "fb.json"
    NodeConfig(partner_id="fb", listen=f"127.0.0.1:{fb_srv.port}").save(fb_config)
    m_config = tmp_path / "m.json"
    NodeConfig(partner_id="mirima", listen=f"127.0.0.1:{m_srv.port}").save(m_config)
    try:
        card = run(str(m_config), "card", "create", "--title", "X", "--perspective", "Partner",
                   "--nature", "Experience", "--form", "Explicit", "--body", "x")
        run(str(m_config), "share", "grant", card["card_id"], REL_M_FB)
        report = run(str(fb_config), "sync", "pull", REL_M_FB)
        assert report == {"cards_updated": 1, "revisions_added": 1}
    finally:
        m_srv.stop()
        fb_srv.stop()

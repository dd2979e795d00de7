"""Command-line face of a partner node.

`knowmesh node serve` runs the HTTP node from a config file; every other
command is an HTTP client against the configured node's listen address, so
all writes stay behind the node's single writer. Output is canonical JSON.
"""

from __future__ import annotations

import json
import signal
import sys
import threading
from pathlib import Path

import click
import requests

from .canonical import canonical_dumps
from .config import NodeConfig, resolve_config_path
from .errors import KnowmeshError
from .service import serve


class ApiError(click.ClickException):
    def __init__(self, payload: dict, status: int):
        self.payload = payload
        super().__init__(canonical_dumps({"status": status, **payload}))

    def show(self, file=None):
        click.echo(self.message, err=True)


class Client:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")

    def call(self, method: str, path: str, body: dict | None = None, params: dict | None = None):
        try:
            response = requests.request(
                method, f"{self.base_url}{path}", json=body, params=params, timeout=30
            )
        except requests.RequestException as exc:
            raise click.ClickException(f"node at {self.base_url} unreachable: {exc}")
        try:
            payload = response.json()
        except ValueError:
            raise click.ClickException(f"non-JSON answer ({response.status_code})")
        if response.status_code != 200:
            raise ApiError(payload, response.status_code)
        return payload


def _echo(payload) -> None:
    click.echo(canonical_dumps(payload))


@click.group()
@click.option("--config", "config_path", default=None, metavar="PATH",
              help="Config file (default: $KNOWMESH_CONFIG or ./knowmesh.json).")
@click.pass_context
def main(ctx, config_path):
    """Operate a knowledge-exchange partner node."""
    ctx.obj = resolve_config_path(config_path)


def _client(ctx) -> Client:
    config = NodeConfig.load(ctx.obj)
    return Client(config.base_url)


# -- node -----------------------------------------------------------------


@main.group()
def node():
    """Run the node itself."""


@node.command("serve")
@click.option("--config", "config_path", default=None, metavar="PATH",
              help="Config file; overrides the global --config.")
@click.pass_context
def node_serve(ctx, config_path):
    """Serve the HTTP API until interrupted."""
    try:
        config = NodeConfig.load(config_path or ctx.obj)
        server = serve(config)
    except KnowmeshError as exc:
        raise click.ClickException(str(exc))
    click.echo(canonical_dumps({
        "partner_id": config.partner_id, "listening": server.base_url,
    }))
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        server.stop()


# -- cards ------------------------------------------------------------------


@main.group()
def card():
    """Author and inspect knowledge cards."""


@card.command("create")
@click.option("--title", required=True)
@click.option("--author", default=None)
@click.option("--perspective", required=True)
@click.option("--nature", required=True)
@click.option("--form", required=True)
@click.option("--body", "body_text", default="")
@click.option("--expert", "experts", multiple=True, metavar="NAME|ORG|CONTACT")
@click.option("--doc", "docs", multiple=True, metavar="LABEL|LOCATOR")
@click.pass_context
def card_create(ctx, title, author, perspective, nature, form, body_text, experts, docs):
    expert_refs = []
    for raw in experts:
        parts = (raw.split("|") + ["", ""])[:3]
        expert_refs.append({"name": parts[0], "organisation": parts[1], "contact": parts[2]})
    document_refs = []
    for raw in docs:
        parts = (raw.split("|", 1) + [""])[:2]
        document_refs.append({"label": parts[0], "locator": parts[1]})
    _echo(_client(ctx).call("POST", "/cards", {
        "title": title, "author": author,
        "coordinate": {"perspective": perspective, "nature": nature, "form": form},
        "body": body_text, "expert_refs": expert_refs, "document_refs": document_refs,
    }))


@card.command("edit")
@click.argument("card_id")
@click.option("--author", required=True)
@click.option("--body", "body_text", required=True)
@click.option("--parent", "parents", multiple=True,
              help="Parent revision id; defaults to all current heads (merge).")
@click.pass_context
def card_edit(ctx, card_id, author, body_text, parents):
    client = _client(ctx)
    parent_ids = list(parents)
    if not parent_ids:
        parent_ids = client.call("GET", f"/cards/{card_id}")["heads"]
    _echo(client.call("POST", f"/cards/{card_id}/revisions", {
        "author": author, "body": body_text, "parent_ids": parent_ids,
    }))


@card.command("comment")
@click.argument("card_id")
@click.option("--author", required=True)
@click.option("--text", required=True)
@click.pass_context
def card_comment(ctx, card_id, author, text):
    _echo(_client(ctx).call("POST", f"/cards/{card_id}/comments", {"author": author, "text": text}))


@card.command("classify")
@click.argument("card_id")
@click.option("--perspective", required=True)
@click.option("--nature", required=True)
@click.option("--form", required=True)
@click.pass_context
def card_classify(ctx, card_id, perspective, nature, form):
    _echo(_client(ctx).call("PUT", f"/cards/{card_id}/classification", {
        "coordinate": {"perspective": perspective, "nature": nature, "form": form},
    }))


@card.command("link")
@click.argument("source")
@click.argument("target")
@click.argument("link_type", type=click.Choice(["IsA", "KindOf", "PartOf", "Association"]))
@click.option("--remove", is_flag=True, help="Remove the link instead of adding it.")
@click.pass_context
def card_link(ctx, source, target, link_type, remove):
    body = {"source": source, "target": target, "link_type": link_type}
    _echo(_client(ctx).call("DELETE" if remove else "POST", "/links", body))


@card.command("show")
@click.argument("card_id")
@click.pass_context
def card_show(ctx, card_id):
    _echo(_client(ctx).call("GET", f"/cards/{card_id}"))


@card.command("history")
@click.argument("card_id")
@click.pass_context
def card_history(ctx, card_id):
    _echo(_client(ctx).call("GET", f"/cards/{card_id}/history"))


@card.command("search")
@click.option("--perspective", default=None)
@click.option("--nature", default=None)
@click.option("--form", default=None)
@click.option("--text", "-q", default=None)
@click.pass_context
def card_search(ctx, perspective, nature, form, text):
    params = {k: v for k, v in {
        "perspective": perspective, "nature": nature, "form": form, "q": text,
    }.items() if v}
    _echo(_client(ctx).call("GET", "/cube", params=params))


# -- partners -----------------------------------------------------------------


@main.group()
def partner():
    """Cluster partner registry."""


@partner.command("add")
@click.option("--name", required=True)
@click.option("--kind", required=True,
              type=click.Choice(["Firm", "Institute", "Government", "Association"]))
@click.option("--role", "cluster_role", default="")
@click.option("--id", "partner_id", default=None)
@click.pass_context
def partner_add(ctx, name, kind, cluster_role, partner_id):
    _echo(_client(ctx).call("POST", "/partners", {
        "name": name, "kind": kind, "cluster_role": cluster_role, "partner_id": partner_id,
    }))


@partner.command("list")
@click.pass_context
def partner_list(ctx):
    _echo(_client(ctx).call("GET", "/partners"))


# -- relationships ---------------------------------------------------------------


@main.group()
def rel():
    """Pairwise relationship lifecycle."""


@rel.command("propose")
@click.argument("a")
@click.argument("b")
@click.option("--id", "relationship_id", default=None)
@click.pass_context
def rel_propose(ctx, a, b, relationship_id):
    _echo(_client(ctx).call("POST", "/relationships", {
        "a": a, "b": b, "relationship_id": relationship_id,
    }))


@rel.command("define")
@click.argument("relationship_id")
@click.option("--goal", "goals", multiple=True, required=True)
@click.option("--scope", default="")
@click.pass_context
def rel_define(ctx, relationship_id, goals, scope):
    _echo(_client(ctx).call("POST", f"/relationships/{relationship_id}/define", {
        "goals": list(goals), "scope": scope,
    }))


@rel.command("collaborate")
@click.argument("relationship_id")
@click.pass_context
def rel_collaborate(ctx, relationship_id):
    _echo(_client(ctx).call("POST", f"/relationships/{relationship_id}/collaborate", {}))


@rel.command("facilitator")
@click.argument("relationship_id")
@click.argument("partner_id")
@click.pass_context
def rel_facilitator(ctx, relationship_id, partner_id):
    _echo(_client(ctx).call("POST", f"/relationships/{relationship_id}/facilitator", {
        "partner_id": partner_id,
    }))


@rel.command("close")
@click.argument("relationship_id")
@click.pass_context
def rel_close(ctx, relationship_id):
    _echo(_client(ctx).call("POST", f"/relationships/{relationship_id}/close", {}))


@rel.command("list")
@click.pass_context
def rel_list(ctx):
    _echo(_client(ctx).call("GET", "/relationships"))


# -- shares --------------------------------------------------------------------


@main.group()
def share():
    """Per-card, per-relationship distribution grants."""


@share.command("grant")
@click.argument("card_id")
@click.argument("relationship_id")
@click.option("--by", "granted_by", default=None)
@click.pass_context
def share_grant(ctx, card_id, relationship_id, granted_by):
    _echo(_client(ctx).call("POST", "/shares", {
        "card_id": card_id, "relationship_id": relationship_id, "granted_by": granted_by,
    }))


@share.command("revoke")
@click.argument("grant_id")
@click.option("--by", default=None)
@click.pass_context
def share_revoke(ctx, grant_id, by):
    _echo(_client(ctx).call("DELETE", "/shares", {"grant_id": grant_id, "by": by}))


# -- sync -----------------------------------------------------------------------


@main.group()
def sync():
    """Pull-based replication."""


@sync.command("pull")
@click.argument("relationship_id")
@click.pass_context
def sync_pull(ctx, relationship_id):
    _echo(_client(ctx).call("POST", f"/sync/{relationship_id}/pull", {}))


# -- processes --------------------------------------------------------------------


@main.group()
def process():
    """Workflow processes and knowledge attachment."""


@process.command("define")
@click.option("--name", required=True)
@click.option("--activity", "activities", multiple=True, required=True,
              metavar="NAME|OWNER[|RELATIONSHIP]")
@click.pass_context
def process_define(ctx, name, activities):
    specs = []
    for raw in activities:
        parts = raw.split("|")
        if len(parts) < 2:
            raise click.ClickException(f"activity {raw!r} needs NAME|OWNER[|RELATIONSHIP]")
        specs.append({
            "name": parts[0], "owner": parts[1],
            "upstream_relationship": parts[2] if len(parts) > 2 and parts[2] else None,
        })
    _echo(_client(ctx).call("POST", "/processes", {"name": name, "activities": specs}))


@process.command("attach")
@click.argument("process_id")
@click.argument("activity_id")
@click.argument("card_id")
@click.option("--note", default="")
@click.pass_context
def process_attach(ctx, process_id, activity_id, card_id, note):
    _echo(_client(ctx).call("POST", f"/processes/{process_id}/attach", {
        "activity_id": activity_id, "card_id": card_id, "note": note,
    }))


@process.command("report")
@click.argument("process_id")
@click.pass_context
def process_report(ctx, process_id):
    _echo(_client(ctx).call("GET", f"/processes/{process_id}/flow-report"))


# -- bundles --------------------------------------------------------------------


@main.group()
def bundle():
    """Card bundle import/export."""


@bundle.command("export")
@click.argument("card_ids", nargs=-1, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the bundle to a file instead of stdout.")
@click.option("--include-links/--no-links", default=True)
@click.pass_context
def bundle_export(ctx, card_ids, out, include_links):
    payload = _client(ctx).call("POST", "/bundles/export", {
        "card_ids": list(card_ids), "include_links": include_links,
    })
    if out:
        Path(out).write_text(canonical_dumps(payload), encoding="utf-8")
        _echo({"written": out, "manifest": payload["manifest"]})
    else:
        _echo(payload)


@bundle.command("import")
@click.argument("bundle_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", type=click.Choice(["Skip", "MergeHistories"]), default="Skip")
@click.pass_context
def bundle_import(ctx, bundle_file, policy):
    try:
        data = json.loads(Path(bundle_file).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"unparseable bundle file: {exc}")
    _echo(_client(ctx).call("POST", "/bundles/import", {
        "bundle": data, "conflict_policy": policy,
    }))


if __name__ == "__main__":
    main()

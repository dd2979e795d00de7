"""HTTP face of a partner node.

Every endpoint is a thin adapter: parse the request, call the corresponding
node operation, emit its result as canonical JSON. Domain errors map to their
HTTP status with a stable machine-readable code. Sync requests between nodes
carry the per-relationship shared token in the X-Relationship-Token header.
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import requests

from .bundle import SKIP
from .canonical import canonical_bytes
from .config import NodeConfig
from .errors import (
    AddressInUse,
    KnowmeshError,
    PeerUnreachable,
    ValidationError,
    raise_coded,
)
from .node import Node

TOKEN_HEADER = "X-Relationship-Token"


# ---------------------------------------------------------------------------
# resource serialization
# ---------------------------------------------------------------------------


def card_resource(node: Node, card_id: str) -> dict:
    card = node.get_card(card_id)
    current = node.current_revision(card_id)
    return {
        **card.to_dict(),
        "current_revision": current.to_dict(),
        "heads": [r.revision_id for r in node.card_heads(card_id)],
        "links": [l.to_dict() for l in node.links_of(card_id)],
        "classifications": [e.to_dict() for e in node.card_classifications(card_id)],
    }


def _body_json(raw: bytes) -> dict:
    if not raw:
        return {}
    try:
        data = json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError(f"unparseable JSON body: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("request body must be a JSON object")
    return data


def _require(body: dict, *keys):
    missing = [k for k in keys if k not in body]
    if missing:
        raise ValidationError(f"missing field(s): {', '.join(missing)}")
    return [body[k] for k in keys]


# ---------------------------------------------------------------------------
# route handlers: (node, match, query, body) -> response object
# ---------------------------------------------------------------------------


def _create_card(node, match, query, body):
    (title,) = _require(body, "title")
    coordinate = body.get("coordinate")
    if coordinate is None:
        raise ValidationError("missing field(s): coordinate")
    card = node.create_card(
        title,
        body.get("author"),
        coordinate,
        body.get("body", ""),
        body.get("expert_refs", ()),
        body.get("document_refs", ()),
    )
    return card_resource(node, card.card_id)


def _list_cards(node, match, query, body):
    return [card_resource(node, c.card_id) for c in node.list_cards()]


def _get_card(node, match, query, body):
    return card_resource(node, match.group(1))


def _add_revision(node, match, query, body):
    author, text, parents = _require(body, "author", "body", "parent_ids")
    return node.revise_card(match.group(1), author, text, parents).to_dict()


def _history(node, match, query, body):
    return [r.to_dict() for r in node.card_history(match.group(1))]


def _add_comment(node, match, query, body):
    author, text = _require(body, "author", "text")
    return node.add_comment(match.group(1), author, text).to_dict()


def _classify(node, match, query, body):
    node.classify_card(match.group(1), body.get("coordinate", body), body.get("author"))
    return card_resource(node, match.group(1))


def _add_link(node, match, query, body):
    source, target, link_type = _require(body, "source", "target", "link_type")
    return node.add_link(source, target, link_type).to_dict()


def _remove_link(node, match, query, body):
    source, target, link_type = _require(body, "source", "target", "link_type")
    node.remove_link(source, target, link_type)
    return {"removed": {"source": source, "target": target, "link_type": link_type}}


def _cube(node, match, query, body):
    def first(key):
        values = query.get(key)
        return values[0] if values else None

    cards = node.query_cube(
        perspective=first("perspective"), nature=first("nature"),
        form=first("form"), text=first("q"),
    )
    return [card_resource(node, c.card_id) for c in cards]


def _add_partner(node, match, query, body):
    name, kind = _require(body, "name", "kind")
    partner = node.register_partner(
        name, kind, body.get("cluster_role", ""), body.get("partner_id")
    )
    return partner.to_dict()


def _list_partners(node, match, query, body):
    return [p.to_dict() for p in node.list_partners()]


def _propose_relationship(node, match, query, body):
    a, b = _require(body, "a", "b")
    return node.propose_relationship(a, b, body.get("relationship_id")).to_dict()


def _list_relationships(node, match, query, body):
    return [r.to_dict() for r in node.list_relationships()]


def _define_relationship(node, match, query, body):
    (goals,) = _require(body, "goals")
    return node.define_collaboration(match.group(1), goals, body.get("scope", "")).to_dict()


def _collaborate(node, match, query, body):
    return node.begin_collaboration(match.group(1)).to_dict()


def _facilitator(node, match, query, body):
    (partner_id,) = _require(body, "partner_id")
    return node.assign_facilitator(match.group(1), partner_id).to_dict()


def _close_relationship(node, match, query, body):
    return node.close_relationship(match.group(1)).to_dict()


def _grant_share(node, match, query, body):
    card_id, relationship_id = _require(body, "card_id", "relationship_id")
    return node.grant_share(card_id, relationship_id, body.get("granted_by")).to_dict()


def _list_shares(node, match, query, body):
    return [g.to_dict() for g in node.list_grants()]


def _revoke_share(node, match, query, body):
    (grant_id,) = _require(body, "grant_id")
    return node.revoke_share(grant_id, body.get("by")).to_dict()


def _changes(node, match, query, body):
    requester = body.get("requester")
    if requester is None:
        values = query.get("requester")
        requester = values[0] if values else None
    if not requester:
        raise ValidationError("missing field(s): requester")
    return node.changes_since(match.group(1), requester, body.get("watermark", body)).to_dict()


def _pull(node, match, query, body):
    return node.sync_pull(match.group(1), body.get("as")).to_dict()


def _define_process(node, match, query, body):
    name, activities = _require(body, "name", "activities")
    return node.define_process(name, activities).to_dict()


def _list_processes(node, match, query, body):
    return [p.to_dict() for p in node.list_processes()]


def _attach(node, match, query, body):
    activity_id, card_id = _require(body, "activity_id", "card_id")
    return node.attach_knowledge(activity_id, card_id, body.get("note", "")).to_dict()


def _flow_report(node, match, query, body):
    return node.flow_report(match.group(1)).to_dict()


def _export_bundle(node, match, query, body):
    (card_ids,) = _require(body, "card_ids")
    return node.export_bundle(card_ids, body.get("include_links", True))


def _import_bundle(node, match, query, body):
    (bundle,) = _require(body, "bundle")
    return node.import_bundle(bundle, body.get("conflict_policy", SKIP)).to_dict()


ROUTES = [
    ("POST", re.compile(r"^/cards$"), _create_card),
    ("GET", re.compile(r"^/cards$"), _list_cards),
    ("GET", re.compile(r"^/cards/([^/]+)$"), _get_card),
    ("POST", re.compile(r"^/cards/([^/]+)/revisions$"), _add_revision),
    ("GET", re.compile(r"^/cards/([^/]+)/history$"), _history),
    ("POST", re.compile(r"^/cards/([^/]+)/comments$"), _add_comment),
    ("PUT", re.compile(r"^/cards/([^/]+)/classification$"), _classify),
    ("POST", re.compile(r"^/links$"), _add_link),
    ("DELETE", re.compile(r"^/links$"), _remove_link),
    ("GET", re.compile(r"^/cube$"), _cube),
    ("POST", re.compile(r"^/partners$"), _add_partner),
    ("GET", re.compile(r"^/partners$"), _list_partners),
    ("POST", re.compile(r"^/relationships$"), _propose_relationship),
    ("GET", re.compile(r"^/relationships$"), _list_relationships),
    ("POST", re.compile(r"^/relationships/([^/]+)/define$"), _define_relationship),
    ("POST", re.compile(r"^/relationships/([^/]+)/collaborate$"), _collaborate),
    ("POST", re.compile(r"^/relationships/([^/]+)/facilitator$"), _facilitator),
    ("POST", re.compile(r"^/relationships/([^/]+)/close$"), _close_relationship),
    ("POST", re.compile(r"^/shares$"), _grant_share),
    ("GET", re.compile(r"^/shares$"), _list_shares),
    ("DELETE", re.compile(r"^/shares$"), _revoke_share),
    ("GET", re.compile(r"^/sync/([^/]+)/changes$"), _changes),
    ("POST", re.compile(r"^/sync/([^/]+)/pull$"), _pull),
    ("POST", re.compile(r"^/processes$"), _define_process),
    ("GET", re.compile(r"^/processes$"), _list_processes),
    ("POST", re.compile(r"^/processes/([^/]+)/attach$"), _attach),
    ("GET", re.compile(r"^/processes/([^/]+)/flow-report$"), _flow_report),
    ("POST", re.compile(r"^/bundles/export$"), _export_bundle),
    ("POST", re.compile(r"^/bundles/import$"), _import_bundle),
]

SYNC_CHANGES = re.compile(r"^/sync/([^/]+)/changes$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "knowmesh/0.1"

    # the server instance carries .node, .tokens, .ui_dir
    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        path = parsed.path
        query = parse_qs(parsed.query)
        if method == "GET" and (path == "/ui" or path.startswith("/ui/")):
            return self._serve_ui(path)
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            body = _body_json(raw)
            for verb, pattern, handler in ROUTES:
                match = pattern.match(path)
                if match and verb == method:
                    self._check_sync_token(path)
                    result = handler(self.server.node, match, query, body)
                    return self._respond(200, result)
            if any(pattern.match(path) for _, pattern, _ in ROUTES):
                return self._respond(405, {"error": "MethodNotAllowed", "detail": method})
            return self._respond(404, {"error": "NotFound", "detail": path})
        except KnowmeshError as exc:
            return self._respond(exc.http_status, {"error": exc.code, "detail": str(exc)})

    def _check_sync_token(self, path: str) -> None:
        match = SYNC_CHANGES.match(path)
        if not match:
            return
        expected = self.server.tokens.get(match.group(1), "")
        if expected and self.headers.get(TOKEN_HEADER, "") != expected:
            raise ValidationError("bad or missing relationship token")

    def _serve_ui(self, path: str) -> None:
        ui_dir = self.server.ui_dir
        if ui_dir is None:
            return self._respond(404, {"error": "NotFound", "detail": "no UI assets configured"})
        rel = path[len("/ui"):].lstrip("/") or "index.html"
        target = (ui_dir / rel).resolve()
        if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
            return self._respond(404, {"error": "NotFound", "detail": path})
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _respond(self, status: int, payload) -> None:
        data = canonical_bytes(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def log_message(self, format, *args):  # keep test output quiet
        pass


class HttpPeer:
    """Client half of the sync wire: fetch a peer's changes over HTTP."""

    def __init__(self, address: str, token: str = "", timeout: float = 10.0):
        self.address = address.rstrip("/")
        self.token = token
        self.timeout = timeout

    def changes_since(self, relationship_id: str, requester: str, watermark: dict) -> dict:
        url = f"{self.address}/sync/{relationship_id}/changes"
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers[TOKEN_HEADER] = self.token
        try:
            response = requests.request(
                "GET", url, data=canonical_bytes({"requester": requester, "watermark": watermark}),
                headers=headers, timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise PeerUnreachable(f"peer {self.address} unreachable: {exc}") from None
        if response.status_code != 200:
            try:
                payload = response.json()
            except ValueError:
                raise PeerUnreachable(
                    f"peer {self.address} answered {response.status_code}"
                ) from None
            raise_coded(payload.get("error", "KnowmeshError"), payload.get("detail", ""))
        return response.json()


class NodeServer:
    """A node bound to an HTTP listener; start() serves until stop()."""

    def __init__(self, node: Node, host: str, port: int,
                 tokens: dict[str, str] | None = None, ui_dir: str | Path | None = None):
        self.node = node
        self.host = host
        self.port = port
        self.tokens = tokens or {}
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "NodeServer":
        try:
            self._httpd = ThreadingHTTPServer((self.host, self.port), _Handler)
        except OSError as exc:
            raise AddressInUse(f"cannot bind {self.host}:{self.port}: {exc}") from None
        if self.port == 0:
            self.port = self._httpd.server_address[1]
        self._httpd.node = self.node
        self._httpd.tokens = self.tokens
        self._httpd.ui_dir = self.ui_dir
        self._httpd.daemon_threads = True
        httpd = self._httpd
        self._thread = threading.Thread(
            target=lambda: httpd.serve_forever(poll_interval=0.05), daemon=True
        )
        self._thread.start()
        return self

    def stop(self, close_node: bool = True) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        if close_node:
            self.node.close()


def build_node(config: NodeConfig) -> Node:
    node = Node(
        config.partner_id,
        data_dir=config.data_dir,
        allow_firm_facilitator=config.allow_firm_facilitator,
        facilitator_read_access=config.facilitator_read_access,
    )
    for relationship_id, peer in config.peers.items():
        node.set_peer(relationship_id, HttpPeer(peer.address, peer.token))
    return node


def serve(config: NodeConfig) -> NodeServer:
    """Build the node from config, replay its log, and start listening."""
    node = build_node(config)
    tokens = {rel: entry.token for rel, entry in config.peers.items() if entry.token}
    server = NodeServer(node, config.host, config.port, tokens=tokens, ui_dir=config.ui_dir)
    return server.start()

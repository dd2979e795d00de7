"""Card bundle export and import.

A bundle is a self-contained canonical-JSON document: full card records, the
links among them, and a manifest whose digest covers the payload byte-exactly.
Exports are deterministic for a given store state, so export -> import ->
export round trips byte-identically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import digest_of
from .cards import CardStore, Comment, Link, Revision
from .errors import BadFormatVersion, CorruptBundle, DigestMismatch

FORMAT_VERSION = "knowmesh-bundle/1"

SKIP = "Skip"
MERGE_HISTORIES = "MergeHistories"
CONFLICT_POLICIES = (SKIP, MERGE_HISTORIES)


@dataclass(frozen=True)
class ImportReport:
    added: int
    merged: int
    skipped: int

    def to_dict(self) -> dict:
        return {"added": self.added, "merged": self.merged, "skipped": self.skipped}


def _card_record(cards: CardStore, card_id: str) -> dict:
    state = cards.state_of(card_id)
    return {
        "card_id": state.card_id,
        "title": state.title,
        "author": state.author,
        "origin_node": state.origin_node,
        "coordinate": state.coordinate.to_dict(),
        "created_at": state.created_at,
        "revisions": [r.to_dict() for r in cards.history(card_id)],
        "comments": [c.to_dict() for c in cards.comments(card_id)],
        "expert_refs": [e.to_dict() for e in state.expert_refs],
        "document_refs": [d.to_dict() for d in state.document_refs],
    }


def _payload_digest(cards: list[dict], links: list[dict]) -> str:
    return digest_of({"cards": cards, "format_version": FORMAT_VERSION, "links": links})


def build_bundle(cards: CardStore, card_ids, include_links: bool) -> dict:
    records = [_card_record(cards, cid) for cid in sorted(set(card_ids))]
    bundled = {r["card_id"] for r in records}
    links: list[dict] = []
    if include_links:
        links = [
            l.to_dict()
            for l in cards.all_links()
            if l.source in bundled and l.target in bundled
        ]
    return {
        "format_version": FORMAT_VERSION,
        "cards": records,
        "links": links,
        "manifest": {
            "card_count": len(records),
            "link_count": len(links),
            "digest": _payload_digest(records, links),
        },
    }


def validate_bundle(bundle: dict) -> None:
    if not isinstance(bundle, dict) or bundle.get("format_version") != FORMAT_VERSION:
        raise BadFormatVersion(
            f"expected format {FORMAT_VERSION!r}, got {bundle.get('format_version')!r}"
        )
    cards = bundle.get("cards")
    links = bundle.get("links")
    manifest = bundle.get("manifest")
    if not isinstance(cards, list) or not isinstance(links, list) or not isinstance(manifest, dict):
        raise CorruptBundle("bundle is missing cards, links, or manifest")
    if manifest.get("digest") != _payload_digest(cards, links):
        raise DigestMismatch("bundle digest does not match its content")
    if manifest.get("card_count") != len(cards) or manifest.get("link_count") != len(links):
        raise CorruptBundle("manifest counts do not match bundle content")
    bundled_ids = set()
    for record in cards:
        try:
            card_id = record["card_id"]
            revisions = [Revision.from_dict(r) for r in record["revisions"]]
            known = {r.revision_id for r in revisions}
            if not any(not r.parent_ids for r in revisions):
                raise CorruptBundle(f"card {card_id} has no root revision")
            for revision in revisions:
                expected = Revision.compute_id(
                    card_id, revision.parent_ids, revision.author, revision.lamport, revision.body
                )
                if expected != revision.revision_id:
                    raise CorruptBundle(f"revision {revision.revision_id} fails its content digest")
                for pid in revision.parent_ids:
                    if pid not in known:
                        raise CorruptBundle(f"revision {revision.revision_id} misses parent {pid}")
            for comment in record["comments"]:
                if comment["at_revision"] not in known:
                    raise CorruptBundle(
                        f"comment {comment['comment_id']} anchors outside card {card_id}"
                    )
        except (KeyError, TypeError) as exc:
            raise CorruptBundle(f"malformed card record: {exc}") from None
        bundled_ids.add(card_id)
    for raw in links:
        if raw.get("source") not in bundled_ids or raw.get("target") not in bundled_ids:
            raise CorruptBundle(f"link {raw} references a card outside the bundle")


def merge_bundle(cards: CardStore, bundle: dict, conflict_policy: str, local_partner: str) -> dict:
    """Apply a validated bundle. Returns {added, merged, skipped}; rejected
    links count into skipped. Nothing is ever deleted."""
    added = merged = skipped = 0
    for record in bundle["cards"]:
        card_id = record["card_id"]
        header = {
            "card_id": card_id,
            "title": record["title"],
            "author": record["author"],
            "origin_node": record["origin_node"],
            "coordinate": record["coordinate"],
            "created_at": record["created_at"],
            "expert_refs": record["expert_refs"],
            "document_refs": record["document_refs"],
        }
        if not cards.exists(card_id):
            cards.ensure_replica(header, imported=record["origin_node"] != local_partner)
            for raw in record["revisions"]:
                cards.absorb_revision(card_id, Revision.from_dict(raw))
            for raw in record["comments"]:
                cards.absorb_comment(card_id, Comment.from_dict(raw))
            added += 1
        elif conflict_policy == SKIP:
            skipped += 1
        else:
            for raw in record["revisions"]:
                cards.absorb_revision(card_id, Revision.from_dict(raw))
            for raw in record["comments"]:
                cards.absorb_comment(card_id, Comment.from_dict(raw))
            merged += 1
    for raw in bundle["links"]:
        link = Link.from_dict(raw)
        if link in set(cards.all_links()):
            continue
        if not cards.absorb_link(link):
            skipped += 1
    return {"added": added, "merged": merged, "skipped": skipped}

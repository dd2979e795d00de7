"""Relationship-scoped sharing and pull-based replication.

Sharing is origin-only: a partner may grant exactly the cards it authored, per
relationship. Replication is pull-based; the requester summarizes what it
holds (a watermark) and the responder answers with a change set covering the
actively shared cards. Replicas record the relationship they arrived through,
which both justifies their presence (scoping safety) and tells the node what
to offer back when the origin pulls.

The watermark covers revisions by head set (ancestry-closed at the responder)
and comments / classification events / links by id, so a fully caught-up
requester gets an empty change set back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from .canonical import new_id
from .cards import CardStore, ClassificationEvent, Comment, Link, Revision
from .clock import LamportClock
from .errors import (
    AlreadyGranted,
    AlreadyRevoked,
    InvalidChangeSet,
    NotGranter,
    NotMember,
    NotOrigin,
    RelationshipClosed,
    RelationshipNotCollaborating,
    UnknownCard,
    UnknownGrant,
    UnknownPartner,
)
from .partners import PartnerDirectory, RelationshipState


@dataclass(frozen=True)
class ShareGrant:
    grant_id: str
    card_id: str
    relationship_id: str
    granted_by: str
    revoked: bool
    granted_lamport: int

    def to_dict(self) -> dict:
        return {
            "grant_id": self.grant_id,
            "card_id": self.card_id,
            "relationship_id": self.relationship_id,
            "granted_by": self.granted_by,
            "revoked": self.revoked,
            "granted_lamport": self.granted_lamport,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShareGrant":
        return cls(
            data["grant_id"],
            data["card_id"],
            data["relationship_id"],
            data["granted_by"],
            data["revoked"],
            data["granted_lamport"],
        )


@dataclass
class SyncWatermark:
    """Requester-side summary of known content, per card."""

    relationship_id: str
    cards: dict[str, dict]

    def to_dict(self) -> dict:
        return {"relationship_id": self.relationship_id, "cards": self.cards}

    @classmethod
    def from_dict(cls, data: dict) -> "SyncWatermark":
        return cls(data["relationship_id"], data.get("cards", {}))


@dataclass
class ChangeSet:
    relationship_id: str
    entries: list[dict]
    responder_lamport: int

    def to_dict(self) -> dict:
        return {
            "relationship_id": self.relationship_id,
            "entries": self.entries,
            "responder_lamport": self.responder_lamport,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChangeSet":
        return cls(data["relationship_id"], data["entries"], data["responder_lamport"])

    def is_empty(self) -> bool:
        return not self.entries


@dataclass(frozen=True)
class SyncReport:
    cards_updated: int
    revisions_added: int

    def to_dict(self) -> dict:
        return {"cards_updated": self.cards_updated, "revisions_added": self.revisions_added}


class PeerLink(Protocol):
    """Transport to the other member's node for one relationship."""

    def changes_since(self, relationship_id: str, requester: str, watermark: dict) -> dict: ...


class LocalPeer:
    """In-process transport wrapping the peer node directly."""

    def __init__(self, node):
        self._node = node

    def changes_since(self, relationship_id: str, requester: str, watermark: dict) -> dict:
        return self._node.changes_since(relationship_id, requester, watermark).to_dict()


class GrantStore:
    def __init__(self, clock: LamportClock):
        self.clock = clock
        self._grants: dict[str, ShareGrant] = {}

    def prepare_grant(self, cards: CardStore, directory: PartnerDirectory,
                      card_id, relationship_id, granted_by) -> dict:
        rel = directory.require_relationship(relationship_id)
        if not rel.has_member(granted_by):
            raise NotMember(f"{granted_by} is not a member of {relationship_id}")
        if not cards.exists(card_id):
            raise UnknownCard(f"no card {card_id}")
        if rel.state != RelationshipState.COLLABORATING:
            raise RelationshipNotCollaborating(
                f"sharing needs a Collaborating relationship, not {rel.state.value}"
            )
        if cards.state_of(card_id).origin_node != granted_by:
            raise NotOrigin("only the origin partner may share a card")
        if self.active_grant(card_id, relationship_id) is not None:
            raise AlreadyGranted(f"card {card_id} is already shared on {relationship_id}")
        lamport = self.clock.tick()
        return {
            "grant_id": new_id(),
            "card_id": card_id,
            "relationship_id": relationship_id,
            "granted_by": granted_by,
            "granted_lamport": lamport,
        }

    def apply_grant(self, payload: dict) -> ShareGrant:
        grant = ShareGrant(
            grant_id=payload["grant_id"],
            card_id=payload["card_id"],
            relationship_id=payload["relationship_id"],
            granted_by=payload["granted_by"],
            revoked=False,
            granted_lamport=payload["granted_lamport"],
        )
        self._grants[grant.grant_id] = grant
        self.clock.observe(payload["granted_lamport"])
        return grant

    def prepare_revoke(self, grant_id, by) -> dict:
        grant = self._grants.get(grant_id)
        if grant is None:
            raise UnknownGrant(f"no grant {grant_id}")
        if grant.revoked:
            raise AlreadyRevoked(f"grant {grant_id} is already revoked")
        if grant.granted_by != by:
            raise NotGranter("only the granting partner may revoke")
        lamport = self.clock.tick()
        return {"grant_id": grant_id, "lamport": lamport}

    def apply_revoke(self, payload: dict) -> ShareGrant:
        grant = self._grants[payload["grant_id"]]
        grant = ShareGrant(
            grant.grant_id, grant.card_id, grant.relationship_id,
            grant.granted_by, True, grant.granted_lamport,
        )
        self._grants[grant.grant_id] = grant
        self.clock.observe(payload["lamport"])
        return grant

    # -- state serialization ---------------------------------------------------

    def load_state(self, grant_records: list[dict]) -> None:
        for raw in grant_records:
            grant = ShareGrant.from_dict(raw)
            self._grants[grant.grant_id] = grant

    # -- queries ------------------------------------------------------------

    def get(self, grant_id: str) -> ShareGrant:
        grant = self._grants.get(grant_id)
        if grant is None:
            raise UnknownGrant(f"no grant {grant_id}")
        return grant

    def active_grant(self, card_id: str, relationship_id: str) -> ShareGrant | None:
        for grant in self._grants.values():
            if grant.card_id == card_id and grant.relationship_id == relationship_id and not grant.revoked:
                return grant
        return None

    def active_on(self, relationship_id: str) -> list[ShareGrant]:
        return sorted(
            (g for g in self._grants.values() if g.relationship_id == relationship_id and not g.revoked),
            key=lambda g: g.grant_id,
        )

    def all_grants(self) -> list[ShareGrant]:
        return [self._grants[k] for k in sorted(self._grants)]

    def grants_for_card(self, card_id: str, active_only: bool = True) -> list[ShareGrant]:
        return [
            g for g in self.all_grants()
            if g.card_id == card_id and (not active_only or not g.revoked)
        ]


# -- visibility ----------------------------------------------------------------


def visible_cards(cards: CardStore, grants: GrantStore, directory: PartnerDirectory,
                  partner_id: str, facilitator_read: bool) -> list[str]:
    """Card ids this partner is entitled to see, judged from this node's store.

    A card is visible when the partner authored it (origin), holds it as a
    replica received on a relationship it belongs to, imported it deliberately
    (local partner only), is currently granted it on one of its relationships,
    or — when enabled — facilitates a relationship the card is shared on.

    The node's own partner is implicitly known even before any registration.
    """
    if partner_id != cards.partner_id and not directory.partner_exists(partner_id):
        raise UnknownPartner(f"no partner {partner_id}")
    member_rels = {r.relationship_id for r in directory.relationships_of(partner_id)}
    facilitated = (
        {r.relationship_id for r in directory.facilitated_by(partner_id)}
        if facilitator_read
        else set()
    )
    visible = set()
    for card_id in cards.all_ids():
        state = cards.state_of(card_id)
        if state.origin_node == partner_id:
            visible.add(card_id)
        elif state.received_via is not None and state.received_via in member_rels:
            visible.add(card_id)
        elif state.imported and partner_id == cards.partner_id:
            visible.add(card_id)
        elif state.received_via is not None and state.received_via in facilitated:
            visible.add(card_id)
    for grant in grants.all_grants():
        if grant.revoked or not cards.exists(grant.card_id):
            continue
        if grant.relationship_id in member_rels or grant.relationship_id in facilitated:
            visible.add(grant.card_id)
    return sorted(visible)


def shared_card_ids(cards: CardStore, grants: GrantStore, relationship_id: str) -> list[str]:
    """Cards exchanged on this relationship as known locally: cards this node
    granted (non-revoked) plus replicas received through the relationship."""
    ids = {g.card_id for g in grants.active_on(relationship_id) if cards.exists(g.card_id)}
    for card_id in cards.all_ids():
        if cards.state_of(card_id).received_via == relationship_id:
            ids.add(card_id)
    return sorted(ids)


# -- responder side ----------------------------------------------------------


def build_watermark(cards: CardStore, grants: GrantStore, directory: PartnerDirectory,
                    relationship_id: str) -> SyncWatermark:
    """Summarize local knowledge relevant to the relationship, so the peer
    can answer with a minimal change set."""
    rel = directory.require_relationship(relationship_id)
    peer = rel.other_member(cards.partner_id)
    relevant = set(shared_card_ids(cards, grants, relationship_id))
    for card_id in cards.all_ids():
        if cards.state_of(card_id).origin_node == peer:
            relevant.add(card_id)
    summaries = {}
    for card_id in sorted(relevant):
        summaries[card_id] = {
            "revisions": sorted(r.revision_id for r in cards.heads(card_id)),
            "comments": sorted(c.comment_id for c in cards.comments(card_id)),
            "classifications": sorted(e.event_id for e in cards.classifications(card_id)),
            "links": [list(l.triple) for l in cards.links_of(card_id) if l.source == card_id],
        }
    return SyncWatermark(relationship_id, summaries)


def _covered_revisions(cards: CardStore, card_id: str, declared: list[str]) -> set[str]:
    """Expand declared revision ids to their full ancestry within our DAG."""
    state = cards.state_of(card_id)
    covered: set[str] = set()
    stack = [rid for rid in declared if rid in state.revisions]
    while stack:
        rid = stack.pop()
        if rid in covered:
            continue
        covered.add(rid)
        stack.extend(state.revisions[rid].parent_ids)
    return covered


def build_changeset(cards: CardStore, grants: GrantStore, directory: PartnerDirectory,
                    relationship_id: str, requester: str, watermark: dict | SyncWatermark,
                    responder_lamport: int) -> ChangeSet:
    rel = directory.require_relationship(relationship_id)
    if not rel.has_member(requester):
        raise NotMember(f"{requester} is not a member of {relationship_id}")
    if rel.state == RelationshipState.CLOSED:
        raise RelationshipClosed(f"relationship {relationship_id} is closed")
    if isinstance(watermark, SyncWatermark):
        watermark = watermark.to_dict()
    known = watermark.get("cards", {})

    shared = shared_card_ids(cards, grants, relationship_id)
    shared_set = set(shared)
    entries = []
    for card_id in shared:
        summary = known.get(card_id, {})
        covered = _covered_revisions(cards, card_id, summary.get("revisions", []))
        new_revisions = [r for r in cards.history(card_id) if r.revision_id not in covered]
        known_comments = set(summary.get("comments", []))
        new_comments = [c for c in cards.comments(card_id) if c.comment_id not in known_comments]
        known_classifications = set(summary.get("classifications", []))
        new_classifications = [
            e for e in cards.classifications(card_id) if e.event_id not in known_classifications
        ]
        known_links = {tuple(t) for t in summary.get("links", [])}
        new_links = [
            l for l in cards.links_of(card_id)
            if l.source == card_id and l.target in shared_set and l.triple not in known_links
        ]
        if not (new_revisions or new_comments or new_classifications or new_links):
            continue
        entries.append(
            {
                "card": cards.state_of(card_id).header_dict(),
                "revisions": [r.to_dict() for r in new_revisions],
                "comments": [c.to_dict() for c in new_comments],
                "classifications": [e.to_dict() for e in new_classifications],
                "links": [l.to_dict() for l in new_links],
            }
        )
    return ChangeSet(relationship_id, entries, responder_lamport)


# -- requester side -----------------------------------------------------------


def validate_changeset(cards: CardStore, changeset: ChangeSet) -> None:
    """Reject a change set that would break causal delivery: every revision's
    parents, every comment's anchor revision and every revision id digest must
    check out against local state plus the entry itself."""
    for entry in changeset.entries:
        card_id = entry["card"]["card_id"]
        local_revisions: set[str] = set()
        if cards.exists(card_id):
            local_revisions = set(cards.state_of(card_id).revisions)
        incoming = []
        for raw in entry["revisions"]:
            revision = Revision.from_dict(raw)
            expected = Revision.compute_id(
                card_id, revision.parent_ids, revision.author, revision.lamport, revision.body
            )
            if expected != revision.revision_id:
                raise InvalidChangeSet(f"revision {revision.revision_id} fails its content digest")
            incoming.append(revision)
        incoming_ids = {r.revision_id for r in incoming}
        available = local_revisions | incoming_ids
        if not cards.exists(card_id) and not any(not r.parent_ids for r in incoming):
            raise InvalidChangeSet(f"new card {card_id} arrived without its root revision")
        for revision in incoming:
            for pid in revision.parent_ids:
                if pid not in available:
                    raise InvalidChangeSet(
                        f"revision {revision.revision_id} references missing parent {pid}"
                    )
        for raw in entry["comments"]:
            if raw["at_revision"] not in available:
                raise InvalidChangeSet(
                    f"comment {raw['comment_id']} anchors to missing revision {raw['at_revision']}"
                )


def apply_changeset(cards: CardStore, changeset: ChangeSet, relationship_id: str) -> SyncReport:
    """Merge a validated change set; idempotent, never deletes anything.

    Card contents land before links so link endpoints exist; links that would
    close a hierarchy cycle against local state are skipped, mirroring bundle
    import.
    """
    updated: set[str] = set()
    revisions_added = 0
    pending_links: list[tuple[str, Link]] = []
    for entry in changeset.entries:
        card_id = entry["card"]["card_id"]
        if cards.ensure_replica(entry["card"], received_via=relationship_id):
            updated.add(card_id)
        for raw in entry["revisions"]:
            if cards.absorb_revision(card_id, Revision.from_dict(raw)):
                revisions_added += 1
                updated.add(card_id)
        for raw in entry["comments"]:
            if cards.absorb_comment(card_id, Comment.from_dict(raw)):
                updated.add(card_id)
        for raw in entry["classifications"]:
            if cards.absorb_classification(card_id, ClassificationEvent.from_dict(raw)):
                updated.add(card_id)
        pending_links.extend((card_id, Link.from_dict(raw)) for raw in entry["links"])
    for card_id, link in pending_links:
        if cards.absorb_link(link):
            updated.add(card_id)
    return SyncReport(cards_updated=len(updated), revisions_added=revisions_added)

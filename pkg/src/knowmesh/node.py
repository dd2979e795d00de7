"""The partner node: one partner's stores behind a single logical writer,
event-sourced onto an append-only log with periodic snapshots.

Every mutation runs prepare (validate against current state, allocate ids and
clock values into a payload) -> append to the event log -> apply. Replay on
startup runs the same appliers over the logged payloads, so a restarted node
reproduces its pre-restart state byte-exactly.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from . import bundle as bundle_mod
from . import sync as sync_mod
from .canonical import canonical_bytes, digest_of
from .cards import CardStore, ClassificationEvent, Comment, KnowledgeCard, Link, Revision
from .clock import LamportClock
from .errors import (
    CorruptEventLog,
    NotMember,
    NotVisible,
    PeerUnreachable,
    RelationshipNotCollaborating,
    UnknownCard,
    ValidationError,
)
from .eventlog import EventLog, EventRecord
from .partners import Partner, PartnerDirectory, Relationship, RelationshipState
from .sync import ChangeSet, GrantStore, ShareGrant, SyncReport, SyncWatermark
from .workflow import FlowReport, KnowledgeAssociation, Process, WorkflowStore

EVENTS_FILE = "events.jsonl"
SNAPSHOT_FILE = "snapshot.json"


class Node:
    def __init__(self, partner_id: str, data_dir: str | Path | None = None,
                 allow_firm_facilitator: bool = False, facilitator_read_access: bool = True,
                 snapshot_every: int = 500):
        self.partner_id = partner_id
        self.allow_firm_facilitator = allow_firm_facilitator
        self.facilitator_read_access = facilitator_read_access
        self.snapshot_every = snapshot_every
        self.data_dir = Path(data_dir) if data_dir is not None else None

        self.clock = LamportClock()
        self._cards = CardStore(partner_id, self.clock)
        self._directory = PartnerDirectory(self.clock)
        self._grants = GrantStore(self.clock)
        self._workflow = WorkflowStore(self.clock)

        self._lock = threading.RLock()
        self._pull_locks: dict[str, threading.Lock] = {}
        self._peers: dict[str, sync_mod.PeerLink] = {}

        if self.data_dir is None:
            self._log = EventLog(None)
        else:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._log = EventLog(self.data_dir / EVENTS_FILE)
            self._recover()

    # ------------------------------------------------------------------
    # event plumbing
    # ------------------------------------------------------------------

    def _commit(self, kind: str, payload: dict, lamport: int):
        self._log.append(kind, payload, lamport)
        result = self._apply(kind, payload)
        if (
            self.data_dir is not None
            and self.snapshot_every
            and self._log.last_seq % self.snapshot_every == 0
        ):
            self.save_snapshot()
        return result

    def _apply(self, kind: str, payload: dict):
        handler = self._APPLIERS.get(kind)
        if handler is None:
            raise CorruptEventLog(f"unknown event kind {kind!r}")
        return handler(self, payload)

    def _recover(self) -> None:
        snapshot_path = self.data_dir / SNAPSHOT_FILE
        after_seq = 0
        if snapshot_path.exists():
            try:
                snap = json.loads(snapshot_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise CorruptEventLog(f"unparseable snapshot: {exc}") from None
            body = {"last_seq": snap.get("last_seq"), "state": snap.get("state")}
            if snap.get("digest") != digest_of(body):
                raise CorruptEventLog("snapshot fails its digest")
            if snap["last_seq"] > self._log.last_seq:
                raise CorruptEventLog("snapshot is ahead of the event log")
            self._load_state(snap["state"])
            after_seq = snap["last_seq"]
        for record in self._log.records(after_seq=after_seq):
            self._apply(record.kind, record.payload)

    def events(self, after_seq: int = 0) -> tuple[EventRecord, ...]:
        with self._lock:
            return self._log.records(after_seq=after_seq)

    def save_snapshot(self) -> None:
        if self.data_dir is None:
            return
        body = {"last_seq": self._log.last_seq, "state": self.state_dict()}
        snap = {**body, "digest": digest_of(body)}
        path = self.data_dir / SNAPSHOT_FILE
        tmp = path.with_suffix(".json.tmp")
        tmp.write_bytes(canonical_bytes(snap))
        tmp.replace(path)

    def close(self) -> None:
        with self._lock:
            if self.data_dir is not None:
                self.save_snapshot()
            self._log.close()

    # ------------------------------------------------------------------
    # knowledge cards
    # ------------------------------------------------------------------

    def create_card(self, title, author=None, coordinate=None, body="",
                    expert_refs=(), document_refs=()) -> KnowledgeCard:
        with self._lock:
            payload = self._cards.prepare_create(
                title, author or self.partner_id, coordinate, body, expert_refs, document_refs
            )
            self._commit("card_created", payload, payload["created_at"])
            return self._cards.snapshot(payload["card_id"])

    def revise_card(self, card_id, author, body, parent_ids) -> Revision:
        with self._lock:
            payload = self._cards.prepare_revision(card_id, author, body, parent_ids)
            return self._commit("card_revised", payload, payload["revision"]["lamport"])

    def merge_heads(self, card_id, author, body) -> Revision:
        """Revise with all current heads as parents: the merge path."""
        with self._lock:
            heads = [r.revision_id for r in self._cards.heads(card_id)]
            return self.revise_card(card_id, author, body, heads)

    def current_revision(self, card_id) -> Revision:
        with self._lock:
            return self._cards.current_revision(card_id)

    def add_comment(self, card_id, author, text) -> Comment:
        with self._lock:
            payload = self._cards.prepare_comment(card_id, author, text)
            return self._commit("comment_added", payload, payload["comment"]["lamport"])

    def classify_card(self, card_id, coordinate, author=None) -> KnowledgeCard:
        with self._lock:
            payload = self._cards.prepare_classification(
                card_id, coordinate, author or self.partner_id
            )
            self._commit("card_classified", payload, payload["classification"]["lamport"])
            return self._cards.snapshot(card_id)

    def add_link(self, source, target, link_type) -> Link:
        with self._lock:
            payload = self._cards.prepare_link_add(source, target, link_type)
            return self._commit("link_added", payload, payload["lamport"])

    def remove_link(self, source, target, link_type) -> None:
        with self._lock:
            payload = self._cards.prepare_link_remove(source, target, link_type)
            self._commit("link_removed", payload, payload["lamport"])

    def query_cube(self, perspective=None, nature=None, form=None, text=None) -> list[KnowledgeCard]:
        with self._lock:
            return self._cards.query(perspective, nature, form, text)

    def card_history(self, card_id) -> tuple[Revision, ...]:
        with self._lock:
            return self._cards.history(card_id)

    def get_card(self, card_id) -> KnowledgeCard:
        with self._lock:
            return self._cards.snapshot(card_id)

    def card_exists(self, card_id) -> bool:
        with self._lock:
            return self._cards.exists(card_id)

    def card_heads(self, card_id) -> tuple[Revision, ...]:
        with self._lock:
            return self._cards.heads(card_id)

    def card_classifications(self, card_id) -> tuple[ClassificationEvent, ...]:
        with self._lock:
            return self._cards.classifications(card_id)

    def links_of(self, card_id) -> tuple[Link, ...]:
        with self._lock:
            return self._cards.links_of(card_id)

    def all_links(self) -> tuple[Link, ...]:
        with self._lock:
            return self._cards.all_links()

    def list_cards(self) -> list[KnowledgeCard]:
        with self._lock:
            visible = self.visible_cards(self.partner_id)
            cards = [self._cards.snapshot(cid) for cid in visible]
            cards.sort(key=lambda c: (c.title, c.card_id))
            return cards

    # ------------------------------------------------------------------
    # partners and relationships
    # ------------------------------------------------------------------

    def register_partner(self, name, kind, cluster_role="", partner_id=None) -> Partner:
        with self._lock:
            payload = self._directory.prepare_register(name, kind, cluster_role, partner_id)
            return self._commit("partner_registered", payload, payload["lamport"])

    def propose_relationship(self, a, b, relationship_id=None) -> Relationship:
        with self._lock:
            payload = self._directory.prepare_propose(a, b, relationship_id)
            return self._commit("relationship_proposed", payload, payload["lamport"])

    def define_collaboration(self, relationship_id, goals, scope="") -> Relationship:
        with self._lock:
            payload = self._directory.prepare_define(relationship_id, goals, scope)
            return self._commit("collaboration_defined", payload, payload["lamport"])

    def begin_collaboration(self, relationship_id) -> Relationship:
        with self._lock:
            payload = self._directory.prepare_begin(relationship_id)
            return self._commit("collaboration_begun", payload, payload["lamport"])

    def assign_facilitator(self, relationship_id, partner_id) -> Relationship:
        with self._lock:
            payload = self._directory.prepare_facilitator(
                relationship_id, partner_id, self.allow_firm_facilitator
            )
            return self._commit("facilitator_assigned", payload, payload["lamport"])

    def close_relationship(self, relationship_id) -> Relationship:
        with self._lock:
            payload = self._directory.prepare_close(relationship_id)
            if payload is None:
                return self._directory.require_relationship(relationship_id)
            return self._commit("relationship_closed", payload, payload["lamport"])

    def get_partner(self, partner_id) -> Partner:
        with self._lock:
            return self._directory.get_partner(partner_id)

    def get_relationship(self, relationship_id) -> Relationship:
        with self._lock:
            return self._directory.require_relationship(relationship_id)

    def list_partners(self) -> list[Partner]:
        with self._lock:
            return self._directory.all_partners()

    def list_relationships(self) -> list[Relationship]:
        with self._lock:
            return self._directory.all_relationships()

    # ------------------------------------------------------------------
    # sharing and sync
    # ------------------------------------------------------------------

    def grant_share(self, card_id, relationship_id, granted_by=None) -> ShareGrant:
        with self._lock:
            payload = self._grants.prepare_grant(
                self._cards, self._directory, card_id, relationship_id,
                granted_by or self.partner_id,
            )
            return self._commit("share_granted", payload, payload["granted_lamport"])

    def revoke_share(self, grant_id, by=None) -> ShareGrant:
        with self._lock:
            payload = self._grants.prepare_revoke(grant_id, by or self.partner_id)
            return self._commit("share_revoked", payload, payload["lamport"])

    def get_grant(self, grant_id) -> ShareGrant:
        with self._lock:
            return self._grants.get(grant_id)

    def list_grants(self) -> list[ShareGrant]:
        with self._lock:
            return self._grants.all_grants()

    def visible_cards(self, partner_id) -> list[str]:
        with self._lock:
            return sync_mod.visible_cards(
                self._cards, self._grants, self._directory, partner_id,
                self.facilitator_read_access,
            )

    def set_peer(self, relationship_id: str, peer: sync_mod.PeerLink) -> None:
        with self._lock:
            self._peers[relationship_id] = peer

    def connect(self, relationship_id: str, other: "Node") -> None:
        """Wire two in-process nodes as each other's peer for a relationship."""
        self.set_peer(relationship_id, sync_mod.LocalPeer(other))
        other.set_peer(relationship_id, sync_mod.LocalPeer(self))

    def watermark(self, relationship_id) -> SyncWatermark:
        with self._lock:
            return sync_mod.build_watermark(self._cards, self._grants, self._directory, relationship_id)

    def changes_since(self, relationship_id, requester, watermark) -> ChangeSet:
        """Responder half of pull replication; read-only."""
        if isinstance(watermark, SyncWatermark):
            watermark = watermark.to_dict()
        with self._lock:
            return sync_mod.build_changeset(
                self._cards, self._grants, self._directory,
                relationship_id, requester, watermark, self.clock.value,
            )

    def sync_pull(self, relationship_id, as_partner=None) -> SyncReport:
        requester = as_partner or self.partner_id
        with self._pull_lock(relationship_id):
            with self._lock:
                rel = self._directory.require_relationship(relationship_id)
                if not rel.has_member(requester):
                    raise NotMember(f"{requester} is not a member of {relationship_id}")
                if rel.state != RelationshipState.COLLABORATING:
                    raise RelationshipNotCollaborating(
                        f"cannot pull on a {rel.state.value} relationship"
                    )
                peer = self._peers.get(relationship_id)
                watermark = sync_mod.build_watermark(
                    self._cards, self._grants, self._directory, relationship_id
                )
            if peer is None:
                raise PeerUnreachable(f"no peer configured for {relationship_id}")
            changes = peer.changes_since(relationship_id, requester, watermark.to_dict())
            with self._lock:
                changeset = ChangeSet.from_dict(changes)
                sync_mod.validate_changeset(self._cards, changeset)
                lamport = max(self.clock.value, changeset.responder_lamport)
                if changeset.is_empty() and changeset.responder_lamport <= self.clock.value:
                    return SyncReport(0, 0)
                return self._commit(
                    "changes_applied",
                    {"relationship_id": relationship_id, "changeset": changeset.to_dict()},
                    lamport,
                )

    def _pull_lock(self, relationship_id: str) -> threading.Lock:
        with self._lock:
            return self._pull_locks.setdefault(relationship_id, threading.Lock())

    # ------------------------------------------------------------------
    # workflow
    # ------------------------------------------------------------------

    def define_process(self, name, activities) -> Process:
        with self._lock:
            payload = self._workflow.prepare_define(self._directory, name, activities)
            return self._commit("process_defined", payload, payload["lamport"])

    def attach_knowledge(self, activity_id, card_id, note="") -> KnowledgeAssociation:
        with self._lock:
            payload = self._workflow.prepare_attach(
                lambda owner: self.visible_cards(owner), self._cards, activity_id, card_id, note
            )
            return self._commit("knowledge_attached", payload, payload["lamport"])

    def flow_report(self, process_id) -> FlowReport:
        with self._lock:
            return self._workflow.flow_report(self._cards, self._grants, self._directory, process_id)

    def get_process(self, process_id) -> Process:
        with self._lock:
            return self._workflow.get_process(process_id)

    def list_processes(self) -> list[Process]:
        with self._lock:
            return self._workflow.all_processes()

    # ------------------------------------------------------------------
    # bundles
    # ------------------------------------------------------------------

    def export_bundle(self, card_ids, include_links: bool = True) -> dict:
        with self._lock:
            visible = set(self.visible_cards(self.partner_id))
            for card_id in card_ids:
                if not self._cards.exists(card_id):
                    raise UnknownCard(f"no card {card_id}")
                if card_id not in visible:
                    raise NotVisible(f"card {card_id} is not visible to {self.partner_id}")
            return bundle_mod.build_bundle(self._cards, card_ids, include_links)

    def import_bundle(self, bundle: dict, conflict_policy: str = bundle_mod.SKIP) -> bundle_mod.ImportReport:
        if conflict_policy not in bundle_mod.CONFLICT_POLICIES:
            raise ValidationError(f"unknown conflict policy {conflict_policy!r}")
        with self._lock:
            bundle_mod.validate_bundle(bundle)
            # Dry-run on a scratch copy: a no-op import (everything known
            # already) is not a mutation and must not be logged.
            probe = CardStore(self.partner_id, LamportClock())
            probe.load_state(self._cards.dump_state(), [l.to_dict() for l in self._cards.all_links()])
            before = (probe.dump_state(), [l.to_dict() for l in probe.all_links()])
            counts = bundle_mod.merge_bundle(probe, bundle, conflict_policy, self.partner_id)
            if (probe.dump_state(), [l.to_dict() for l in probe.all_links()]) == before:
                return bundle_mod.ImportReport(**counts)
            lamport = self.clock.tick()
            counts = self._commit(
                "bundle_imported",
                {"bundle": bundle, "conflict_policy": conflict_policy, "lamport": lamport},
                lamport,
            )
            return bundle_mod.ImportReport(**counts)

    # ------------------------------------------------------------------
    # state serialization (snapshots, durability checks)
    # ------------------------------------------------------------------

    def state_dict(self) -> dict:
        with self._lock:
            return {
                "partner_id": self.partner_id,
                "clock": self.clock.value,
                "cards": self._cards.dump_state(),
                "links": [l.to_dict() for l in self._cards.all_links()],
                "partners": [p.to_dict() for p in self._directory.all_partners()],
                "relationships": [r.to_dict() for r in self._directory.all_relationships()],
                "grants": [g.to_dict() for g in self._grants.all_grants()],
                "processes": [p.to_dict() for p in self._workflow.all_processes()],
                "associations": [a.to_dict() for a in self._workflow.all_associations()],
            }

    def canonical_state_bytes(self) -> bytes:
        return canonical_bytes(self.state_dict())

    def _load_state(self, state: dict) -> None:
        if state.get("partner_id") != self.partner_id:
            raise CorruptEventLog(
                f"snapshot belongs to {state.get('partner_id')!r}, node is {self.partner_id!r}"
            )
        self._cards.load_state(state["cards"], state["links"])
        self._directory.load_state(state["partners"], state["relationships"])
        self._grants.load_state(state["grants"])
        self._workflow.load_state(state["processes"], state["associations"])
        self.clock.observe(state["clock"])

    # ------------------------------------------------------------------
    # event appliers
    # ------------------------------------------------------------------

    def _apply_card_created(self, payload):
        card_id = self._cards.apply_create(payload)
        return card_id

    def _apply_card_revised(self, payload):
        return self._cards.apply_revision(payload)

    def _apply_comment_added(self, payload):
        return self._cards.apply_comment(payload)

    def _apply_card_classified(self, payload):
        return self._cards.apply_classification(payload)

    def _apply_link_added(self, payload):
        return self._cards.apply_link_add(payload)

    def _apply_link_removed(self, payload):
        return self._cards.apply_link_remove(payload)

    def _apply_partner_registered(self, payload):
        return self._directory.apply_register(payload)

    def _apply_relationship_proposed(self, payload):
        return self._directory.apply_propose(payload)

    def _apply_collaboration_defined(self, payload):
        return self._directory.apply_define(payload)

    def _apply_collaboration_begun(self, payload):
        return self._directory.apply_begin(payload)

    def _apply_facilitator_assigned(self, payload):
        return self._directory.apply_facilitator(payload)

    def _apply_relationship_closed(self, payload):
        return self._directory.apply_close(payload)

    def _apply_share_granted(self, payload):
        return self._grants.apply_grant(payload)

    def _apply_share_revoked(self, payload):
        return self._grants.apply_revoke(payload)

    def _apply_process_defined(self, payload):
        return self._workflow.apply_define(payload)

    def _apply_knowledge_attached(self, payload):
        return self._workflow.apply_attach(payload)

    def _apply_changes_applied(self, payload):
        changeset = ChangeSet.from_dict(payload["changeset"])
        report = sync_mod.apply_changeset(self._cards, changeset, payload["relationship_id"])
        self.clock.observe(changeset.responder_lamport)
        return report

    def _apply_bundle_imported(self, payload):
        counts = bundle_mod.merge_bundle(
            self._cards, payload["bundle"], payload["conflict_policy"], self.partner_id
        )
        self.clock.observe(payload["lamport"])
        return counts

    _APPLIERS = {
        "card_created": _apply_card_created,
        "card_revised": _apply_card_revised,
        "comment_added": _apply_comment_added,
        "card_classified": _apply_card_classified,
        "link_added": _apply_link_added,
        "link_removed": _apply_link_removed,
        "partner_registered": _apply_partner_registered,
        "relationship_proposed": _apply_relationship_proposed,
        "collaboration_defined": _apply_collaboration_defined,
        "collaboration_begun": _apply_collaboration_begun,
        "facilitator_assigned": _apply_facilitator_assigned,
        "relationship_closed": _apply_relationship_closed,
        "share_granted": _apply_share_granted,
        "share_revoked": _apply_share_revoked,
        "process_defined": _apply_process_defined,
        "knowledge_attached": _apply_knowledge_attached,
        "changes_applied": _apply_changes_applied,
        "bundle_imported": _apply_bundle_imported,
    }

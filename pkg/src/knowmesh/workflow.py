"""Process activities and the knowledge attached to them.

Processes are linear activity chains owned by registered partners; cards
attach to activities the owner can see. The flow report aggregates attached
knowledge per activity and per relationship, with coverage = fraction of
activities that have at least one attached card.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import new_id
from .cards import CardStore
from .clock import LamportClock
from .errors import (
    DuplicateAssociation,
    EmptyProcess,
    NotVisibleToOwner,
    OwnerNotMember,
    UnknownActivity,
    UnknownCard,
    UnknownPartner,
    UnknownProcess,
)
from .partners import PartnerDirectory
from .sync import GrantStore, shared_card_ids


@dataclass(frozen=True)
class Activity:
    activity_id: str
    name: str
    owner: str
    upstream_relationship: str | None

    def to_dict(self) -> dict:
        return {
            "activity_id": self.activity_id,
            "name": self.name,
            "owner": self.owner,
            "upstream_relationship": self.upstream_relationship,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Activity":
        return cls(data["activity_id"], data["name"], data["owner"], data["upstream_relationship"])


@dataclass(frozen=True)
class Process:
    process_id: str
    name: str
    activities: tuple[Activity, ...]

    def to_dict(self) -> dict:
        return {
            "process_id": self.process_id,
            "name": self.name,
            "activities": [a.to_dict() for a in self.activities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Process":
        return cls(
            data["process_id"], data["name"], tuple(Activity.from_dict(a) for a in data["activities"])
        )


@dataclass(frozen=True)
class KnowledgeAssociation:
    activity_id: str
    card_id: str
    note: str

    def to_dict(self) -> dict:
        return {"activity_id": self.activity_id, "card_id": self.card_id, "note": self.note}

    @classmethod
    def from_dict(cls, data: dict) -> "KnowledgeAssociation":
        return cls(data["activity_id"], data["card_id"], data["note"])


@dataclass(frozen=True)
class FlowReport:
    process_id: str
    activities: tuple[dict, ...]
    relationships: tuple[dict, ...]
    coverage: float

    def to_dict(self) -> dict:
        return {
            "process_id": self.process_id,
            "activities": list(self.activities),
            "relationships": list(self.relationships),
            "coverage": self.coverage,
        }


class WorkflowStore:
    def __init__(self, clock: LamportClock):
        self.clock = clock
        self._processes: dict[str, Process] = {}
        self._activity_index: dict[str, tuple[str, Activity]] = {}
        self._associations: dict[tuple[str, str], KnowledgeAssociation] = {}

    # -- commands ---------------------------------------------------------

    def prepare_define(self, directory: PartnerDirectory, name: str, activities) -> dict:
        specs = list(activities)
        if not specs:
            raise EmptyProcess("a process needs at least one activity")
        resolved = []
        for spec in specs:
            if isinstance(spec, dict):
                act_name = spec["name"]
                owner = spec["owner"]
                upstream = spec.get("upstream_relationship")
            else:
                act_name, owner = spec[0], spec[1]
                upstream = spec[2] if len(spec) > 2 else None
            if not directory.partner_exists(owner):
                raise UnknownPartner(f"no partner {owner}")
            if upstream is not None:
                rel = directory.require_relationship(upstream)
                if not rel.has_member(owner):
                    raise OwnerNotMember(
                        f"{owner} is not a member of upstream relationship {upstream}"
                    )
            resolved.append({"name": act_name, "owner": owner, "upstream_relationship": upstream})
        lamport = self.clock.tick()
        return {
            "process_id": new_id(),
            "name": name,
            "activities": [
                {"activity_id": new_id(), **spec} for spec in resolved
            ],
            "lamport": lamport,
        }

    def apply_define(self, payload: dict) -> Process:
        process = Process(
            process_id=payload["process_id"],
            name=payload["name"],
            activities=tuple(Activity.from_dict(a) for a in payload["activities"]),
        )
        self._processes[process.process_id] = process
        for activity in process.activities:
            self._activity_index[activity.activity_id] = (process.process_id, activity)
        self.clock.observe(payload["lamport"])
        return process

    def prepare_attach(self, visible_to_owner, cards: CardStore,
                       activity_id: str, card_id: str, note: str) -> dict:
        entry = self._activity_index.get(activity_id)
        if entry is None:
            raise UnknownActivity(f"no activity {activity_id}")
        _, activity = entry
        if not cards.exists(card_id):
            raise UnknownCard(f"no card {card_id}")
        if card_id not in visible_to_owner(activity.owner):
            raise NotVisibleToOwner(f"card {card_id} is not visible to {activity.owner}")
        if (activity_id, card_id) in self._associations:
            raise DuplicateAssociation(f"card {card_id} is already attached to {activity_id}")
        lamport = self.clock.tick()
        return {"activity_id": activity_id, "card_id": card_id, "note": note, "lamport": lamport}

    def apply_attach(self, payload: dict) -> KnowledgeAssociation:
        association = KnowledgeAssociation(payload["activity_id"], payload["card_id"], payload["note"])
        self._associations[(association.activity_id, association.card_id)] = association
        self.clock.observe(payload["lamport"])
        return association

    # -- state serialization ---------------------------------------------------

    def load_state(self, process_records: list[dict], association_records: list[dict]) -> None:
        for raw in process_records:
            process = Process.from_dict(raw)
            self._processes[process.process_id] = process
            for activity in process.activities:
                self._activity_index[activity.activity_id] = (process.process_id, activity)
        for raw in association_records:
            association = KnowledgeAssociation.from_dict(raw)
            self._associations[(association.activity_id, association.card_id)] = association

    # -- queries ------------------------------------------------------------

    def get_process(self, process_id: str) -> Process:
        process = self._processes.get(process_id)
        if process is None:
            raise UnknownProcess(f"no process {process_id}")
        return process

    def all_processes(self) -> list[Process]:
        return [self._processes[k] for k in sorted(self._processes)]

    def all_associations(self) -> list[KnowledgeAssociation]:
        return [self._associations[k] for k in sorted(self._associations)]

    def associations_for(self, activity_id: str) -> list[KnowledgeAssociation]:
        return [a for a in self.all_associations() if a.activity_id == activity_id]

    def flow_report(self, cards: CardStore, grants: GrantStore,
                    directory: PartnerDirectory, process_id: str) -> FlowReport:
        process = self.get_process(process_id)
        owners = {a.owner for a in process.activities}

        activity_rows = []
        covered = 0
        for activity in process.activities:
            attached = self.associations_for(activity.activity_id)
            if attached:
                covered += 1
            activity_rows.append(
                {
                    "activity_id": activity.activity_id,
                    "name": activity.name,
                    "owner": activity.owner,
                    "upstream_relationship": activity.upstream_relationship,
                    "cards": [a.card_id for a in attached],
                }
            )

        relationship_rows = []
        seen: set[str] = set()
        for activity in process.activities:
            rel_id = activity.upstream_relationship
            if rel_id is None or rel_id in seen:
                continue
            seen.add(rel_id)
            rel = directory.require_relationship(rel_id)
            exchanged = []
            for card_id in shared_card_ids(cards, grants, rel_id):
                origin = cards.state_of(card_id).origin_node
                recipient = rel.other_member(origin) if rel.has_member(origin) else None
                if origin in owners or (recipient is not None and recipient in owners):
                    exchanged.append(card_id)
            relationship_rows.append({"relationship_id": rel_id, "cards": exchanged})

        coverage = covered / len(process.activities)
        return FlowReport(
            process_id=process_id,
            activities=tuple(activity_rows),
            relationships=tuple(relationship_rows),
            coverage=coverage,
        )

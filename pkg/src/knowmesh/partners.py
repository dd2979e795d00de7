"""Partner registry and the relationship lifecycle state machine.

A relationship walks Analysis -> Defining -> Collaborating, with any state
allowed to jump to Closed; Closed is absorbing and closing twice is a no-op.
The facilitator is an independent third party, by default a non-Firm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .canonical import new_id
from .clock import LamportClock
from .errors import (
    DuplicateRelationship,
    EmptyGoals,
    EmptyName,
    FacilitatorIsMember,
    FacilitatorNotInstitute,
    InvalidState,
    SelfRelationship,
    UnknownPartner,
    UnknownRelationship,
    ValidationError,
)


class PartnerKind(str, Enum):
    FIRM = "Firm"
    INSTITUTE = "Institute"
    GOVERNMENT = "Government"
    ASSOCIATION = "Association"


class RelationshipState(str, Enum):
    ANALYSIS = "Analysis"
    DEFINING = "Defining"
    COLLABORATING = "Collaborating"
    CLOSED = "Closed"


STATE_ORDINAL = {
    RelationshipState.ANALYSIS: 0,
    RelationshipState.DEFINING: 1,
    RelationshipState.COLLABORATING: 2,
    RelationshipState.CLOSED: 3,
}


@dataclass(frozen=True)
class Partner:
    partner_id: str
    name: str
    kind: PartnerKind
    cluster_role: str

    def to_dict(self) -> dict:
        return {
            "partner_id": self.partner_id,
            "name": self.name,
            "kind": self.kind.value,
            "cluster_role": self.cluster_role,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Partner":
        return cls(data["partner_id"], data["name"], PartnerKind(data["kind"]), data["cluster_role"])


@dataclass(frozen=True)
class Relationship:
    relationship_id: str
    members: tuple[str, str]
    facilitator: str | None
    state: RelationshipState
    goals: tuple[str, ...]
    scope: str

    def has_member(self, partner_id: str) -> bool:
        return partner_id in self.members

    def other_member(self, partner_id: str) -> str:
        a, b = self.members
        return b if partner_id == a else a

    def to_dict(self) -> dict:
        return {
            "relationship_id": self.relationship_id,
            "members": list(self.members),
            "facilitator": self.facilitator,
            "state": self.state.value,
            "goals": list(self.goals),
            "scope": self.scope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Relationship":
        return cls(
            relationship_id=data["relationship_id"],
            members=tuple(data["members"]),
            facilitator=data["facilitator"],
            state=RelationshipState(data["state"]),
            goals=tuple(data["goals"]),
            scope=data["scope"],
        )


def _coerce_kind(value) -> PartnerKind:
    if isinstance(value, PartnerKind):
        return value
    try:
        return PartnerKind(value)
    except ValueError:
        raise ValidationError(f"unknown partner kind {value!r}") from None


class PartnerDirectory:
    """This node's view of the cluster: partners and pairwise relationships."""

    def __init__(self, clock: LamportClock):
        self.clock = clock
        self._partners: dict[str, Partner] = {}
        self._relationships: dict[str, Relationship] = {}

    # -- commands ---------------------------------------------------------

    def prepare_register(self, name, kind, cluster_role, partner_id=None) -> dict:
        if not name:
            raise EmptyName("partner name must be non-empty")
        kind = _coerce_kind(kind)
        if partner_id is not None and partner_id in self._partners:
            raise ValidationError(f"partner id {partner_id} already registered")
        lamport = self.clock.tick()
        return {
            "partner_id": partner_id or new_id(),
            "name": name,
            "kind": kind.value,
            "cluster_role": cluster_role,
            "lamport": lamport,
        }

    def apply_register(self, payload: dict) -> Partner:
        partner = Partner(
            payload["partner_id"], payload["name"], PartnerKind(payload["kind"]), payload["cluster_role"]
        )
        self._partners[partner.partner_id] = partner
        self.clock.observe(payload["lamport"])
        return partner

    def prepare_propose(self, a, b, relationship_id=None) -> dict:
        if a == b:
            raise SelfRelationship("a relationship needs two distinct partners")
        for pid in (a, b):
            if pid not in self._partners:
                raise UnknownPartner(f"no partner {pid}")
        if self.open_relationship_between(a, b) is not None:
            raise DuplicateRelationship(f"an open relationship between {a} and {b} already exists")
        if relationship_id is not None and relationship_id in self._relationships:
            raise ValidationError(f"relationship id {relationship_id} already exists")
        lamport = self.clock.tick()
        return {
            "relationship_id": relationship_id or new_id(),
            "members": sorted((a, b)),
            "lamport": lamport,
        }

    def apply_propose(self, payload: dict) -> Relationship:
        relationship = Relationship(
            relationship_id=payload["relationship_id"],
            members=tuple(payload["members"]),
            facilitator=None,
            state=RelationshipState.ANALYSIS,
            goals=(),
            scope="",
        )
        self._relationships[relationship.relationship_id] = relationship
        self.clock.observe(payload["lamport"])
        return relationship

    def prepare_define(self, relationship_id, goals, scope) -> dict:
        rel = self.require_relationship(relationship_id)
        if rel.state != RelationshipState.ANALYSIS:
            raise InvalidState(f"cannot define a {rel.state.value} relationship")
        goals = [g for g in goals]
        if not goals:
            raise EmptyGoals("collaboration goals must be non-empty")
        lamport = self.clock.tick()
        return {"relationship_id": relationship_id, "goals": goals, "scope": scope, "lamport": lamport}

    def apply_define(self, payload: dict) -> Relationship:
        rel = self._relationships[payload["relationship_id"]]
        rel = replace(
            rel,
            state=RelationshipState.DEFINING,
            goals=tuple(payload["goals"]),
            scope=payload["scope"],
        )
        self._relationships[rel.relationship_id] = rel
        self.clock.observe(payload["lamport"])
        return rel

    def prepare_begin(self, relationship_id) -> dict:
        rel = self.require_relationship(relationship_id)
        if rel.state != RelationshipState.DEFINING:
            raise InvalidState(f"cannot start collaborating from {rel.state.value}")
        lamport = self.clock.tick()
        return {"relationship_id": relationship_id, "lamport": lamport}

    def apply_begin(self, payload: dict) -> Relationship:
        rel = self._relationships[payload["relationship_id"]]
        rel = replace(rel, state=RelationshipState.COLLABORATING)
        self._relationships[rel.relationship_id] = rel
        self.clock.observe(payload["lamport"])
        return rel

    def prepare_facilitator(self, relationship_id, partner_id, allow_firm: bool) -> dict:
        rel = self.require_relationship(relationship_id)
        if rel.state == RelationshipState.CLOSED:
            raise InvalidState("cannot assign a facilitator to a closed relationship")
        partner = self._partners.get(partner_id)
        if partner is None:
            raise UnknownPartner(f"no partner {partner_id}")
        if rel.has_member(partner_id):
            raise FacilitatorIsMember("the facilitator must be independent of the members")
        if partner.kind == PartnerKind.FIRM and not allow_firm:
            raise FacilitatorNotInstitute("a firm cannot facilitate unless allow_firm_facilitator is set")
        lamport = self.clock.tick()
        return {"relationship_id": relationship_id, "partner_id": partner_id, "lamport": lamport}

    def apply_facilitator(self, payload: dict) -> Relationship:
        rel = self._relationships[payload["relationship_id"]]
        rel = replace(rel, facilitator=payload["partner_id"])
        self._relationships[rel.relationship_id] = rel
        self.clock.observe(payload["lamport"])
        return rel

    def prepare_close(self, relationship_id) -> dict | None:
        """Returns None when the relationship is already Closed (idempotent)."""
        rel = self.require_relationship(relationship_id)
        if rel.state == RelationshipState.CLOSED:
            return None
        lamport = self.clock.tick()
        return {"relationship_id": relationship_id, "lamport": lamport}

    def apply_close(self, payload: dict) -> Relationship:
        rel = self._relationships[payload["relationship_id"]]
        rel = replace(rel, state=RelationshipState.CLOSED)
        self._relationships[rel.relationship_id] = rel
        self.clock.observe(payload["lamport"])
        return rel

    # -- state serialization ---------------------------------------------------

    def load_state(self, partner_records: list[dict], relationship_records: list[dict]) -> None:
        for raw in partner_records:
            partner = Partner.from_dict(raw)
            self._partners[partner.partner_id] = partner
        for raw in relationship_records:
            rel = Relationship.from_dict(raw)
            self._relationships[rel.relationship_id] = rel

    # -- queries ------------------------------------------------------------

    def partner_exists(self, partner_id: str) -> bool:
        return partner_id in self._partners

    def get_partner(self, partner_id: str) -> Partner:
        partner = self._partners.get(partner_id)
        if partner is None:
            raise UnknownPartner(f"no partner {partner_id}")
        return partner

    def require_relationship(self, relationship_id: str) -> Relationship:
        rel = self._relationships.get(relationship_id)
        if rel is None:
            raise UnknownRelationship(f"no relationship {relationship_id}")
        return rel

    def open_relationship_between(self, a: str, b: str) -> Relationship | None:
        pair = tuple(sorted((a, b)))
        for rel in self._relationships.values():
            if rel.members == pair and rel.state != RelationshipState.CLOSED:
                return rel
        return None

    def all_partners(self) -> list[Partner]:
        return [self._partners[k] for k in sorted(self._partners)]

    def all_relationships(self) -> list[Relationship]:
        return [self._relationships[k] for k in sorted(self._relationships)]

    def relationships_of(self, partner_id: str) -> list[Relationship]:
        return [r for r in self.all_relationships() if r.has_member(partner_id)]

    def facilitated_by(self, partner_id: str) -> list[Relationship]:
        return [r for r in self.all_relationships() if r.facilitator == partner_id]

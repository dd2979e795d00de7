"""Knowledge-card store: creation, revision DAG, comments, cube classification,
and typed inter-card links.

Mutations follow a prepare/apply split so the owning node can event-source
them: ``prepare_*`` validates against current state and builds a payload
(advancing the clock only after all checks pass), ``apply_*`` replays a payload
unconditionally. Live calls and log replay run through the same appliers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from graphlib import CycleError, TopologicalSorter
from typing import Any, Iterable

from .canonical import digest_of, new_id
from .clock import LamportClock
from .errors import (
    DuplicateLink,
    EmptyParents,
    EmptyText,
    EmptyTitle,
    FormContentViolation,
    HierarchyCycle,
    InvalidCoordinate,
    MissingExplicitContent,
    MissingTacitExperts,
    SelfLink,
    UnknownCard,
    UnknownLink,
    UnknownParent,
    ValidationError,
)


class Perspective(str, Enum):
    ORGANISATION = "Organisation"
    PARTNER = "Partner"
    ENVIRONMENT = "Environment"


class Nature(str, Enum):
    EXPERIENCE = "Experience"
    CONCEPT = "Concept"
    EXPECTATION = "Expectation"
    METHODOLOGY = "Methodology"


class Form(str, Enum):
    EXPLICIT = "Explicit"
    TACIT = "Tacit"


class LinkType(str, Enum):
    IS_A = "IsA"
    KIND_OF = "KindOf"
    PART_OF = "PartOf"
    ASSOCIATION = "Association"


HIERARCHICAL_LINK_TYPES = frozenset({LinkType.IS_A, LinkType.KIND_OF, LinkType.PART_OF})


def _coerce(enum_cls: type, value: Any):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        raise InvalidCoordinate(
            f"{value!r} is not a valid {enum_cls.__name__}"
        ) from None


@dataclass(frozen=True)
class CubeCoordinate:
    """Position in the three-axis classification cube (24 cells)."""

    perspective: Perspective
    nature: Nature
    form: Form

    @classmethod
    def of(cls, perspective, nature, form) -> "CubeCoordinate":
        return cls(
            _coerce(Perspective, perspective),
            _coerce(Nature, nature),
            _coerce(Form, form),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "CubeCoordinate":
        try:
            return cls.of(data["perspective"], data["nature"], data["form"])
        except (KeyError, TypeError):
            raise InvalidCoordinate(f"malformed coordinate: {data!r}") from None

    def to_dict(self) -> dict:
        return {
            "perspective": self.perspective.value,
            "nature": self.nature.value,
            "form": self.form.value,
        }

    def matches(self, perspective=None, nature=None, form=None) -> bool:
        if perspective is not None and self.perspective != _coerce(Perspective, perspective):
            return False
        if nature is not None and self.nature != _coerce(Nature, nature):
            return False
        if form is not None and self.form != _coerce(Form, form):
            return False
        return True


@dataclass(frozen=True)
class ExpertRef:
    name: str
    organisation: str
    contact: str

    def to_dict(self) -> dict:
        return {"name": self.name, "organisation": self.organisation, "contact": self.contact}

    @classmethod
    def from_dict(cls, data: dict) -> "ExpertRef":
        return cls(data["name"], data["organisation"], data["contact"])


@dataclass(frozen=True)
class DocumentRef:
    label: str
    locator: str

    def to_dict(self) -> dict:
        return {"label": self.label, "locator": self.locator}

    @classmethod
    def from_dict(cls, data: dict) -> "DocumentRef":
        return cls(data["label"], data["locator"])


@dataclass(frozen=True)
class Revision:
    """One node of a card's append-only revision DAG.

    ``revision_id`` is the content hash of (card_id, parent_ids, author,
    lamport, body); parent ids are kept sorted so the same logical merge hashes
    identically on every node.
    """

    revision_id: str
    parent_ids: tuple[str, ...]
    author: str
    lamport: int
    body: str

    @staticmethod
    def compute_id(card_id: str, parent_ids: Iterable[str], author: str, lamport: int, body: str) -> str:
        return digest_of(
            {
                "author": author,
                "body": body,
                "card_id": card_id,
                "lamport": lamport,
                "parent_ids": sorted(parent_ids),
            }
        )

    @property
    def sort_key(self) -> tuple[int, str, str]:
        return (self.lamport, self.author, self.revision_id)

    def to_dict(self) -> dict:
        return {
            "revision_id": self.revision_id,
            "parent_ids": list(self.parent_ids),
            "author": self.author,
            "lamport": self.lamport,
            "body": self.body,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Revision":
        return cls(
            revision_id=data["revision_id"],
            parent_ids=tuple(data["parent_ids"]),
            author=data["author"],
            lamport=data["lamport"],
            body=data["body"],
        )


@dataclass(frozen=True)
class Comment:
    comment_id: str
    author: str
    text: str
    at_revision: str
    lamport: int

    @property
    def sort_key(self) -> tuple[int, str, str]:
        return (self.lamport, self.author, self.comment_id)

    def to_dict(self) -> dict:
        return {
            "comment_id": self.comment_id,
            "author": self.author,
            "text": self.text,
            "at_revision": self.at_revision,
            "lamport": self.lamport,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Comment":
        return cls(data["comment_id"], data["author"], data["text"], data["at_revision"], data["lamport"])


@dataclass(frozen=True)
class ClassificationEvent:
    """Metadata event recording a coordinate change; the card's current
    coordinate is the last event under the (lamport, author, event_id) order."""

    event_id: str
    coordinate: CubeCoordinate
    author: str
    lamport: int

    @property
    def sort_key(self) -> tuple[int, str, str]:
        return (self.lamport, self.author, self.event_id)

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "coordinate": self.coordinate.to_dict(),
            "author": self.author,
            "lamport": self.lamport,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassificationEvent":
        return cls(
            data["event_id"],
            CubeCoordinate.from_dict(data["coordinate"]),
            data["author"],
            data["lamport"],
        )


@dataclass(frozen=True)
class Link:
    source: str
    target: str
    link_type: LinkType

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.link_type.value)

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "link_type": self.link_type.value}

    @classmethod
    def from_dict(cls, data: dict) -> "Link":
        return cls(data["source"], data["target"], _coerce_link_type(data["link_type"]))


@dataclass(frozen=True)
class KnowledgeCard:
    """Immutable snapshot of a card; revisions in history order, comments in
    the deterministic (lamport, author, comment_id) order."""

    card_id: str
    title: str
    author: str
    origin_node: str
    coordinate: CubeCoordinate
    revisions: tuple[Revision, ...]
    comments: tuple[Comment, ...]
    expert_refs: tuple[ExpertRef, ...]
    document_refs: tuple[DocumentRef, ...]
    created_at: int

    def to_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "title": self.title,
            "author": self.author,
            "origin_node": self.origin_node,
            "coordinate": self.coordinate.to_dict(),
            "revisions": [r.to_dict() for r in self.revisions],
            "comments": [c.to_dict() for c in self.comments],
            "expert_refs": [e.to_dict() for e in self.expert_refs],
            "document_refs": [d.to_dict() for d in self.document_refs],
            "created_at": self.created_at,
        }


class _CardState:
    """Mutable per-card state; only CardStore appliers touch it."""

    __slots__ = (
        "card_id", "title", "author", "origin_node", "base_coordinate",
        "created_at", "expert_refs", "document_refs", "revisions",
        "parent_refs", "comments", "classifications", "received_via", "imported",
    )

    def __init__(self, card_id, title, author, origin_node, coordinate, created_at,
                 expert_refs, document_refs, received_via=None, imported=False):
        self.card_id = card_id
        self.title = title
        self.author = author
        self.origin_node = origin_node
        self.base_coordinate: CubeCoordinate = coordinate
        self.created_at = created_at
        self.expert_refs: tuple[ExpertRef, ...] = tuple(expert_refs)
        self.document_refs: tuple[DocumentRef, ...] = tuple(document_refs)
        self.revisions: dict[str, Revision] = {}
        self.parent_refs: set[str] = set()  # revision ids referenced as a parent
        self.comments: dict[str, Comment] = {}
        self.classifications: dict[str, ClassificationEvent] = {}
        self.received_via: str | None = received_via
        self.imported = imported

    @property
    def coordinate(self) -> CubeCoordinate:
        if self.classifications:
            latest = max(self.classifications.values(), key=lambda e: e.sort_key)
            return latest.coordinate
        return self.base_coordinate

    def heads(self) -> list[Revision]:
        return [r for rid, r in self.revisions.items() if rid not in self.parent_refs]

    def header_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "title": self.title,
            "author": self.author,
            "origin_node": self.origin_node,
            "coordinate": self.coordinate.to_dict(),
            "created_at": self.created_at,
            "expert_refs": [e.to_dict() for e in self.expert_refs],
            "document_refs": [d.to_dict() for d in self.document_refs],
        }


def check_form_content(form: Form, body: str, expert_refs, document_refs, error_cls) -> None:
    """Enforce the form-dependent content rule; raises ``error_cls``."""
    if form == Form.TACIT:
        if not expert_refs:
            raise error_cls("tacit knowledge needs at least one expert reference")
    else:
        if not body and not document_refs:
            raise error_cls("explicit knowledge needs a body or a document reference")


class CardStore:
    """All cards, links, comments and classification events held by one node."""

    def __init__(self, partner_id: str, clock: LamportClock):
        self.partner_id = partner_id
        self.clock = clock
        self._cards: dict[str, _CardState] = {}
        self._links: set[Link] = set()

    # -- commands ---------------------------------------------------------

    def prepare_create(self, title, author, coordinate, body="", expert_refs=(), document_refs=()) -> dict:
        if not title:
            raise EmptyTitle("card title must be non-empty")
        if not isinstance(coordinate, CubeCoordinate):
            coordinate = (
                CubeCoordinate.from_dict(coordinate)
                if isinstance(coordinate, dict)
                else CubeCoordinate.of(*coordinate)
            )
        experts = tuple(e if isinstance(e, ExpertRef) else ExpertRef.from_dict(e) for e in expert_refs)
        documents = tuple(d if isinstance(d, DocumentRef) else DocumentRef.from_dict(d) for d in document_refs)
        if coordinate.form == Form.TACIT and not experts:
            raise MissingTacitExperts("tacit knowledge needs at least one expert reference")
        if coordinate.form == Form.EXPLICIT and not body and not documents:
            raise MissingExplicitContent("explicit knowledge needs a body or a document reference")
        lamport = self.clock.tick()
        card_id = new_id()
        revision_id = Revision.compute_id(card_id, [], author, lamport, body)
        return {
            "card_id": card_id,
            "title": title,
            "author": author,
            "origin_node": self.partner_id,
            "coordinate": coordinate.to_dict(),
            "created_at": lamport,
            "expert_refs": [e.to_dict() for e in experts],
            "document_refs": [d.to_dict() for d in documents],
            "revision": {
                "revision_id": revision_id,
                "parent_ids": [],
                "author": author,
                "lamport": lamport,
                "body": body,
            },
        }

    def apply_create(self, payload: dict) -> str:
        state = _CardState(
            card_id=payload["card_id"],
            title=payload["title"],
            author=payload["author"],
            origin_node=payload["origin_node"],
            coordinate=CubeCoordinate.from_dict(payload["coordinate"]),
            created_at=payload["created_at"],
            expert_refs=[ExpertRef.from_dict(e) for e in payload["expert_refs"]],
            document_refs=[DocumentRef.from_dict(d) for d in payload["document_refs"]],
        )
        root = Revision.from_dict(payload["revision"])
        state.revisions[root.revision_id] = root
        self._cards[state.card_id] = state
        self.clock.observe(payload["created_at"])
        return state.card_id

    def prepare_revision(self, card_id, author, body, parent_ids) -> dict:
        state = self._require(card_id)
        if not parent_ids:
            raise EmptyParents("a revision needs at least one parent")
        parents = sorted(set(parent_ids))
        for pid in parents:
            if pid not in state.revisions:
                raise UnknownParent(f"revision {pid} is not part of card {card_id}")
        lamport = 1 + max(max(state.revisions[p].lamport for p in parents), self.clock.value)
        self.clock.observe(lamport)
        revision_id = Revision.compute_id(card_id, parents, author, lamport, body)
        return {
            "card_id": card_id,
            "revision": {
                "revision_id": revision_id,
                "parent_ids": parents,
                "author": author,
                "lamport": lamport,
                "body": body,
            },
        }

    def apply_revision(self, payload: dict) -> Revision:
        state = self._cards[payload["card_id"]]
        revision = Revision.from_dict(payload["revision"])
        if revision.revision_id not in state.revisions:
            state.revisions[revision.revision_id] = revision
            state.parent_refs.update(revision.parent_ids)
        self.clock.observe(revision.lamport)
        return revision

    def prepare_comment(self, card_id, author, text) -> dict:
        state = self._require(card_id)
        if not text:
            raise EmptyText("comment text must be non-empty")
        at_revision = max(state.heads(), key=lambda r: r.sort_key).revision_id
        lamport = self.clock.tick()
        return {
            "card_id": card_id,
            "comment": {
                "comment_id": new_id(),
                "author": author,
                "text": text,
                "at_revision": at_revision,
                "lamport": lamport,
            },
        }

    def apply_comment(self, payload: dict) -> Comment:
        state = self._cards[payload["card_id"]]
        comment = Comment.from_dict(payload["comment"])
        state.comments.setdefault(comment.comment_id, comment)
        self.clock.observe(comment.lamport)
        return comment

    def prepare_classification(self, card_id, coordinate, author) -> dict:
        state = self._require(card_id)
        if not isinstance(coordinate, CubeCoordinate):
            coordinate = (
                CubeCoordinate.from_dict(coordinate)
                if isinstance(coordinate, dict)
                else CubeCoordinate.of(*coordinate)
            )
        current_body = self.current_revision(card_id).body
        check_form_content(
            coordinate.form, current_body, state.expert_refs, state.document_refs, FormContentViolation
        )
        lamport = self.clock.tick()
        return {
            "card_id": card_id,
            "classification": {
                "event_id": new_id(),
                "coordinate": coordinate.to_dict(),
                "author": author,
                "lamport": lamport,
            },
        }

    def apply_classification(self, payload: dict) -> ClassificationEvent:
        state = self._cards[payload["card_id"]]
        event = ClassificationEvent.from_dict(payload["classification"])
        state.classifications.setdefault(event.event_id, event)
        self.clock.observe(event.lamport)
        return event

    def prepare_link_add(self, source, target, link_type) -> dict:
        link_type = _coerce_link_type(link_type)
        if source not in self._cards or target not in self._cards:
            missing = source if source not in self._cards else target
            raise UnknownCard(f"no card {missing}")
        if source == target:
            raise SelfLink("a card cannot link to itself")
        link = Link(source, target, link_type)
        if link in self._links:
            raise DuplicateLink(f"link {link.triple} already exists")
        if link_type in HIERARCHICAL_LINK_TYPES and self._would_create_cycle(source, target):
            raise HierarchyCycle(f"adding {link.triple} would close a hierarchy cycle")
        lamport = self.clock.tick()
        return {"source": source, "target": target, "link_type": link_type.value, "lamport": lamport}

    def apply_link_add(self, payload: dict) -> Link:
        link = Link(payload["source"], payload["target"], LinkType(payload["link_type"]))
        self._links.add(link)
        self.clock.observe(payload["lamport"])
        return link

    def prepare_link_remove(self, source, target, link_type) -> dict:
        link_type = _coerce_link_type(link_type)
        link = Link(source, target, link_type)
        if link not in self._links:
            raise UnknownLink(f"no link {link.triple}")
        lamport = self.clock.tick()
        return {"source": source, "target": target, "link_type": link_type.value, "lamport": lamport}

    def apply_link_remove(self, payload: dict) -> None:
        link = Link(payload["source"], payload["target"], LinkType(payload["link_type"]))
        self._links.discard(link)
        self.clock.observe(payload["lamport"])

    # -- replica/import appliers -------------------------------------------

    def ensure_replica(self, header: dict, received_via: str | None = None, imported: bool = False) -> bool:
        """Create card state from a header snapshot if unknown; returns True
        when the card was new. Existing local state always wins over headers."""
        card_id = header["card_id"]
        if card_id in self._cards:
            return False
        self._cards[card_id] = _CardState(
            card_id=card_id,
            title=header["title"],
            author=header["author"],
            origin_node=header["origin_node"],
            coordinate=CubeCoordinate.from_dict(header["coordinate"]),
            created_at=header["created_at"],
            expert_refs=[ExpertRef.from_dict(e) for e in header["expert_refs"]],
            document_refs=[DocumentRef.from_dict(d) for d in header["document_refs"]],
            received_via=received_via,
            imported=imported,
        )
        return True

    def absorb_revision(self, card_id: str, revision: Revision) -> bool:
        state = self._cards[card_id]
        if revision.revision_id in state.revisions:
            return False
        state.revisions[revision.revision_id] = revision
        state.parent_refs.update(revision.parent_ids)
        return True

    def absorb_comment(self, card_id: str, comment: Comment) -> bool:
        state = self._cards[card_id]
        if comment.comment_id in state.comments:
            return False
        state.comments[comment.comment_id] = comment
        return True

    def absorb_classification(self, card_id: str, event: ClassificationEvent) -> bool:
        state = self._cards[card_id]
        if event.event_id in state.classifications:
            return False
        state.classifications[event.event_id] = event
        return True

    def absorb_link(self, link: Link) -> bool:
        """Add a replicated/imported link unless duplicate, endpoint-missing,
        or hierarchy-cycle-creating; silently skipped links return False."""
        if link in self._links:
            return False
        if link.source not in self._cards or link.target not in self._cards:
            return False
        if link.source == link.target:
            return False
        if link.link_type in HIERARCHICAL_LINK_TYPES and self._would_create_cycle(link.source, link.target):
            return False
        self._links.add(link)
        return True

    # -- queries -------------------------------------------------------------

    def exists(self, card_id: str) -> bool:
        return card_id in self._cards

    def all_ids(self) -> list[str]:
        return sorted(self._cards)

    def state_of(self, card_id: str) -> _CardState:
        return self._require(card_id)

    def snapshot(self, card_id: str) -> KnowledgeCard:
        state = self._require(card_id)
        return KnowledgeCard(
            card_id=state.card_id,
            title=state.title,
            author=state.author,
            origin_node=state.origin_node,
            coordinate=state.coordinate,
            revisions=self.history(card_id),
            comments=tuple(sorted(state.comments.values(), key=lambda c: c.sort_key)),
            expert_refs=state.expert_refs,
            document_refs=state.document_refs,
            created_at=state.created_at,
        )

    def heads(self, card_id: str) -> tuple[Revision, ...]:
        state = self._require(card_id)
        return tuple(sorted(state.heads(), key=lambda r: r.sort_key))

    def current_revision(self, card_id: str) -> Revision:
        """Deterministic head: maximal under (lamport, author, revision_id)."""
        state = self._require(card_id)
        return max(state.heads(), key=lambda r: r.sort_key)

    def history(self, card_id: str) -> tuple[Revision, ...]:
        """All revisions in topological order; parent lamports are strictly
        smaller than child lamports, so the (lamport, author, id) sort is a
        valid topological order with the tie-break built in."""
        state = self._require(card_id)
        return tuple(sorted(state.revisions.values(), key=lambda r: r.sort_key))

    def classifications(self, card_id: str) -> tuple[ClassificationEvent, ...]:
        state = self._require(card_id)
        return tuple(sorted(state.classifications.values(), key=lambda e: e.sort_key))

    def comments(self, card_id: str) -> tuple[Comment, ...]:
        state = self._require(card_id)
        return tuple(sorted(state.comments.values(), key=lambda c: c.sort_key))

    def query(self, perspective=None, nature=None, form=None, text=None,
              card_ids: Iterable[str] | None = None) -> list[KnowledgeCard]:
        needle = text.lower() if text else None
        scope = self._cards.keys() if card_ids is None else card_ids
        hits = []
        for card_id in scope:
            state = self._cards[card_id]
            if not state.coordinate.matches(perspective, nature, form):
                continue
            if needle is not None:
                body = self.current_revision(card_id).body
                if needle not in state.title.lower() and needle not in body.lower():
                    continue
            hits.append(card_id)
        hits.sort(key=lambda cid: (self._cards[cid].title, cid))
        return [self.snapshot(cid) for cid in hits]

    def links_of(self, card_id: str) -> tuple[Link, ...]:
        self._require(card_id)
        related = [l for l in self._links if l.source == card_id or l.target == card_id]
        return tuple(sorted(related, key=lambda l: l.triple))

    def all_links(self) -> tuple[Link, ...]:
        return tuple(sorted(self._links, key=lambda l: l.triple))

    # -- state serialization --------------------------------------------------

    def dump_state(self) -> list[dict]:
        records = []
        for card_id in self.all_ids():
            state = self._cards[card_id]
            records.append(
                {
                    "card_id": state.card_id,
                    "title": state.title,
                    "author": state.author,
                    "origin_node": state.origin_node,
                    "coordinate": state.base_coordinate.to_dict(),
                    "created_at": state.created_at,
                    "expert_refs": [e.to_dict() for e in state.expert_refs],
                    "document_refs": [d.to_dict() for d in state.document_refs],
                    "revisions": [r.to_dict() for r in self.history(card_id)],
                    "comments": [c.to_dict() for c in self.comments(card_id)],
                    "classifications": [e.to_dict() for e in self.classifications(card_id)],
                    "received_via": state.received_via,
                    "imported": state.imported,
                }
            )
        return records

    def load_state(self, card_records: list[dict], link_records: list[dict]) -> None:
        for record in card_records:
            state = _CardState(
                card_id=record["card_id"],
                title=record["title"],
                author=record["author"],
                origin_node=record["origin_node"],
                coordinate=CubeCoordinate.from_dict(record["coordinate"]),
                created_at=record["created_at"],
                expert_refs=[ExpertRef.from_dict(e) for e in record["expert_refs"]],
                document_refs=[DocumentRef.from_dict(d) for d in record["document_refs"]],
                received_via=record["received_via"],
                imported=record["imported"],
            )
            for raw in record["revisions"]:
                revision = Revision.from_dict(raw)
                state.revisions[revision.revision_id] = revision
                state.parent_refs.update(revision.parent_ids)
            for raw in record["comments"]:
                comment = Comment.from_dict(raw)
                state.comments[comment.comment_id] = comment
            for raw in record["classifications"]:
                event = ClassificationEvent.from_dict(raw)
                state.classifications[event.event_id] = event
            self._cards[state.card_id] = state
        for raw in link_records:
            self._links.add(Link.from_dict(raw))

    # -- internals -----------------------------------------------------------

    def _require(self, card_id: str) -> _CardState:
        state = self._cards.get(card_id)
        if state is None:
            raise UnknownCard(f"no card {card_id}")
        return state

    def _would_create_cycle(self, source: str, target: str) -> bool:
        graph: dict[str, set[str]] = {}
        for link in self._links:
            if link.link_type in HIERARCHICAL_LINK_TYPES:
                graph.setdefault(link.source, set()).add(link.target)
        graph.setdefault(source, set()).add(target)
        try:
            TopologicalSorter(graph).prepare()
        except CycleError:
            return True
        return False


def _coerce_link_type(value) -> LinkType:
    if isinstance(value, LinkType):
        return value
    try:
        return LinkType(value)
    except ValueError:
        raise ValidationError(f"unknown link type {value!r}") from None

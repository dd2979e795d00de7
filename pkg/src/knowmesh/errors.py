"""Domain error hierarchy.

Every error carries a stable ``code`` (the class name) so the HTTP layer and
the CLI can round-trip errors without losing their identity.
"""

from __future__ import annotations


class KnowmeshError(Exception):
    """Base class for all domain errors."""

    http_status = 400

    @property
    def code(self) -> str:
        return type(self).__name__


class ValidationError(KnowmeshError):
    """Malformed input that no more specific error covers (bad enum value,
    unparseable JSON body, missing request field)."""


# --- knowledge cards ---------------------------------------------------------

class EmptyTitle(KnowmeshError):
    pass


class InvalidCoordinate(KnowmeshError):
    pass


class MissingTacitExperts(KnowmeshError):
    pass


class MissingExplicitContent(KnowmeshError):
    pass


class UnknownCard(KnowmeshError):
    http_status = 404


class UnknownParent(KnowmeshError):
    http_status = 404


class EmptyParents(KnowmeshError):
    pass


class EmptyText(KnowmeshError):
    pass


class FormContentViolation(KnowmeshError):
    pass


class DuplicateLink(KnowmeshError):
    http_status = 409


class SelfLink(KnowmeshError):
    pass


class HierarchyCycle(KnowmeshError):
    http_status = 409


class UnknownLink(KnowmeshError):
    http_status = 404


# --- partners and relationships ----------------------------------------------

class EmptyName(KnowmeshError):
    pass


class UnknownPartner(KnowmeshError):
    http_status = 404


class SelfRelationship(KnowmeshError):
    pass


class DuplicateRelationship(KnowmeshError):
    http_status = 409


class UnknownRelationship(KnowmeshError):
    http_status = 404


class InvalidState(KnowmeshError):
    http_status = 409


class EmptyGoals(KnowmeshError):
    pass


class FacilitatorIsMember(KnowmeshError):
    http_status = 409


class FacilitatorNotInstitute(KnowmeshError):
    http_status = 409


# --- sharing and sync ----------------------------------------------------------

class UnknownGrant(KnowmeshError):
    http_status = 404


class NotGranter(KnowmeshError):
    http_status = 403


class AlreadyRevoked(KnowmeshError):
    http_status = 409


class NotMember(KnowmeshError):
    http_status = 403


class NotOrigin(KnowmeshError):
    http_status = 403


class RelationshipNotCollaborating(KnowmeshError):
    http_status = 409


class AlreadyGranted(KnowmeshError):
    http_status = 409


class RelationshipClosed(KnowmeshError):
    http_status = 409


class PeerUnreachable(KnowmeshError):
    http_status = 502


class InvalidChangeSet(KnowmeshError):
    http_status = 422


# --- workflow ------------------------------------------------------------------

class EmptyProcess(KnowmeshError):
    pass


class OwnerNotMember(KnowmeshError):
    http_status = 409


class UnknownActivity(KnowmeshError):
    http_status = 404


class NotVisibleToOwner(KnowmeshError):
    http_status = 403


class DuplicateAssociation(KnowmeshError):
    http_status = 409


class UnknownProcess(KnowmeshError):
    http_status = 404


# --- node service ----------------------------------------------------------------

class NotVisible(KnowmeshError):
    http_status = 403


class BadFormatVersion(KnowmeshError):
    pass


class DigestMismatch(KnowmeshError):
    pass


class CorruptBundle(KnowmeshError):
    pass


class AddressInUse(KnowmeshError):
    http_status = 500


class CorruptEventLog(KnowmeshError):
    http_status = 500


def _collect_errors() -> dict[str, type[KnowmeshError]]:
    table: dict[str, type[KnowmeshError]] = {}
    stack = [KnowmeshError]
    while stack:
        cls = stack.pop()
        table[cls.__name__] = cls
        stack.extend(cls.__subclasses__())
    return table


ERRORS_BY_CODE = _collect_errors()


def raise_coded(code: str, detail: str) -> None:
    """Re-raise a remote error from its wire code, preserving its class."""
    cls = ERRORS_BY_CODE.get(code, KnowmeshError)
    raise cls(detail)

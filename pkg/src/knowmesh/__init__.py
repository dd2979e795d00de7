"""knowmesh: federated knowledge-card exchange for supply-chain partner nodes.

Each partner runs a node holding versioned knowledge cards classified in a
three-axis cube and linked by typed ontology links. Cards are shared per
pairwise relationship and replicated by pull, so every partner controls what
flows to whom.
"""

from .bundle import FORMAT_VERSION, MERGE_HISTORIES, SKIP, ImportReport
from .cards import (
    ClassificationEvent,
    Comment,
    CubeCoordinate,
    DocumentRef,
    ExpertRef,
    Form,
    KnowledgeCard,
    Link,
    LinkType,
    Nature,
    Perspective,
    Revision,
)
from .clock import LamportClock
from .errors import KnowmeshError
from .node import Node
from .partners import Partner, PartnerKind, Relationship, RelationshipState
from .sync import ChangeSet, LocalPeer, ShareGrant, SyncReport, SyncWatermark
from .workflow import Activity, FlowReport, KnowledgeAssociation, Process

__all__ = [
    "Activity",
    "ChangeSet",
    "ClassificationEvent",
    "Comment",
    "CubeCoordinate",
    "DocumentRef",
    "ExpertRef",
    "FlowReport",
    "Form",
    "FORMAT_VERSION",
    "ImportReport",
    "KnowledgeAssociation",
    "KnowledgeCard",
    "KnowmeshError",
    "LamportClock",
    "Link",
    "LinkType",
    "LocalPeer",
    "MERGE_HISTORIES",
    "Nature",
    "Node",
    "Partner",
    "PartnerKind",
    "Perspective",
    "Process",
    "Relationship",
    "RelationshipState",
    "Revision",
    "ShareGrant",
    "SKIP",
    "SyncReport",
    "SyncWatermark",
]

__version__ = "0.1.0"

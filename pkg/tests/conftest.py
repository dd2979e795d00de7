"""Shared fixtures: the three-firm case-study cluster and small helpers."""

from __future__ import annotations

import pytest

from knowmesh import Node

PARTNERS = [
    ("mirima", "Mirima", "Firm", "stool producer"),
    ("fb", "FB", "Firm", "seat supplier"),
    ("chanel", "Chanel", "Firm", "distributor"),
    ("uni", "Lyon University", "Institute", "facilitator"),
]

REL_M_FB = "rel-m-fb"
REL_M_C = "rel-m-c"


def register_cluster(node: Node, relationships=((REL_M_FB, "mirima", "fb"), (REL_M_C, "mirima", "chanel"))):
    """Mirror the cluster directory onto one node and open all relationships."""
    for pid, name, kind, role in PARTNERS:
        node.register_partner(name, kind, role, partner_id=pid)
    for rel_id, a, b in relationships:
        node.propose_relationship(a, b, relationship_id=rel_id)
        node.define_collaboration(rel_id, ["decrease the delivering time and propose innovation"])
        node.begin_collaboration(rel_id)
    return node


@pytest.fixture
def node():
    """A single in-memory node with the cluster directory loaded."""
    return register_cluster(Node("mirima"))


@pytest.fixture
def trio():
    """Three connected in-process nodes: M, FB, C with M-FB and M-C collaborating."""
    m = register_cluster(Node("mirima"))
    fb = register_cluster(Node("fb"))
    c = register_cluster(Node("chanel"))
    m.connect(REL_M_FB, fb)
    m.connect(REL_M_C, c)
    return m, fb, c


def quiesce(a: Node, b: Node, relationship_id: str, max_rounds: int = 50) -> int:
    """Alternate pulls until two consecutive rounds report nothing applied."""
    calm = 0
    for rounds in range(1, max_rounds + 1):
        ra = a.sync_pull(relationship_id)
        rb = b.sync_pull(relationship_id)
        if ra.cards_updated == 0 and rb.cards_updated == 0:
            calm += 1
            if calm == 2:
                return rounds
        else:
            calm = 0
    raise AssertionError(f"no quiescence within {max_rounds} rounds")

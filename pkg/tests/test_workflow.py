"""Process definition, knowledge attachment, and the flow report."""

from __future__ import annotations

import pytest

from conftest import REL_M_C, REL_M_FB
from knowmesh.errors import (
    DuplicateAssociation,
    EmptyProcess,
    NotVisibleToOwner,
    OwnerNotMember,
    UnknownActivity,
    UnknownProcess,
    UnknownRelationship,
    UnknownPartner,
)

STOOL_CHAIN = [
    ("wood supply", "fb", None),
    ("seat production", "fb", None),
    ("varnishing", "fb", REL_M_FB),
    ("stool assembly", "mirima", REL_M_FB),
    ("distribution", "chanel", REL_M_C),
]


@pytest.fixture
def chain(node):
    return node, node.define_process("stool production", STOOL_CHAIN)


def test_define_process_chain(chain):
    node, process = chain
    assert [a.name for a in process.activities] == [s[0] for s in STOOL_CHAIN]
    assert process.activities[3].owner == "mirima"
    assert process.activities[3].upstream_relationship == REL_M_FB


def test_empty_process(node):
    with pytest.raises(EmptyProcess):
        node.define_process("empty", [])


def test_unknown_owner(node):
    with pytest.raises(UnknownPartner):
        node.define_process("p", [("a", "ghost", None)])


def test_unknown_relationship(node):
    with pytest.raises(UnknownRelationship):
        node.define_process("p", [("a", "mirima", "missing-rel")])


def test_owner_not_member(node):
    with pytest.raises(OwnerNotMember):
        node.define_process("p", [("distribution", "chanel", REL_M_FB)])


def test_attach_knowledge(chain):
    node, process = chain
    card = node.create_card("M. Production process", "mirima",
                            ("Partner", "Experience", "Explicit"), body="steps")
    assembly = process.activities[3]
    association = node.attach_knowledge(assembly.activity_id, card.card_id, "context for assembly")
    assert association.card_id == card.card_id
    report = node.flow_report(process.process_id)
    row = next(r for r in report.activities if r["activity_id"] == assembly.activity_id)
    assert row["cards"] == [card.card_id]


def test_attach_requires_visibility(chain):
    node, process = chain
    # card owned by mirima, never granted: invisible to activity owner fb
    card = node.create_card("Private", "mirima", ("Organisation", "Methodology", "Explicit"), body="x")
    wood = process.activities[0]
    with pytest.raises(NotVisibleToOwner):
        node.attach_knowledge(wood.activity_id, card.card_id, "nope")


def test_attach_twice(chain):
    node, process = chain
    card = node.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
    assembly = process.activities[3]
    node.attach_knowledge(assembly.activity_id, card.card_id, "once")
    with pytest.raises(DuplicateAssociation):
        node.attach_knowledge(assembly.activity_id, card.card_id, "twice")


def test_attach_unknown_activity(chain):
    node, _ = chain
    card = node.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
    with pytest.raises(UnknownActivity):
        node.attach_knowledge("missing", card.card_id, "x")


class TestFlowReport:
    def test_unknown_process(self, node):
        with pytest.raises(UnknownProcess):
            node.flow_report("missing")

    def test_no_associations_coverage_zero(self, chain):
        node, process = chain
        assert node.flow_report(process.process_id).coverage == 0.0

    def test_full_coverage(self, chain):
        node, process = chain
        shared = node.create_card("Shared", "mirima", ("Partner", "Experience", "Explicit"), body="s")
        node.grant_share(shared.card_id, REL_M_FB)
        node.grant_share(shared.card_id, REL_M_C)
        for activity in process.activities:
            node.attach_knowledge(activity.activity_id, shared.card_id, "ctx")
        assert node.flow_report(process.process_id).coverage == 1.0

    def test_partial_coverage_matches_count_oracle(self, chain):
        node, process = chain
        card = node.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
        node.grant_share(card.card_id, REL_M_FB)
        attached_to = process.activities[2:4]  # varnishing (fb), assembly (mirima)
        for activity in attached_to:
            node.attach_knowledge(activity.activity_id, card.card_id, "ctx")
        report = node.flow_report(process.process_id)
        expected = sum(
            1 for row in report.activities if row["cards"]
        ) / len(process.activities)
        assert expected == 2 / 5
        assert report.coverage == pytest.approx(0.4)

    def test_per_relationship_exchange_lists(self, chain):
        node, process = chain
        granted = node.create_card("On M-FB", "mirima", ("Partner", "Experience", "Explicit"), body="g")
        node.grant_share(granted.card_id, REL_M_FB)
        ungranted = node.create_card("Nowhere", "mirima", ("Partner", "Experience", "Explicit"), body="u")
        report = node.flow_report(process.process_id)
        by_rel = {row["relationship_id"]: row["cards"] for row in report.relationships}
        assert by_rel[REL_M_FB] == [granted.card_id]
        assert by_rel[REL_M_C] == []
        assert ungranted.card_id not in by_rel[REL_M_FB]
        # report consistency: every listed card has an active grant right now
        for rel_id, cards in by_rel.items():
            active = {g.card_id for g in node.list_grants()
                      if g.relationship_id == rel_id and not g.revoked}
            assert set(cards) <= active

    def test_revoked_cards_leave_exchange_list(self, chain):
        node, process = chain
        card = node.create_card("Revocable", "mirima", ("Partner", "Experience", "Explicit"), body="r")
        grant = node.grant_share(card.card_id, REL_M_FB)
        node.revoke_share(grant.grant_id)
        report = node.flow_report(process.process_id)
        by_rel = {row["relationship_id"]: row["cards"] for row in report.relationships}
        assert card.card_id not in by_rel[REL_M_FB]

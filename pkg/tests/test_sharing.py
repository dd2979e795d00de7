"""Relationship-scoped sharing and pull replication."""

from __future__ import annotations

import itertools

import pytest

from conftest import REL_M_C, REL_M_FB, quiesce, register_cluster
from knowmesh import Node
from knowmesh.errors import (
    AlreadyGranted,
    AlreadyRevoked,
    NotGranter,
    NotMember,
    NotOrigin,
    PeerUnreachable,
    RelationshipClosed,
    RelationshipNotCollaborating,
    UnknownPartner,
)


def shared_card(m: Node, relationship=REL_M_FB, title="M. Production process"):
    card = m.create_card(title, "mirima", ("Partner", "Experience", "Explicit"),
                         body="varnishing then assembly")
    grant = m.grant_share(card.card_id, relationship)
    return card, grant


class TestGrantShare:
    def test_grant_on_collaborating(self, trio):
        m, fb, c = trio
        card, grant = shared_card(m)
        assert grant.revoked is False
        assert grant.granted_by == "mirima"

    def test_grant_needs_collaborating_state(self):
        m = Node("mirima")
        register_cluster(m, relationships=())
        m.propose_relationship("mirima", "fb", relationship_id="rel-x")
        m.define_collaboration("rel-x", ["goal"])
        card = m.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
        with pytest.raises(RelationshipNotCollaborating):
            m.grant_share(card.card_id, "rel-x")

    def test_only_origin_may_grant(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        fb.sync_pull(REL_M_FB)
        with pytest.raises(NotOrigin):
            fb.grant_share(card.card_id, REL_M_FB, granted_by="fb")

    def test_non_member_cannot_grant(self, trio):
        m, fb, c = trio
        card = m.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
        with pytest.raises(NotMember):
            m.grant_share(card.card_id, REL_M_FB, granted_by="chanel")

    def test_double_grant_rejected(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        with pytest.raises(AlreadyGranted):
            m.grant_share(card.card_id, REL_M_FB)

    def test_regrant_after_revoke(self, trio):
        m, fb, c = trio
        card, grant = shared_card(m)
        m.revoke_share(grant.grant_id)
        again = m.grant_share(card.card_id, REL_M_FB)
        assert again.grant_id != grant.grant_id


class TestRevokeShare:
    def test_revoke_stops_future_revisions(self, trio):
        m, fb, c = trio
        card, grant = shared_card(m)
        fb.sync_pull(REL_M_FB)
        assert card.card_id in fb.visible_cards("fb")
        m.revoke_share(grant.grant_id)
        m.revise_card(card.card_id, "mirima", "secret v2",
                      [m.current_revision(card.card_id).revision_id])
        report = fb.sync_pull(REL_M_FB)
        assert report.revisions_added == 0
        # already-delivered revisions stay
        assert card.card_id in fb.visible_cards("fb")
        assert len(fb.card_history(card.card_id)) == 1

    def test_only_granter_revokes(self, trio):
        m, fb, c = trio
        _, grant = shared_card(m)
        with pytest.raises(NotGranter):
            m.revoke_share(grant.grant_id, by="fb")

    def test_double_revoke(self, trio):
        m, fb, c = trio
        _, grant = shared_card(m)
        m.revoke_share(grant.grant_id)
        with pytest.raises(AlreadyRevoked):
            m.revoke_share(grant.grant_id)


class TestVisibleCards:
    def test_fresh_node_sees_only_its_own(self, trio):
        m, fb, c = trio
        card = fb.create_card("Seat wood", "fb", ("Partner", "Experience", "Explicit"), body="oak")
        assert fb.visible_cards("fb") == [card.card_id]

    def test_granted_and_pulled_card_visible(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        fb.sync_pull(REL_M_FB)
        assert card.card_id in fb.visible_cards("fb")

    def test_unknown_partner(self, trio):
        m, _, _ = trio
        with pytest.raises(UnknownPartner):
            m.visible_cards("ghost")

    def test_three_node_visibility_oracle(self, trio):
        """Exhaustive check of the trio fixture against the visibility rule."""
        m, fb, c = trio
        production, _ = shared_card(m)                       # granted on M-FB
        behaviour, _ = shared_card(m, REL_M_C, "A customer past behaviour")
        private = m.create_card("Concurrent strategy", "mirima",
                                ("Organisation", "Methodology", "Explicit"), body="hush")
        fb.sync_pull(REL_M_FB)
        c.sync_pull(REL_M_C)

        membership = {"mirima": {REL_M_FB, REL_M_C}, "fb": {REL_M_FB}, "chanel": {REL_M_C}}
        grants = {production.card_id: REL_M_FB, behaviour.card_id: REL_M_C}

        def oracle(node, partner):
            expected = set()
            for cid in (production.card_id, behaviour.card_id, private.card_id):
                if not node.card_exists(cid):
                    continue
                origin_is_partner = partner == "mirima"
                granted_to_partner = cid in grants and grants[cid] in membership[partner]
                if origin_is_partner or granted_to_partner:
                    expected.add(cid)
            return expected

        for node in trio:
            for partner in ("mirima", "fb", "chanel"):
                assert set(node.visible_cards(partner)) == oracle(node, partner), (
                    node.partner_id, partner,
                )
        # the M-FB card never reaches C in any view
        assert production.card_id not in c.visible_cards("chanel")
        assert production.card_id not in m.visible_cards("chanel")

    def test_facilitator_read_access_flag(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        assert card.card_id not in m.visible_cards("uni")
        m.assign_facilitator(REL_M_FB, "uni")
        assert card.card_id in m.visible_cards("uni")

        blind = register_cluster(Node("mirima", facilitator_read_access=False))
        blind.assign_facilitator(REL_M_FB, "uni")
        refcard = blind.create_card("X", "mirima", ("Partner", "Experience", "Explicit"), body="x")
        blind.grant_share(refcard.card_id, REL_M_FB)
        assert refcard.card_id not in blind.visible_cards("uni")


class TestChangesSince:
    def test_fixpoint_watermark_yields_empty(self, trio):
        m, fb, c = trio
        shared_card(m)
        fb.sync_pull(REL_M_FB)
        watermark = fb.watermark(REL_M_FB)
        changes = m.changes_since(REL_M_FB, "fb", watermark)
        assert changes.is_empty()

    def test_empty_watermark_delivers_root(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        changes = m.changes_since(REL_M_FB, "fb", {"relationship_id": REL_M_FB, "cards": {}})
        assert len(changes.entries) == 1
        entry = changes.entries[0]
        assert entry["card"]["card_id"] == card.card_id
        assert [r["parent_ids"] for r in entry["revisions"]] == [[]]

    def test_revoked_card_excluded_matches_grant_oracle(self, trio):
        m, fb, c = trio
        card, grant = shared_card(m)
        keep, _ = shared_card(m, title="Stock management method adopted")
        m.revoke_share(grant.grant_id)
        m.revise_card(card.card_id, "mirima", "post-revoke edit",
                      [m.current_revision(card.card_id).revision_id])

        # Oracle: recompute the granted set by filtering grants on revoked=False.
        active = {g.card_id for g in m.list_grants()
                  if g.relationship_id == REL_M_FB and not g.revoked}
        assert active == {keep.card_id}

        changes = m.changes_since(REL_M_FB, "fb", {"relationship_id": REL_M_FB, "cards": {}})
        delivered = {e["card"]["card_id"] for e in changes.entries}
        assert delivered == active

    def test_non_member_rejected(self, trio):
        m, fb, c = trio
        with pytest.raises(NotMember):
            m.changes_since(REL_M_FB, "chanel", {"relationship_id": REL_M_FB, "cards": {}})

    def test_closed_relationship_rejected(self, trio):
        m, fb, c = trio
        m.close_relationship(REL_M_FB)
        with pytest.raises(RelationshipClosed):
            m.changes_since(REL_M_FB, "fb", {"relationship_id": REL_M_FB, "cards": {}})

    def test_parents_before_children(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        for i in range(4):
            m.revise_card(card.card_id, "mirima", f"v{i}",
                          [m.current_revision(card.card_id).revision_id])
        changes = m.changes_since(REL_M_FB, "fb", {"relationship_id": REL_M_FB, "cards": {}})
        seen = set()
        for raw in changes.entries[0]["revisions"]:
            assert all(p in seen for p in raw["parent_ids"])
            seen.add(raw["revision_id"])


class TestSyncPull:
    def test_first_pull_delivers(self, trio):
        m, fb, c = trio
        shared_card(m)
        report = fb.sync_pull(REL_M_FB)
        assert report.revisions_added == 1
        assert report.cards_updated == 1

    def test_second_pull_zero(self, trio):
        m, fb, c = trio
        shared_card(m)
        fb.sync_pull(REL_M_FB)
        report = fb.sync_pull(REL_M_FB)
        assert report == type(report)(0, 0)

    def test_pull_requires_peer(self, trio):
        m, fb, c = trio
        fresh = register_cluster(Node("fb"))
        with pytest.raises(PeerUnreachable):
            fresh.sync_pull(REL_M_FB)

    def test_pull_requires_membership(self, trio):
        m, fb, c = trio
        with pytest.raises(NotMember):
            m.sync_pull(REL_M_FB, as_partner="chanel")

    def test_bidirectional_edit_flow(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        fb.sync_pull(REL_M_FB)
        fb.revise_card(card.card_id, "fb", "peer edit",
                       [fb.current_revision(card.card_id).revision_id])
        report = m.sync_pull(REL_M_FB)
        assert report.revisions_added == 1
        assert m.current_revision(card.card_id).author == "fb"

    def test_comments_and_classifications_replicate(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        fb.sync_pull(REL_M_FB)
        m.add_comment(card.card_id, "mirima", "first comment")
        m.classify_card(card.card_id, ("Partner", "Methodology", "Explicit"))
        fb.sync_pull(REL_M_FB)
        assert [cm.text for cm in fb.get_card(card.card_id).comments] == ["first comment"]
        assert fb.get_card(card.card_id).coordinate.nature.value == "Methodology"

    def test_links_between_shared_cards_replicate(self, trio):
        m, fb, c = trio
        one, _ = shared_card(m, title="seat production")
        two, _ = shared_card(m, title="M. Production process")
        m.add_link(one.card_id, two.card_id, "PartOf")
        fb.sync_pull(REL_M_FB)
        assert [l.triple for l in fb.links_of(one.card_id)] == [
            (one.card_id, two.card_id, "PartOf")
        ]

    def test_concurrent_edit_interleavings_converge(self, trio):
        """Oracle: replay every interleaving of (M edits, FB edits, FB pulls,
        M pulls) that keeps each actor's own order, then assert both nodes
        hold the identical 3-revision DAG and render the same head."""
        actions = ["m_edit", "fb_edit", "fb_pull", "m_pull"]
        orders = {
            perm for perm in itertools.permutations(actions)
            if perm.index("m_edit") < perm.index("m_pull")
            and perm.index("fb_edit") < perm.index("fb_pull")
        }
        for order in sorted(orders):
            m = register_cluster(Node("mirima"))
            fb = register_cluster(Node("fb"))
            m.connect(REL_M_FB, fb)
            card, _ = shared_card(m)
            fb.sync_pull(REL_M_FB)
            root = card.revisions[0].revision_id
            for step in order:
                if step == "m_edit":
                    m.revise_card(card.card_id, "mirima", "m branch", [root])
                elif step == "fb_edit":
                    fb.revise_card(card.card_id, "fb", "fb branch", [root])
                elif step == "fb_pull":
                    fb.sync_pull(REL_M_FB)
                else:
                    m.sync_pull(REL_M_FB)
            quiesce(m, fb, REL_M_FB)
            m_dag = {r.revision_id: r for r in m.card_history(card.card_id)}
            fb_dag = {r.revision_id: r for r in fb.card_history(card.card_id)}
            assert m_dag == fb_dag, order
            assert len(m_dag) == 3
            assert len(m.card_heads(card.card_id)) == 2
            assert m.current_revision(card.card_id) == fb.current_revision(card.card_id)

    def test_scoped_to_relationship(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)          # only on M-FB
        report = c.sync_pull(REL_M_C)
        assert report.revisions_added == 0
        assert not c.card_exists(card.card_id)

    def test_replication_is_monotone_after_close(self, trio):
        m, fb, c = trio
        card, _ = shared_card(m)
        fb.sync_pull(REL_M_FB)
        m.close_relationship(REL_M_FB)
        fb.close_relationship(REL_M_FB)
        assert fb.card_exists(card.card_id)
        with pytest.raises(RelationshipNotCollaborating):
            fb.sync_pull(REL_M_FB)

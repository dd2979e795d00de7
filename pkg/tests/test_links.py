"""Typed link graph: duplicates, self-links, and hierarchy acyclicity checked
against an independent DFS oracle."""

from __future__ import annotations

import itertools

import pytest

from knowmesh import LinkType, Node
from knowmesh.errors import DuplicateLink, HierarchyCycle, SelfLink, UnknownCard, UnknownLink

HIERARCHICAL = ("IsA", "KindOf", "PartOf")


def dfs_has_cycle(edges):
    """Oracle: plain recursive three-colour DFS over (source, target) pairs."""
    graph = {}
    for source, target in edges:
        graph.setdefault(source, []).append(target)
        graph.setdefault(target, [])
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {v: WHITE for v in graph}

    def visit(v):
        colour[v] = GREY
        for w in graph[v]:
            if colour[w] == GREY:
                return True
            if colour[w] == WHITE and visit(w):
                return True
        colour[v] = BLACK
        return False

    return any(colour[v] == WHITE and visit(v) for v in graph)


@pytest.fixture
def cards(node):
    ids = {}
    for name in ("seat production", "M. Production process", "varnishing"):
        card = node.create_card(name, "mirima", ("Partner", "Experience", "Explicit"), body=name)
        ids[name] = card.card_id
    return node, ids


def test_part_of_link(cards):
    node, ids = cards
    link = node.add_link(ids["seat production"], ids["M. Production process"], "PartOf")
    assert link.link_type == LinkType.PART_OF
    assert link in node.links_of(ids["seat production"])
    assert link in node.links_of(ids["M. Production process"])


def test_self_link(cards):
    node, ids = cards
    with pytest.raises(SelfLink):
        node.add_link(ids["varnishing"], ids["varnishing"], "Association")


def test_duplicate_link(cards):
    node, ids = cards
    node.add_link(ids["seat production"], ids["varnishing"], "Association")
    with pytest.raises(DuplicateLink):
        node.add_link(ids["seat production"], ids["varnishing"], "Association")


def test_unknown_card(cards):
    node, ids = cards
    with pytest.raises(UnknownCard):
        node.add_link(ids["varnishing"], "missing", "IsA")


def test_mixed_type_cycle_rejected(cards):
    node, ids = cards
    a, b, c = ids["seat production"], ids["M. Production process"], ids["varnishing"]
    node.add_link(a, b, "IsA")
    node.add_link(b, c, "PartOf")
    with pytest.raises(HierarchyCycle):
        node.add_link(c, a, "KindOf")


def test_association_never_blocks(cards):
    node, ids = cards
    a, b = ids["seat production"], ids["varnishing"]
    node.add_link(a, b, "IsA")
    node.add_link(b, a, "Association")  # association edges are outside the hierarchy


def test_remove_link(cards):
    node, ids = cards
    a, b = ids["seat production"], ids["varnishing"]
    node.add_link(a, b, "Association")
    node.remove_link(a, b, "Association")
    assert node.links_of(a) == ()
    with pytest.raises(UnknownLink):
        node.remove_link(a, b, "Association")


def test_remove_keeps_other_edges(cards):
    node, ids = cards
    a, b, c = ids.values()
    node.add_link(a, b, "PartOf")
    node.add_link(b, c, "PartOf")
    node.remove_link(a, b, "PartOf")
    assert [l.triple for l in node.all_links()] == [(b, c, "PartOf")]


def test_removal_reopens_hierarchy(cards):
    node, ids = cards
    a, b, c = ids.values()
    node.add_link(a, b, "IsA")
    node.add_link(b, c, "IsA")
    with pytest.raises(HierarchyCycle):
        node.add_link(c, a, "IsA")
    node.remove_link(a, b, "IsA")
    node.add_link(c, a, "IsA")  # chain c -> a, b -> c stays acyclic


def test_exhaustive_three_cards_vs_dfs_oracle(node):
    """Every <=3-edge combination over 3 cards: acceptance matches the oracle."""
    names = ["A", "B", "C"]
    possible = [
        (s, t, lt)
        for s, t in itertools.permutations(names, 2)
        for lt in HIERARCHICAL
    ]
    combos = [
        combo
        for size in range(0, 4)
        for combo in itertools.combinations(possible, size)
    ]
    assert len(combos) == 1 + 18 + 153 + 816

    for combo in combos:
        fresh = Node("probe")
        ids = {
            name: fresh.create_card(name, "probe", ("Partner", "Concept", "Explicit"), body=name).card_id
            for name in names
        }
        accepted_edges = []
        for s, t, lt in combo:
            should_cycle = dfs_has_cycle(accepted_edges + [(s, t)])
            if should_cycle:
                with pytest.raises(HierarchyCycle):
                    fresh.add_link(ids[s], ids[t], lt)
            else:
                fresh.add_link(ids[s], ids[t], lt)
                accepted_edges.append((s, t))

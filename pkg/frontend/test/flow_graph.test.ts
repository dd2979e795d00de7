// Flow view and link graph rendering.

import { describe, expect, it } from "vitest";
import { renderFlow, titleIndex } from "../src/flow.js";
import { buildGraph, renderGraph } from "../src/graph.js";
import type { Card, FlowReport, WorkProcess } from "../src/types.js";

function card(id: string, title: string, links: Card["links"] = []): Card {
  const root = { revision_id: `r-${id}`, parent_ids: [], author: "m", lamport: 1, body: "x" };
  return {
    card_id: id, title, author: "m", origin_node: "m",
    coordinate: { perspective: "Partner", nature: "Experience", form: "Explicit" },
    revisions: [root], comments: [], expert_refs: [], document_refs: [],
    created_at: 1, current_revision: root, heads: [root.revision_id], links, classifications: [],
  };
}

const process: WorkProcess = {
  process_id: "p1",
  name: "stool production",
  activities: [
    { activity_id: "a1", name: "varnishing", owner: "fb", upstream_relationship: "rel-m-fb" },
    { activity_id: "a2", name: "stool assembly", owner: "mirima", upstream_relationship: "rel-m-fb" },
  ],
};

const report: FlowReport = {
  process_id: "p1",
  activities: [
    { activity_id: "a1", name: "varnishing", owner: "fb", upstream_relationship: "rel-m-fb", cards: ["c1"] },
    { activity_id: "a2", name: "stool assembly", owner: "mirima", upstream_relationship: "rel-m-fb", cards: [] },
  ],
  relationships: [{ relationship_id: "rel-m-fb", cards: ["c1"] }],
  coverage: 0.5,
};

describe("renderFlow", () => {
  it("shows activities, attachments, exchanges and coverage", () => {
    const html = renderFlow(process, report, titleIndex([card("c1", "M. Production process")]));
    expect(html).toContain("Coverage: 50%");
    expect(html).toContain("varnishing");
    expect(html).toContain("M. Production process");
    expect(html).toContain("no knowledge attached");
    expect(html).toContain("rel-m-fb");
  });
});

describe("buildGraph", () => {
  const cards = [
    card("c1", "seat production", [{ source: "c1", target: "c2", link_type: "PartOf" }]),
    card("c2", "M. Production process", [{ source: "c1", target: "c2", link_type: "PartOf" }]),
  ];

  it("positions every card and deduplicates edges seen from both endpoints", () => {
    const model = buildGraph(cards);
    expect(model.nodes.length).toBe(2);
    expect(model.edges.length).toBe(1);
    expect(model.edges[0]!.link_type).toBe("PartOf");
  });

  it("styles edges by link type and labels nodes", () => {
    const svg = renderGraph(cards);
    expect(svg).toContain("edge-partof");
    expect(svg).toContain("seat producti…");  // long titles get ellipsized
  });
});

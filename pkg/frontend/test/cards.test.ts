// Card page rendering: the four sections appear in their fixed order, the
// history tab lists every revision, and concurrent heads raise the merge
// banner with a merge action.

import { describe, expect, it } from "vitest";
import { cardSections, hasConcurrentHeads, renderCardPage } from "../src/cards.js";
import type { Card } from "../src/types.js";

function fixtureCard(overrides: Partial<Card> = {}): Card {
  const root = {
    revision_id: "r-root", parent_ids: [], author: "mirima", lamport: 1,
    body: "varnishing in the FB unit, then assembly",
  };
  const edit = {
    revision_id: "r-edit", parent_ids: ["r-root"], author: "fb", lamport: 2,
    body: "varnishing: two coats before assembly",
  };
  return {
    card_id: "card-1",
    title: "M. Production process",
    author: "mirima",
    origin_node: "mirima",
    coordinate: { perspective: "Partner", nature: "Experience", form: "Explicit" },
    revisions: [root, edit],
    comments: [
      { comment_id: "c1", author: "fb", text: "suggestion about the form of the seat",
        at_revision: "r-edit", lamport: 3 },
    ],
    expert_refs: [{ name: "A. Varnisher", organisation: "FB", contact: "workshop 2" }],
    document_refs: [{ label: "spec sheet", locator: "file://sheet.pdf" }],
    created_at: 1,
    current_revision: edit,
    heads: ["r-edit"],
    links: [{ source: "card-1", target: "card-2", link_type: "PartOf" }],
    classifications: [],
    ...overrides,
  };
}

describe("cardSections", () => {
  it("collects the four sections from the card resource", () => {
    const sections = cardSections(fixtureCard());
    expect(sections.header.title).toBe("M. Production process");
    expect(sections.header.classification).toBe("Partner / Experience / Explicit");
    expect(sections.body).toContain("two coats");
    expect(sections.references.links).toEqual(["PartOf → card-2"]);
    expect(sections.references.documents).toEqual(["spec sheet: file://sheet.pdf"]);
    expect(sections.references.experts[0]).toContain("A. Varnisher");
    expect(sections.comments).toEqual([
      { author: "fb", text: "suggestion about the form of the seat" },
    ]);
  });
});

describe("renderCardPage", () => {
  it("renders the four sections in order", () => {
    const html = renderCardPage(fixtureCard());
    const order = [
      'data-test="section-header"',
      'data-test="section-body"',
      'data-test="section-references"',
      'data-test="section-comments"',
    ].map((marker) => html.indexOf(marker));
    expect(order.every((i) => i >= 0)).toBe(true);
    expect([...order].sort((a, b) => a - b)).toEqual(order);
  });

  it("shows the current body and the history tab with all revisions", () => {
    const html = renderCardPage(fixtureCard());
    expect(html).toContain("two coats");
    expect(html).toContain('data-test="history-tab"');
    expect(html).toContain("2 revisions");
    expect(html).toContain("r-root".slice(0, 10));
  });

  it("renders an empty comment section with an add control", () => {
    const html = renderCardPage(fixtureCard({ comments: [] }));
    expect(html).toContain('data-test="section-comments"');
    expect(html).toContain('data-action="comment"');
  });

  it("raises the merge banner only on concurrent heads", () => {
    const single = fixtureCard();
    expect(hasConcurrentHeads(single)).toBe(false);
    expect(renderCardPage(single)).not.toContain('data-test="merge-banner"');

    const forked = fixtureCard({
      heads: ["r-a", "r-b"],
      revisions: [
        { revision_id: "r-root", parent_ids: [], author: "m", lamport: 1, body: "v0" },
        { revision_id: "r-a", parent_ids: ["r-root"], author: "mirima", lamport: 2, body: "a" },
        { revision_id: "r-b", parent_ids: ["r-root"], author: "fb", lamport: 2, body: "b" },
      ],
    });
    const html = renderCardPage(forked);
    expect(hasConcurrentHeads(forked)).toBe(true);
    expect(html).toContain('data-test="merge-banner"');
    expect(html).toContain('data-action="merge-heads"');
    expect(html).toContain("2 heads");
  });

  it("escapes hostile card content", () => {
    const html = renderCardPage(
      fixtureCard({ title: "<script>alert(1)</script>" }),
    );
    expect(html).not.toContain("<script>alert(1)</script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

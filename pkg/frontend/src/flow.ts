// Process flow view: the activity chain with attached knowledge, exchanged
// cards per relationship, and the coverage figure.

import { attr, esc } from "./html.js";
import type { Card, FlowReport, WorkProcess } from "./types.js";

export function renderFlow(
  process: WorkProcess,
  report: FlowReport,
  cardTitles: Map<string, string>,
): string {
  const steps = report.activities
    .map(
      (row) => `<li class="activity">
      <header>
        <strong>${esc(row.name)}</strong>
        <span class="owner">${esc(row.owner)}</span>
        ${row.upstream_relationship ? `<span class="via">via ${esc(row.upstream_relationship)}</span>` : ""}
      </header>
      <ul class="attached">
        ${row.cards
          .map(
            (cid) =>
              `<li><a href=${attr(`#/cards/${cid}`)}>${esc(cardTitles.get(cid) ?? cid)}</a></li>`,
          )
          .join("") || "<li class=\"empty\">no knowledge attached</li>"}
      </ul>
    </li>`,
    )
    .join("<li class=\"arrow\">→</li>");
  const exchanges = report.relationships
    .map(
      (row) => `<li><strong>${esc(row.relationship_id)}</strong>:
        ${row.cards.map((cid) => esc(cardTitles.get(cid) ?? cid)).join(", ") || "nothing exchanged"}</li>`,
    )
    .join("");
  const percent = Math.round(report.coverage * 100);
  return `<section class="flow" data-process=${attr(process.process_id)}>
  <h2>${esc(process.name)}</h2>
  <p data-test="coverage">Coverage: ${percent}% of activities have knowledge attached.</p>
  <ol class="chain">${steps}</ol>
  <h3>Exchanged along relationships</h3>
  <ul class="exchanges">${exchanges}</ul>
</section>`;
}

export function titleIndex(cards: Card[]): Map<string, string> {
  return new Map(cards.map((c) => [c.card_id, c.title]));
}

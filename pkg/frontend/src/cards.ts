// Card page: the four sections in their fixed order (header, body,
// references, comments), a history tab, and a merge banner when the revision
// DAG has concurrent heads.

import { attr, esc, when } from "./html.js";
import type { Card, Revision } from "./types.js";

export interface CardSections {
  header: { title: string; author: string; origin: string; classification: string; created: number };
  body: string;
  references: { links: string[]; documents: string[]; experts: string[] };
  comments: { author: string; text: string }[];
}

export function cardSections(card: Card): CardSections {
  const c = card.coordinate;
  return {
    header: {
      title: card.title,
      author: card.author,
      origin: card.origin_node,
      classification: `${c.perspective} / ${c.nature} / ${c.form}`,
      created: card.created_at,
    },
    body: card.current_revision.body,
    references: {
      links: card.links
        .filter((l) => l.source === card.card_id)
        .map((l) => `${l.link_type} → ${l.target}`),
      documents: card.document_refs.map((d) => `${d.label}: ${d.locator}`),
      experts: card.expert_refs.map((e) => `${e.name} (${e.organisation}) — ${e.contact}`),
    },
    comments: card.comments.map((m) => ({ author: m.author, text: m.text })),
  };
}

export function hasConcurrentHeads(card: Card): boolean {
  return card.heads.length > 1;
}

function renderHistory(revisions: Revision[]): string {
  const rows = revisions
    .map(
      (r) => `<tr>
        <td><code>${esc(r.revision_id.slice(0, 10))}</code></td>
        <td>${esc(r.author)}</td>
        <td>${esc(r.lamport)}</td>
        <td>${r.parent_ids.map((p) => `<code>${esc(p.slice(0, 10))}</code>`).join(", ") || "—"}</td>
      </tr>`,
    )
    .join("");
  return `<table class="history"><thead>
    <tr><th>revision</th><th>author</th><th>clock</th><th>parents</th></tr>
  </thead><tbody>${rows}</tbody></table>`;
}

export function renderCardPage(card: Card): string {
  const sections = cardSections(card);
  const mergeBanner = when(
    hasConcurrentHeads(card),
    `<div class="banner warning" data-test="merge-banner">
      Concurrent edits: this card has ${card.heads.length} heads.
      <button data-action="merge-heads" data-card=${attr(card.card_id)}>Merge heads</button>
    </div>`,
  );
  const references = sections.references;
  return `<article class="card-page" data-card=${attr(card.card_id)}>
  ${mergeBanner}
  <section class="card-header" data-test="section-header">
    <h2>${esc(sections.header.title)}</h2>
    <dl>
      <dt>Author</dt><dd>${esc(sections.header.author)}</dd>
      <dt>Origin node</dt><dd>${esc(sections.header.origin)}</dd>
      <dt>Classification</dt><dd>${esc(sections.header.classification)}</dd>
      <dt>Created</dt><dd>clock ${esc(sections.header.created)}</dd>
    </dl>
  </section>
  <section class="card-body" data-test="section-body">
    <h3>Body</h3>
    <pre class="body-text">${esc(sections.body)}</pre>
    <form data-action="edit" data-card=${attr(card.card_id)}>
      <input name="author" placeholder="author" required>
      <textarea name="body" placeholder="new body" required></textarea>
      <button type="submit">Save revision</button>
    </form>
  </section>
  <section class="card-references" data-test="section-references">
    <h3>References</h3>
    <ul>
      ${references.links.map((l) => `<li class="ref-link">${esc(l)}</li>`).join("")}
      ${references.documents.map((d) => `<li class="ref-doc">${esc(d)}</li>`).join("")}
      ${references.experts.map((e) => `<li class="ref-expert">${esc(e)}</li>`).join("")}
    </ul>
    <form data-action="link" data-card=${attr(card.card_id)}>
      <input name="target" placeholder="target card id" required>
      <select name="link_type">
        <option>IsA</option><option>KindOf</option><option>PartOf</option><option>Association</option>
      </select>
      <button type="submit">Add link</button>
    </form>
  </section>
  <section class="card-comments" data-test="section-comments">
    <h3>Comments</h3>
    <ul>
      ${sections.comments
        .map((m) => `<li><strong>${esc(m.author)}</strong>: ${esc(m.text)}</li>`)
        .join("")}
    </ul>
    <form data-action="comment" data-card=${attr(card.card_id)}>
      <input name="author" placeholder="author" required>
      <input name="text" placeholder="add a comment" required>
      <button type="submit">Comment</button>
    </form>
  </section>
  <details class="history-tab" data-test="history-tab">
    <summary>History (${card.revisions.length} revisions)</summary>
    ${renderHistory(card.revisions)}
  </details>
  <section class="card-classify">
    <h3>Reclassify</h3>
    <form data-action="classify" data-card=${attr(card.card_id)}>
      <select name="perspective">
        <option>Organisation</option><option>Partner</option><option>Environment</option>
      </select>
      <select name="nature">
        <option>Experience</option><option>Concept</option><option>Expectation</option><option>Methodology</option>
      </select>
      <select name="form"><option>Explicit</option><option>Tacit</option></select>
      <button type="submit">Classify</button>
    </form>
  </section>
</article>`;
}

// Cube browser: 24-cell count matrix plus the filtered card list. Counts are
// derived from the node's card list exactly the way the server filters, so a
// cell count always equals the /cube result for that full triple.

import { attr, esc } from "./html.js";
import type { Card } from "./types.js";

export const PERSPECTIVES = ["Organisation", "Partner", "Environment"] as const;
export const NATURES = ["Experience", "Concept", "Expectation", "Methodology"] as const;
export const FORMS = ["Explicit", "Tacit"] as const;

export interface CubeFilter {
  perspective?: string;
  nature?: string;
  form?: string;
  q?: string;
}

export interface CubeCell {
  perspective: string;
  nature: string;
  form: string;
  count: number;
}

export function matchesFilter(card: Card, filter: CubeFilter): boolean {
  const c = card.coordinate;
  if (filter.perspective && c.perspective !== filter.perspective) return false;
  if (filter.nature && c.nature !== filter.nature) return false;
  if (filter.form && c.form !== filter.form) return false;
  if (filter.q) {
    const needle = filter.q.toLowerCase();
    const haystack = `${card.title}\n${card.current_revision.body}`.toLowerCase();
    if (!haystack.includes(needle)) return false;
  }
  return true;
}

export function cubeGrid(cards: Card[]): CubeCell[] {
  const cells: CubeCell[] = [];
  for (const form of FORMS) {
    for (const nature of NATURES) {
      for (const perspective of PERSPECTIVES) {
        cells.push({
          perspective,
          nature,
          form,
          count: cards.filter((card) =>
            matchesFilter(card, { perspective, nature, form }),
          ).length,
        });
      }
    }
  }
  return cells;
}

export function totalCount(cells: CubeCell[]): number {
  return cells.reduce((sum, cell) => sum + cell.count, 0);
}

function renderGrid(cells: CubeCell[], form: string): string {
  const rows = NATURES.map((nature) => {
    const tds = PERSPECTIVES.map((perspective) => {
      const cell = cells.find(
        (c) => c.perspective === perspective && c.nature === nature && c.form === form,
      );
      const count = cell ? cell.count : 0;
      return `<td><button class="cell" data-action="cube-cell"
        data-perspective=${attr(perspective)} data-nature=${attr(nature)} data-form=${attr(form)}>
        ${count}</button></td>`;
    }).join("");
    return `<tr><th>${esc(nature)}</th>${tds}</tr>`;
  }).join("");
  return `<table class="cube-grid" data-form=${attr(form)}>
    <caption>${esc(form)} sub-cube</caption>
    <thead><tr><th></th>${PERSPECTIVES.map((p) => `<th>${esc(p)}</th>`).join("")}</tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderCubeBrowser(cards: Card[], filter: CubeFilter): string {
  const cells = cubeGrid(cards);
  const visible = cards.filter((card) => matchesFilter(card, filter));
  const active = Object.entries(filter)
    .filter(([, v]) => v)
    .map(([k, v]) => `${k}=${v}`)
    .join(", ");
  return `<div class="cube-browser">
  <form data-action="cube-filter" class="cube-filters">
    <select name="perspective"><option value="">any perspective</option>
      ${PERSPECTIVES.map((p) => `<option${filter.perspective === p ? " selected" : ""}>${p}</option>`).join("")}
    </select>
    <select name="nature"><option value="">any nature</option>
      ${NATURES.map((n) => `<option${filter.nature === n ? " selected" : ""}>${n}</option>`).join("")}
    </select>
    <select name="form"><option value="">any form</option>
      ${FORMS.map((f) => `<option${filter.form === f ? " selected" : ""}>${f}</option>`).join("")}
    </select>
    <input name="q" placeholder="text search" value=${attr(filter.q ?? "")}>
    <button type="submit">Filter</button>
  </form>
  ${renderGrid(cells, "Explicit")}
  ${renderGrid(cells, "Tacit")}
  <p data-test="cube-summary">${visible.length} of ${cards.length} cards${active ? ` (${esc(active)})` : ""}</p>
  <ul class="card-list">
    ${visible
      .map(
        (card) => `<li><a href=${attr(`#/cards/${card.card_id}`)}>${esc(card.title)}</a>
          <span class="coord">${esc(card.coordinate.perspective)}/${esc(card.coordinate.nature)}/${esc(card.coordinate.form)}</span></li>`,
      )
      .join("")}
  </ul>
</div>`;
}

// Relationship dashboard: lifecycle controls gated by the state machine
// mirror, grant toggles for the node's own cards, and the pull trigger with
// the last sync report. API errors surface verbatim in the banner.

import { transitionControls } from "./guards.js";
import { attr, esc, when } from "./html.js";
import type { Card, Relationship, ShareGrant, SyncReport } from "./types.js";

export interface DashboardData {
  relationship: Relationship;
  grants: ShareGrant[];
  ownCards: Card[];
  lastReport?: SyncReport | null;
  error?: string | null;
}

function button(action: string, rel: string, label: string, enabled: boolean): string {
  return `<button data-action=${attr(action)} data-rel=${attr(rel)}${enabled ? "" : " disabled"}>
    ${esc(label)}</button>`;
}

export function renderDashboard(data: DashboardData): string {
  const rel = data.relationship;
  const controls = transitionControls(rel.state);
  const activeGrants = new Map(
    data.grants
      .filter((g) => g.relationship_id === rel.relationship_id && !g.revoked)
      .map((g) => [g.card_id, g]),
  );
  const grantRows = data.ownCards
    .map((card) => {
      const grant = activeGrants.get(card.card_id);
      const toggle = grant
        ? `<button data-action="revoke" data-grant=${attr(grant.grant_id)}${controls.grant ? "" : " disabled"}>Revoke</button>`
        : `<button data-action="grant" data-card=${attr(card.card_id)} data-rel=${attr(rel.relationship_id)}${controls.grant ? "" : " disabled"}>Grant</button>`;
      return `<tr>
        <td>${esc(card.title)}</td>
        <td>${grant ? "shared" : "private"}</td>
        <td>${toggle}</td>
      </tr>`;
    })
    .join("");

  return `<section class="dashboard" data-rel=${attr(rel.relationship_id)}>
  ${when(data.error, `<div class="banner error" data-test="error-banner">${esc(data.error ?? "")}</div>`)}
  <h2>${esc(rel.members.join(" – "))}
    <span class="badge state-${esc(rel.state)}" data-test="state-badge">${esc(rel.state)}</span>
  </h2>
  <dl>
    <dt>Goals</dt><dd>${rel.goals.length ? rel.goals.map(esc).join("; ") : "—"}</dd>
    <dt>Scope</dt><dd>${esc(rel.scope || "—")}</dd>
    <dt>Facilitator</dt><dd>${esc(rel.facilitator ?? "—")}</dd>
  </dl>
  <div class="lifecycle" data-test="lifecycle-controls">
    <form data-action="define" data-rel=${attr(rel.relationship_id)} class="inline">
      <input name="goals" placeholder="goals (; separated)"${controls.define ? "" : " disabled"}>
      <input name="scope" placeholder="scope"${controls.define ? "" : " disabled"}>
      <button type="submit" data-action="define-submit"${controls.define ? "" : " disabled"}>Define</button>
    </form>
    ${button("collaborate", rel.relationship_id, "Collaborate", controls.collaborate)}
    ${button("close", rel.relationship_id, "Close", controls.close)}
  </div>
  <h3>Distribution control</h3>
  <table class="grants"><thead><tr><th>card</th><th>status</th><th></th></tr></thead>
    <tbody>${grantRows}</tbody></table>
  <div class="sync">
    ${button("pull", rel.relationship_id, "Pull now", controls.pull)}
    ${when(
      data.lastReport,
      `<span data-test="sync-report">last pull: ${esc(data.lastReport?.cards_updated ?? 0)} cards,
       ${esc(data.lastReport?.revisions_added ?? 0)} revisions</span>`,
    )}
  </div>
</section>`;
}

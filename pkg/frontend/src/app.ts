// Hash-routed single-page wiki over the node API. No client-side state
// survives a reload: every screen re-fetches what it shows, and every
// mutation refreshes the current screen.

import { api, ApiError } from "./api.js";
import { renderCardPage } from "./cards.js";
import { renderCubeBrowser, type CubeFilter } from "./cube.js";
import { renderDashboard } from "./dashboard.js";
import { renderFlow, titleIndex } from "./flow.js";
import { renderGraph } from "./graph.js";
import { attr, esc } from "./html.js";
import type { SyncReport } from "./types.js";

const main = () => document.getElementById("main") as HTMLElement;

let cubeFilter: CubeFilter = {};
const lastReports = new Map<string, SyncReport>();
let lastError: string | null = null;

function banner(error: unknown): string {
  const text = error instanceof ApiError ? `${error.code}: ${error.detail}` : String(error);
  return `<div class="banner error">${esc(text)}</div>`;
}

async function renderRoute(): Promise<void> {
  const hash = location.hash || "#/cube";
  try {
    if (hash.startsWith("#/cards/")) {
      const card = await api.getCard(decodeURIComponent(hash.slice("#/cards/".length)));
      main().innerHTML = renderCardPage(card);
    } else if (hash === "#/cards") {
      await renderNewCard();
    } else if (hash.startsWith("#/rels/")) {
      await renderRelationship(decodeURIComponent(hash.slice("#/rels/".length)));
    } else if (hash === "#/rels") {
      await renderRelationshipIndex();
    } else if (hash.startsWith("#/processes/")) {
      await renderProcess(decodeURIComponent(hash.slice("#/processes/".length)));
    } else if (hash === "#/processes") {
      await renderProcessIndex();
    } else if (hash === "#/graph") {
      const cards = await api.listCards();
      main().innerHTML = `<h2>Link graph</h2>${renderGraph(cards)}`;
    } else {
      const cards = await api.listCards();
      main().innerHTML = renderCubeBrowser(cards, cubeFilter);
    }
  } catch (error) {
    main().innerHTML = banner(error);
  }
  lastError = null;
}

async function renderNewCard(): Promise<void> {
  main().innerHTML = `<h2>New knowledge card</h2>
  <form data-action="create-card" class="stacked">
    <input name="title" placeholder="title" required>
    <input name="author" placeholder="author" required>
    <select name="perspective"><option>Organisation</option><option>Partner</option><option>Environment</option></select>
    <select name="nature"><option>Experience</option><option>Concept</option><option>Expectation</option><option>Methodology</option></select>
    <select name="form"><option>Explicit</option><option>Tacit</option></select>
    <textarea name="body" placeholder="body (explicit knowledge)"></textarea>
    <input name="expert" placeholder="expert: name|organisation|contact (tacit knowledge)">
    <input name="doc" placeholder="document: label|locator">
    <button type="submit">Create</button>
  </form>`;
}

async function renderRelationshipIndex(): Promise<void> {
  const rels = await api.listRelationships();
  main().innerHTML = `<h2>Relationships</h2>
  <ul class="rel-list">${rels
    .map(
      (rel) => `<li><a href=${attr(`#/rels/${rel.relationship_id}`)}>
        ${esc(rel.members.join(" – "))}</a>
        <span class="badge state-${esc(rel.state)}">${esc(rel.state)}</span></li>`,
    )
    .join("")}</ul>`;
}

async function renderRelationship(relId: string): Promise<void> {
  const [rels, grants, cards, partners] = await Promise.all([
    api.listRelationships(),
    api.listShares(),
    api.listCards(),
    api.listPartners(),
  ]);
  const relationship = rels.find((r) => r.relationship_id === relId);
  if (!relationship) {
    main().innerHTML = banner(new ApiError("UnknownRelationship", relId, 404));
    return;
  }
  const memberSet = new Set(relationship.members);
  const ownCards = cards.filter(
    (c) => memberSet.has(c.origin_node) && partners.some((p) => p.partner_id === c.origin_node),
  );
  main().innerHTML = renderDashboard({
    relationship,
    grants,
    ownCards,
    lastReport: lastReports.get(relId) ?? null,
    error: lastError,
  });
}

async function renderProcessIndex(): Promise<void> {
  const processes = await api.listProcesses();
  main().innerHTML = `<h2>Processes</h2>
  <ul>${processes
    .map(
      (p) => `<li><a href=${attr(`#/processes/${p.process_id}`)}>${esc(p.name)}</a>
      (${p.activities.length} activities)</li>`,
    )
    .join("")}</ul>`;
}

async function renderProcess(processId: string): Promise<void> {
  const [processes, report, cards] = await Promise.all([
    api.listProcesses(),
    api.flowReport(processId),
    api.listCards(),
  ]);
  const process = processes.find((p) => p.process_id === processId);
  if (!process) {
    main().innerHTML = banner(new ApiError("UnknownProcess", processId, 404));
    return;
  }
  main().innerHTML = renderFlow(process, report, titleIndex(cards));
}

function formValues(form: HTMLFormElement): Record<string, string> {
  const data = new FormData(form);
  const values: Record<string, string> = {};
  data.forEach((value, key) => {
    values[key] = String(value);
  });
  return values;
}

async function runAction(fn: () => Promise<unknown>): Promise<void> {
  try {
    await fn();
    lastError = null;
  } catch (error) {
    lastError = error instanceof ApiError ? `${error.code}: ${error.detail}` : String(error);
  }
  await renderRoute();
}

document.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  const action = form.dataset.action;
  if (!action) return;
  event.preventDefault();
  const values = formValues(form);
  const card = form.dataset.card ?? "";
  const rel = form.dataset.rel ?? "";
  void runAction(async () => {
    if (action === "create-card") {
      const expert = (values.expert ?? "").split("|");
      const doc = (values.doc ?? "").split("|");
      const created = await api.createCard({
        title: values.title,
        author: values.author,
        coordinate: { perspective: values.perspective, nature: values.nature, form: values.form },
        body: values.body ?? "",
        expert_refs: values.expert
          ? [{ name: expert[0] ?? "", organisation: expert[1] ?? "", contact: expert[2] ?? "" }]
          : [],
        document_refs: values.doc ? [{ label: doc[0] ?? "", locator: doc[1] ?? "" }] : [],
      });
      location.hash = `#/cards/${created.card_id}`;
    } else if (action === "edit") {
      const current = await api.getCard(card);
      await api.revise(card, values.author ?? "", values.body ?? "", current.heads);
    } else if (action === "comment") {
      await api.comment(card, values.author ?? "", values.text ?? "");
    } else if (action === "classify") {
      await api.classify(card, {
        perspective: values.perspective,
        nature: values.nature,
        form: values.form,
      });
    } else if (action === "link") {
      await api.addLink(card, values.target ?? "", values.link_type ?? "Association");
    } else if (action === "define") {
      const goals = (values.goals ?? "").split(";").map((g) => g.trim()).filter(Boolean);
      await api.define(rel, goals, values.scope ?? "");
    } else if (action === "cube-filter") {
      cubeFilter = {
        ...(values.perspective ? { perspective: values.perspective } : {}),
        ...(values.nature ? { nature: values.nature } : {}),
        ...(values.form ? { form: values.form } : {}),
        ...(values.q ? { q: values.q } : {}),
      };
    }
  });
});

document.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("button[data-action]");
  if (!(target instanceof HTMLButtonElement) || target.type === "submit") return;
  const action = target.dataset.action;
  const rel = target.dataset.rel ?? "";
  const card = target.dataset.card ?? "";
  void runAction(async () => {
    if (action === "collaborate") {
      await api.collaborate(rel);
    } else if (action === "close") {
      await api.close(rel);
    } else if (action === "grant") {
      await api.grant(card, rel);
    } else if (action === "revoke") {
      await api.revoke(target.dataset.grant ?? "");
    } else if (action === "pull") {
      lastReports.set(rel, await api.pull(rel));
    } else if (action === "merge-heads") {
      const full = await api.getCard(card);
      const author = window.prompt("merge as author:") ?? "";
      if (author) {
        await api.revise(card, author, full.current_revision.body, full.heads);
      }
    } else if (action === "cube-cell") {
      cubeFilter = {
        perspective: target.dataset.perspective,
        nature: target.dataset.nature,
        form: target.dataset.form,
      };
      location.hash = "#/cube";
    }
  });
});

window.addEventListener("hashchange", () => void renderRoute());
void renderRoute();

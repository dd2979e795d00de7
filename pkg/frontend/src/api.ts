// Client for the node's HTTP API. The UI talks only to its own node; every
// rendered datum comes from one of these calls.

import type {
  Card,
  FlowReport,
  Partner,
  Relationship,
  ShareGrant,
  SyncReport,
  WorkProcess,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly detail: string,
    readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function call<T>(method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const payload = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(payload.error ?? "Error", payload.detail ?? response.statusText, response.status);
  }
  return payload as T;
}

export const api = {
  listCards: () => call<Card[]>("GET", "/cards"),
  getCard: (id: string) => call<Card>("GET", `/cards/${encodeURIComponent(id)}`),
  createCard: (body: unknown) => call<Card>("POST", "/cards", body),
  revise: (id: string, author: string, text: string, parents: string[]) =>
    call("POST", `/cards/${encodeURIComponent(id)}/revisions`, {
      author,
      body: text,
      parent_ids: parents,
    }),
  comment: (id: string, author: string, text: string) =>
    call("POST", `/cards/${encodeURIComponent(id)}/comments`, { author, text }),
  classify: (id: string, coordinate: unknown) =>
    call("PUT", `/cards/${encodeURIComponent(id)}/classification`, { coordinate }),
  addLink: (source: string, target: string, linkType: string) =>
    call("POST", "/links", { source, target, link_type: linkType }),
  removeLink: (source: string, target: string, linkType: string) =>
    call("DELETE", "/links", { source, target, link_type: linkType }),
  cube: (filter: Record<string, string>) => {
    const params = new URLSearchParams(filter).toString();
    return call<Card[]>("GET", params ? `/cube?${params}` : "/cube");
  },
  listPartners: () => call<Partner[]>("GET", "/partners"),
  listRelationships: () => call<Relationship[]>("GET", "/relationships"),
  define: (rel: string, goals: string[], scope: string) =>
    call<Relationship>("POST", `/relationships/${encodeURIComponent(rel)}/define`, { goals, scope }),
  collaborate: (rel: string) =>
    call<Relationship>("POST", `/relationships/${encodeURIComponent(rel)}/collaborate`, {}),
  close: (rel: string) =>
    call<Relationship>("POST", `/relationships/${encodeURIComponent(rel)}/close`, {}),
  listShares: () => call<ShareGrant[]>("GET", "/shares"),
  grant: (cardId: string, rel: string) =>
    call<ShareGrant>("POST", "/shares", { card_id: cardId, relationship_id: rel }),
  revoke: (grantId: string) => call<ShareGrant>("DELETE", "/shares", { grant_id: grantId }),
  pull: (rel: string) => call<SyncReport>("POST", `/sync/${encodeURIComponent(rel)}/pull`, {}),
  listProcesses: () => call<WorkProcess[]>("GET", "/processes"),
  flowReport: (id: string) =>
    call<FlowReport>("GET", `/processes/${encodeURIComponent(id)}/flow-report`),
};

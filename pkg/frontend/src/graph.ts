// Link graph: cards as nodes on a circle, edges styled by link type.

import { attr, esc } from "./html.js";
import type { Card, LinkEdge } from "./types.js";

export interface GraphModel {
  nodes: { id: string; title: string; x: number; y: number }[];
  edges: (LinkEdge & { x1: number; y1: number; x2: number; y2: number })[];
}

const EDGE_CLASS: Record<string, string> = {
  IsA: "edge-isa",
  KindOf: "edge-kindof",
  PartOf: "edge-partof",
  Association: "edge-association",
};

export function buildGraph(cards: Card[], size = 480): GraphModel {
  const radius = size / 2 - 60;
  const cx = size / 2;
  const cy = size / 2;
  const nodes = cards.map((card, i) => {
    const angle = (2 * Math.PI * i) / Math.max(cards.length, 1);
    return {
      id: card.card_id,
      title: card.title,
      x: cx + radius * Math.cos(angle),
      y: cy + radius * Math.sin(angle),
    };
  });
  const at = new Map(nodes.map((n) => [n.id, n]));
  const seen = new Set<string>();
  const edges: GraphModel["edges"] = [];
  for (const card of cards) {
    for (const link of card.links) {
      const key = `${link.source}|${link.target}|${link.link_type}`;
      const source = at.get(link.source);
      const target = at.get(link.target);
      if (seen.has(key) || !source || !target) continue;
      seen.add(key);
      edges.push({ ...link, x1: source.x, y1: source.y, x2: target.x, y2: target.y });
    }
  }
  return { nodes, edges };
}

export function renderGraph(cards: Card[], size = 480): string {
  const model = buildGraph(cards, size);
  const edges = model.edges
    .map(
      (e) => `<g class="${EDGE_CLASS[e.link_type] ?? "edge-association"}">
        <line x1="${e.x1}" y1="${e.y1}" x2="${e.x2}" y2="${e.y2}" marker-end="url(#arrow)"/>
        <text x="${(e.x1 + e.x2) / 2}" y="${(e.y1 + e.y2) / 2}">${esc(e.link_type)}</text>
      </g>`,
    )
    .join("");
  const nodes = model.nodes
    .map(
      (n) => `<g class="graph-node" data-card=${attr(n.id)}>
        <circle cx="${n.x}" cy="${n.y}" r="26"/>
        <text x="${n.x}" y="${n.y}" text-anchor="middle">${esc(
          n.title.length > 14 ? `${n.title.slice(0, 13)}…` : n.title,
        )}</text>
      </g>`,
    )
    .join("");
  return `<svg class="link-graph" viewBox="0 0 ${size} ${size}" role="img">
  <defs>
    <marker id="arrow" viewBox="0 0 10 10" refX="24" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse">
      <path d="M 0 0 L 10 5 L 0 10 z"/>
    </marker>
  </defs>
  ${edges}
  ${nodes}
</svg>`;
}

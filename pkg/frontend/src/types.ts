// Wire types mirroring the node API's canonical JSON bodies.

export interface Coordinate {
  perspective: string;
  nature: string;
  form: string;
}

export interface Revision {
  revision_id: string;
  parent_ids: string[];
  author: string;
  lamport: number;
  body: string;
}

export interface CardComment {
  comment_id: string;
  author: string;
  text: string;
  at_revision: string;
  lamport: number;
}

export interface ExpertRef {
  name: string;
  organisation: string;
  contact: string;
}

export interface DocumentRef {
  label: string;
  locator: string;
}

export interface LinkEdge {
  source: string;
  target: string;
  link_type: string;
}

export interface ClassificationEvent {
  event_id: string;
  coordinate: Coordinate;
  author: string;
  lamport: number;
}

export interface Card {
  card_id: string;
  title: string;
  author: string;
  origin_node: string;
  coordinate: Coordinate;
  revisions: Revision[];
  comments: CardComment[];
  expert_refs: ExpertRef[];
  document_refs: DocumentRef[];
  created_at: number;
  current_revision: Revision;
  heads: string[];
  links: LinkEdge[];
  classifications: ClassificationEvent[];
}

export interface Partner {
  partner_id: string;
  name: string;
  kind: string;
  cluster_role: string;
}

export interface Relationship {
  relationship_id: string;
  members: string[];
  facilitator: string | null;
  state: string;
  goals: string[];
  scope: string;
}

export interface ShareGrant {
  grant_id: string;
  card_id: string;
  relationship_id: string;
  granted_by: string;
  revoked: boolean;
  granted_lamport: number;
}

export interface SyncReport {
  cards_updated: number;
  revisions_added: number;
}

export interface Activity {
  activity_id: string;
  name: string;
  owner: string;
  upstream_relationship: string | null;
}

export interface WorkProcess {
  process_id: string;
  name: string;
  activities: Activity[];
}

export interface FlowActivityRow {
  activity_id: string;
  name: string;
  owner: string;
  upstream_relationship: string | null;
  cards: string[];
}

export interface FlowReport {
  process_id: string;
  activities: FlowActivityRow[];
  relationships: { relationship_id: string; cards: string[] }[];
  coverage: number;
}

export interface ApiFailure {
  error: string;
  detail: string;
}

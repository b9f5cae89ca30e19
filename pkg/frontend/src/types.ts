// Shapes of the service's JSON payloads. Numbers shown in the UI come
// straight from these; the client never recomputes strengths.

export interface NodeDoc {
  id: string;
  kind: "feature" | "concept" | "root";
  label: string;
  description?: string;
  meaning?: number[];
  base_score?: number;
  round: number;
}

export interface EdgeDoc {
  child: string;
  parent: string;
  weight: number;
}

export interface QafDoc {
  schema_version: number;
  embedding_dim: number;
  feature_order: string[];
  nodes: NodeDoc[];
  edges: EdgeDoc[];
  root: string;
}

export interface ModelPayload {
  model: QafDoc;
  polarity: Record<string, 1 | -1>;
  root_label: string;
  sample: Record<string, unknown> | null;
}

export interface PredictPayload {
  strengths: Record<string, number>;
  score: number;
}

export interface Citation {
  node: string;
  role: "supporting" | "attacking";
  strength: number;
  position: "primary" | "secondary";
}

export interface ExplanationStep {
  subject: string;
  subject_strength: number;
  cited: Citation[];
  leaf_value: unknown;
  lines: string[];
  outside_definition: boolean;
}

export type RawFeatures = Record<string, unknown>;

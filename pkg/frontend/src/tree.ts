// Pure presentation model for the tree view. Red marks arguments whose
// rise pushes the root up (supporters along the path), blue the
// opposite; intensity scales with |edge weight x strength| once an
// instance is loaded, uniform otherwise.

import type { ModelPayload } from "./types.js";

export const SUPPORT_COLOR = "#c0392b"; // red
export const ATTACK_COLOR = "#2456a8"; // blue
export const NEUTRAL_COLOR = "#555555";

export interface TreeRow {
  id: string;
  label: string;
  depth: number;
  kind: string;
  polarity: 1 | -1 | 0; // 0 for the root itself
  color: string;
  edgeColor: string; // sign of the edge to the parent
  intensity: number; // 0..1
  strength: number | null;
  weight: number | null; // edge weight to parent
  hasChildren: boolean;
  visible: boolean;
}

export function colorForPolarity(polarity: 1 | -1 | 0): string {
  if (polarity === 1) return SUPPORT_COLOR;
  if (polarity === -1) return ATTACK_COLOR;
  return NEUTRAL_COLOR;
}

export function colorForWeight(weight: number | null): string {
  if (weight === null) return NEUTRAL_COLOR;
  return weight > 0 ? SUPPORT_COLOR : ATTACK_COLOR;
}

export function buildTreeRows(
  payload: ModelPayload,
  strengths: Record<string, number> | null,
  expanded: Set<string>,
): TreeRow[] {
  const doc = payload.model;
  const children = new Map<string, { child: string; weight: number }[]>();
  for (const edge of doc.edges) {
    const bucket = children.get(edge.parent) ?? [];
    bucket.push({ child: edge.child, weight: edge.weight });
    children.set(edge.parent, bucket);
  }
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));

  // Influence magnitudes |w * s| for intensity normalization.
  const influence = new Map<string, number>();
  let maxInfluence = 0;
  if (strengths) {
    for (const edge of doc.edges) {
      const s = strengths[edge.child];
      if (s === undefined) continue;
      const v = Math.abs(edge.weight * s);
      influence.set(edge.child, v);
      maxInfluence = Math.max(maxInfluence, v);
    }
  }

  const rows: TreeRow[] = [];
  const walk = (id: string, depth: number, weight: number | null, visible: boolean) => {
    const node = byId.get(id);
    if (!node) return;
    const polarity = id === doc.root ? 0 : (payload.polarity[id] ?? 0);
    let intensity = 1.0;
    if (strengths) {
      const v = influence.get(id);
      intensity = v === undefined || maxInfluence === 0 ? 1.0 : v / maxInfluence;
    }
    const kids = children.get(id) ?? [];
    rows.push({
      id,
      label: node.label,
      depth,
      kind: node.kind,
      polarity,
      color: colorForPolarity(polarity),
      edgeColor: colorForWeight(weight),
      intensity,
      strength: strengths ? (strengths[id] ?? null) : null,
      weight,
      hasChildren: kids.length > 0,
      visible,
    });
    const showKids = visible && expanded.has(id);
    for (const kid of kids) {
      walk(kid.child, depth + 1, kid.weight, showKids);
    }
  };
  walk(doc.root, 0, null, true);
  return rows;
}

// Render transcript turns exactly as the service phrased them.

import type { TranscriptTurn } from "./state.js";
import type { ModelPayload } from "./types.js";

export interface TranscriptLine {
  speaker: "user" | "CAM";
  text: string;
}

export function renderTurn(payload: ModelPayload, turn: TranscriptTurn): TranscriptLine[] {
  const node = payload.model.nodes.find((n) => n.id === turn.question);
  const label = node ? node.label : turn.question;
  const strength = turn.step.subject_strength;
  const lines: TranscriptLine[] = [
    { speaker: "user", text: `Why is ${label} evaluated as ${strength.toFixed(2)}?` },
  ];
  for (const text of turn.step.lines) {
    lines.push({ speaker: "CAM", text });
  }
  return lines;
}

export function renderTranscript(payload: ModelPayload, turns: TranscriptTurn[]): TranscriptLine[] {
  return turns.flatMap((turn) => renderTurn(payload, turn));
}

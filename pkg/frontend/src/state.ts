// All dialogue state lives client-side; the service is stateless.

import { getModel, postExplain, postPredict } from "./api.js";
import type { ExplanationStep, ModelPayload, RawFeatures } from "./types.js";

export interface TranscriptTurn {
  question: string; // node id asked about
  step: ExplanationStep;
}

export interface ViewState {
  base: string;
  model: ModelPayload | null;
  instance: RawFeatures | null;
  strengths: Record<string, number> | null;
  score: number | null;
  transcript: TranscriptTurn[];
  expanded: Set<string>;
  seq: number; // stale-response guard for instance changes
}

export function createState(base: string): ViewState {
  return {
    base,
    model: null,
    instance: null,
    strengths: null,
    score: null,
    transcript: [],
    expanded: new Set(),
    seq: 0,
  };
}

export async function loadModel(state: ViewState): Promise<ModelPayload> {
  const payload = await getModel(state.base);
  state.model = payload;
  state.expanded = new Set([payload.model.root]);
  return payload;
}

export function applyModel(state: ViewState, payload: ModelPayload): void {
  state.model = payload;
  state.expanded = new Set([payload.model.root]);
}

/** Swap in a new instance: bumps the sequence, clears the transcript and
 *  strengths, and returns the sequence number the caller must present
 *  when applying the matching /predict response. */
export function beginInstance(state: ViewState, features: RawFeatures): number {
  state.seq += 1;
  state.instance = features;
  state.strengths = null;
  state.score = null;
  state.transcript = [];
  return state.seq;
}

/** Apply a /predict response; a stale sequence number is discarded. */
export function applyStrengths(
  state: ViewState,
  seq: number,
  payload: { strengths: Record<string, number>; score: number },
): boolean {
  if (seq !== state.seq) return false;
  state.strengths = payload.strengths;
  state.score = payload.score;
  return true;
}

export async function setInstance(state: ViewState, features: RawFeatures): Promise<boolean> {
  const seq = beginInstance(state, features);
  const payload = await postPredict(state.base, features);
  return applyStrengths(state, seq, payload);
}

/** Ask "why is <node> evaluated as ...": appends one turn. The step is
 *  stored verbatim as the service returned it. */
export async function ask(state: ViewState, node: string): Promise<ExplanationStep> {
  if (!state.instance) throw new Error("no instance loaded");
  const step = await postExplain(state.base, state.instance, node);
  appendTurn(state, node, step);
  return step;
}

export function appendTurn(state: ViewState, node: string, step: ExplanationStep): void {
  state.transcript = [...state.transcript, { question: node, step }];
}

/** Nodes the user can click next: the latest answer's citations. */
export function nextTargets(state: ViewState): string[] {
  const last = state.transcript[state.transcript.length - 1];
  if (!last) return state.model ? [state.model.model.root] : [];
  return last.step.cited.map((c) => c.node);
}

export function toggleExpanded(state: ViewState, node: string): void {
  if (state.expanded.has(node)) state.expanded.delete(node);
  else state.expanded.add(node);
}

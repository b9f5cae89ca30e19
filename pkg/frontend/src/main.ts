// DOM wiring for the explorer: instance form, tree view, dialogue pane.

import { ask, createState, loadModel, nextTargets, setInstance, toggleExpanded, ViewState } from "./state.js";
import { renderTranscript } from "./transcript.js";
import { buildTreeRows } from "./tree.js";

const state = createState(inferBase());

function inferBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? "http://127.0.0.1:8000";
}

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function renderTree(s: ViewState): void {
  const container = el<HTMLDivElement>("tree");
  container.textContent = "";
  if (!s.model) return;
  const rows = buildTreeRows(s.model, s.strengths, s.expanded);
  for (const row of rows) {
    if (!row.visible) continue;
    const div = document.createElement("div");
    div.className = "node";
    div.style.marginLeft = `${row.depth * 22}px`;
    div.style.opacity = `${0.35 + 0.65 * row.intensity}`;

    if (row.hasChildren) {
      const toggle = document.createElement("span");
      toggle.className = "toggle";
      toggle.textContent = s.expanded.has(row.id) ? "▾ " : "▸ ";
      toggle.onclick = () => {
        toggleExpanded(s, row.id);
        renderTree(s);
      };
      div.appendChild(toggle);
    }

    const name = document.createElement("span");
    name.textContent = row.label;
    name.style.color = row.color;
    name.style.fontWeight = row.kind === "feature" ? "normal" : "bold";
    name.className = "label";
    name.onclick = () => {
      void askAbout(row.id);
    };
    div.appendChild(name);

    const meta: string[] = [];
    if (row.weight !== null) meta.push(`w ${row.weight.toFixed(3)}`);
    if (row.strength !== null) meta.push(`s ${row.strength.toFixed(3)}`);
    if (meta.length) {
      const span = document.createElement("span");
      span.className = "meta";
      span.textContent = "  " + meta.join("  ");
      span.style.color = row.edgeColor;
      div.appendChild(span);
    }
    container.appendChild(div);
  }
}

function renderDialogue(s: ViewState): void {
  const pane = el<HTMLDivElement>("dialogue");
  pane.textContent = "";
  if (!s.model) return;
  for (const line of renderTranscript(s.model, s.transcript)) {
    const div = document.createElement("div");
    div.className = line.speaker === "user" ? "turn user" : "turn cam";
    div.textContent = `${line.speaker}: ${line.text}`;
    pane.appendChild(div);
  }
  const targets = nextTargets(s);
  if (targets.length) {
    const hint = document.createElement("div");
    hint.className = "hint";
    hint.textContent = "ask about: ";
    for (const target of targets) {
      const button = document.createElement("button");
      const node = s.model.model.nodes.find((n) => n.id === target);
      button.textContent = node ? node.label : target;
      button.onclick = () => {
        void askAbout(target);
      };
      hint.appendChild(button);
    }
    pane.appendChild(hint);
  }
}

function renderScore(s: ViewState): void {
  const banner = el<HTMLDivElement>("score");
  if (s.score === null || !s.model) {
    banner.textContent = "no instance loaded";
    return;
  }
  banner.textContent = `${s.model.root_label}: ${s.score.toFixed(4)}`;
}

async function askAbout(node: string): Promise<void> {
  if (!state.instance) {
    setStatus("load an instance first");
    return;
  }
  try {
    await ask(state, node);
    renderDialogue(state);
  } catch (error) {
    setStatus(String(error));
  }
}

function setStatus(text: string): void {
  el<HTMLDivElement>("status").textContent = text;
}

function renderForm(s: ViewState): void {
  const form = el<HTMLFormElement>("instance-form");
  form.textContent = "";
  if (!s.model) return;
  const sample = s.model.sample ?? {};
  for (const feature of s.model.model.feature_order) {
    const label = document.createElement("label");
    label.textContent = feature;
    const input = document.createElement("input");
    input.name = feature;
    const prefill = (sample as Record<string, unknown>)[feature];
    input.value = prefill === null || prefill === undefined ? "" : String(prefill);
    label.appendChild(input);
    form.appendChild(label);
  }
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "score instance";
  form.appendChild(submit);
  form.onsubmit = (event) => {
    event.preventDefault();
    const features: Record<string, unknown> = {};
    for (const feature of s.model!.model.feature_order) {
      features[feature] = (form.elements.namedItem(feature) as HTMLInputElement).value;
    }
    void (async () => {
      try {
        setStatus("scoring…");
        const applied = await setInstance(s, features);
        if (applied) {
          setStatus("");
          renderScore(s);
          renderTree(s);
          renderDialogue(s);
        }
      } catch (error) {
        setStatus(String(error));
      }
    })();
  };
}

async function start(): Promise<void> {
  try {
    await loadModel(state);
    setStatus("");
  } catch (error) {
    setStatus(`cannot reach service at ${state.base}: ${error}`);
    return;
  }
  renderForm(state);
  renderScore(state);
  renderTree(state);
  renderDialogue(state);
}

void start();

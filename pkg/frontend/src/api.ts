import type { ExplanationStep, ModelPayload, PredictPayload, RawFeatures } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, init);
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ServiceError(response.status, detail);
  }
  return (await response.json()) as T;
}

export function getModel(base: string): Promise<ModelPayload> {
  return request<ModelPayload>(base, "/model");
}

export function postPredict(base: string, features: RawFeatures): Promise<PredictPayload> {
  return request<PredictPayload>(base, "/predict", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ features }),
  });
}

export function postExplain(base: string, features: RawFeatures, node: string): Promise<ExplanationStep> {
  return request<ExplanationStep>(base, "/explain", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ features, node }),
  });
}

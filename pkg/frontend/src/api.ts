/**
 * Thin typed client for the annotation service JSON API. The fetch
 * function is injected so tests can run against a scripted fake.
 *
 * Dashboard endpoints keep the raw response text alongside the parsed
 * payload: the dashboard must display exactly what the API returned.
 */

import type { JudgmentBody, TaskView } from "./state.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface NextTaskResponse {
  task: TaskView | null;
  remaining: number;
}

export interface SubmitResult {
  status: "ok" | "conflict";
  superseded?: boolean;
}

export interface RawPayload<T> {
  raw: string;
  data: T;
}

export interface AgreementPayload {
  n_annotators: number;
  n_items: number;
  criteria: Record<string, number | null>;
  pooled: number | null;
}

export interface SummaryPayload {
  groups: Array<Record<string, string | number>>;
}

export interface ProgressPayload {
  total: number;
  done: number;
  pending: number;
  per_annotator: Record<string, number>;
  n_annotators: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export function createApi(fetchFn: FetchLike, base = "") {
  async function getJson<T>(path: string): Promise<RawPayload<T>> {
    const response = await fetchFn(`${base}${path}`);
    if (!response.ok) {
      throw new ApiError(`GET ${path} failed with ${response.status}`, response.status);
    }
    const raw = await response.text();
    return { raw, data: JSON.parse(raw) as T };
  }

  return {
    async nextTask(annotatorId: string): Promise<NextTaskResponse> {
      const { data } = await getJson<NextTaskResponse>(
        `/api/tasks/next?annotator=${encodeURIComponent(annotatorId)}`,
      );
      return data;
    },

    async submitJudgment(body: JudgmentBody): Promise<SubmitResult> {
      const response = await fetchFn(`${base}/api/judgments`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
      if (response.status === 409) {
        return { status: "conflict" };
      }
      if (!response.ok) {
        throw new ApiError(`POST /api/judgments failed with ${response.status}`, response.status);
      }
      const payload = (await response.json()) as { superseded?: boolean };
      return { status: "ok", superseded: payload.superseded };
    },

    agreement(): Promise<RawPayload<AgreementPayload>> {
      return getJson<AgreementPayload>("/api/agreement");
    },

    summary(): Promise<RawPayload<SummaryPayload>> {
      return getJson<SummaryPayload>("/api/summary");
    },

    progress(): Promise<RawPayload<ProgressPayload>> {
      return getJson<ProgressPayload>("/api/progress");
    },
  };
}

export type Api = ReturnType<typeof createApi>;

/**
 * Session controller: wires keyboard actions and API calls to the pure
 * state machine, with optimistic advance and rollback on failure. The
 * render callback receives every state change; dashboards carry the raw
 * API text so the page shows exactly what the service said.
 */

import type { Api, RawPayload, AgreementPayload, SummaryPayload } from "./api.js";
import { ApiError } from "./api.js";
import { actionForKey } from "./keyboard.js";
import {
  buildJudgment,
  initialState,
  networkFailed,
  retry,
  submitConflicted,
  submitSucceeded,
  taskLoaded,
  toggleCriterion,
  type SessionState,
} from "./state.js";

export interface Dashboards {
  agreement: RawPayload<AgreementPayload> | null;
  summary: RawPayload<SummaryPayload> | null;
}

export class SessionController {
  state: SessionState;
  dashboards: Dashboards = { agreement: null, summary: null };

  constructor(
    private readonly api: Api,
    annotatorId: string,
    private readonly render: (state: SessionState, dashboards: Dashboards) => void = () => {},
  ) {
    this.state = initialState(annotatorId);
  }

  private update(next: SessionState): void {
    this.state = next;
    this.render(this.state, this.dashboards);
  }

  async start(): Promise<void> {
    await this.refreshDashboards();
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    try {
      const { task, remaining } = await this.api.nextTask(this.state.annotatorId);
      this.update(taskLoaded(this.state, task, remaining));
    } catch (error) {
      this.update(networkFailed(this.state, describe(error)));
    }
  }

  toggle(criterion: Parameters<typeof toggleCriterion>[1]): void {
    this.update(toggleCriterion(this.state, criterion));
  }

  /** No-op while any criterion is unset (mirrors the server contract). */
  async submit(): Promise<boolean> {
    const body = buildJudgment(this.state);
    if (body === null) return false;
    const before = this.state;
    this.update(submitSucceeded(this.state)); // optimistic advance
    try {
      const result = await this.api.submitJudgment(body);
      if (result.status === "conflict") {
        this.update(submitConflicted({ ...this.state, completed: before.completed }));
        await this.loadNext();
        return false;
      }
    } catch (error) {
      // rollback: restore the task and the annotator's toggles
      this.update(networkFailed(before, describe(error)));
      return false;
    }
    await this.refreshDashboards();
    await this.loadNext();
    return true;
  }

  async handleKey(key: string): Promise<void> {
    const action = actionForKey(key);
    switch (action.kind) {
      case "toggle":
        this.toggle(action.criterion);
        return;
      case "submit":
        await this.submit();
        return;
      case "retry":
        this.update(retry(this.state));
        if (this.state.phase === "loading") await this.loadNext();
        return;
      case "none":
        return;
    }
  }

  async refreshDashboards(): Promise<void> {
    try {
      const [agreement, summary] = await Promise.all([
        this.api.agreement(),
        this.api.summary(),
      ]);
      this.dashboards = { agreement, summary };
      this.render(this.state, this.dashboards);
    } catch (error) {
      if (!(error instanceof ApiError)) {
        this.dashboards = { agreement: null, summary: null };
      }
    }
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

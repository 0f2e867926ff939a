import { describe, expect, it } from "vitest";

import { createApi, type FetchLike } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import type { JudgmentBody, TaskView } from "../src/state.js";

function task(id: number): TaskView {
  return {
    task_id: `task-${id}`,
    evidence: [`Câu dữ kiện ${id}a.`, `Câu dữ kiện ${id}b.`],
    claim: `Câu kiểm chứng số ${id}.`,
    label: id % 2 === 0 ? "SUPPORTED" : "REFUTED",
    stage: "uncalibrated",
    model: "mock-llm",
  };
}

/** Scripted stand-in for the annotation service. */
class FakeService {
  queue: TaskView[];
  submitted: JudgmentBody[] = [];
  // raw body the dashboard must reproduce byte-for-byte
  agreementBody = '{"n_annotators":2,"n_items":6,"criteria":{"fluency":0.8323,"logical":1.0,"abstract":null,"precision":-0.25},"pooled":null}';
  summaryBody = '{"groups":[{"model":"mock-llm","stage":"uncalibrated","n_judgments":12,"fluency_pct":83.33,"logical_pct":100.0,"abstract_pct":50.0,"precision_pct":66.67}]}';
  failNextSubmit: number | null = null; // HTTP status to fail with once

  constructor(n_tasks: number) {
    this.queue = Array.from({ length: n_tasks }, (_, i) => task(i));
  }

  fetch: FetchLike = async (url, init) => {
    if (url.startsWith("/api/tasks/next")) {
      const next = this.queue.length > 0 ? this.queue[0] : null;
      return json({ task: next, remaining: this.queue.length });
    }
    if (url === "/api/judgments" && init?.method === "POST") {
      if (this.failNextSubmit !== null) {
        const status = this.failNextSubmit;
        this.failNextSubmit = null;
        return new Response("{}", { status });
      }
      const body = JSON.parse(init.body as string) as JudgmentBody;
      this.submitted.push(body);
      this.queue = this.queue.filter((t) => t.task_id !== body.task_id);
      return json({ stored: true, superseded: false, task_status: "pending" });
    }
    if (url === "/api/agreement") {
      return new Response(this.agreementBody, { status: 200 });
    }
    if (url === "/api/summary") {
      return new Response(this.summaryBody, { status: 200 });
    }
    if (url === "/api/progress") {
      return json({ total: 5, done: 0, pending: 5, per_annotator: {}, n_annotators: 2 });
    }
    return new Response("not found", { status: 404 });
  };
}

function json(payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });
}

async function keyboard(controller: SessionController, keys: string[]): Promise<void> {
  for (const key of keys) {
    await controller.handleKey(key);
  }
}

describe("keyboard-only session", () => {
  it("completes five tasks with keys alone and reaches the done state", async () => {
    const service = new FakeService(5);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    expect(controller.state.phase).toBe("annotating");

    for (let i = 0; i < 5; i++) {
      // 1-4 set all four criteria to pass, 2 pressed twice -> fail
      await keyboard(controller, ["1", "2", "2", "3", "4", "Enter"]);
    }
    expect(service.submitted).toHaveLength(5);
    expect(new Set(service.submitted.map((j) => j.task_id)).size).toBe(5);
    expect(service.submitted[0]).toMatchObject({
      annotator_id: "a1",
      fluency: true,
      logical: false,
      abstract: true,
      precision: true,
    });
    expect(controller.state.phase).toBe("done");
    expect(controller.state.completed).toBe(5);
  });

  it("blocks Enter while any criterion is unset", async () => {
    const service = new FakeService(2);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();

    await keyboard(controller, ["Enter"]);
    expect(service.submitted).toHaveLength(0);
    await keyboard(controller, ["1", "2", "3", "Enter"]); // precision unset
    expect(service.submitted).toHaveLength(0);
    expect(controller.state.task?.task_id).toBe("task-0");
    await keyboard(controller, ["4", "Enter"]);
    expect(service.submitted).toHaveLength(1);
  });

  it("a criterion cycled back to unset re-blocks submit", async () => {
    const service = new FakeService(1);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    await keyboard(controller, ["1", "2", "3", "4", "1", "1", "Enter"]); // 1 ends unset
    expect(service.submitted).toHaveLength(0);
  });
});

describe("dashboards", () => {
  it("holds the agreement payload byte-for-byte", async () => {
    const service = new FakeService(1);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    expect(controller.dashboards.agreement?.raw).toBe(service.agreementBody);
    expect(controller.dashboards.summary?.raw).toBe(service.summaryBody);
  });

  it("re-fetches dashboards after every successful submit", async () => {
    const service = new FakeService(1);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    service.agreementBody = '{"n_annotators":2,"n_items":7,"criteria":{},"pooled":0.5}';
    await keyboard(controller, ["1", "2", "3", "4", "Enter"]);
    expect(controller.dashboards.agreement?.raw).toBe(service.agreementBody);
  });

  it("summary table values come straight from the parsed payload", async () => {
    const service = new FakeService(1);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    const groups = controller.dashboards.summary?.data.groups ?? [];
    expect(groups[0].fluency_pct).toBe(83.33);
    expect(groups[0].n_judgments).toBe(12);
  });
});

describe("failure handling", () => {
  it("rolls back to the same task and toggles on a server error", async () => {
    const service = new FakeService(2);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    service.failNextSubmit = 500;
    await keyboard(controller, ["1", "2", "3", "4", "Enter"]);
    expect(service.submitted).toHaveLength(0);
    expect(controller.state.phase).toBe("error");
    expect(controller.state.task?.task_id).toBe("task-0");
    expect(controller.state.criteria.fluency).toBe("pass"); // nothing lost
    expect(controller.state.banner).toMatch(/500/);

    await keyboard(controller, ["r", "Enter"]); // retry banner -> resubmit
    expect(service.submitted).toHaveLength(1);
    expect(controller.state.phase).toBe("annotating");
    expect(controller.state.task?.task_id).toBe("task-1");
  });

  it("conflict reloads the task queue with toggles cleared", async () => {
    const service = new FakeService(2);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    service.failNextSubmit = 409;
    await keyboard(controller, ["1", "2", "3", "4", "Enter"]);
    expect(service.submitted).toHaveLength(0);
    expect(controller.state.phase).toBe("annotating");
    expect(controller.state.criteria.fluency).toBe("unset");
    expect(controller.state.completed).toBe(0);
  });

  it("shows the all-done panel state when the queue is empty", async () => {
    const service = new FakeService(0);
    const controller = new SessionController(createApi(service.fetch), "a1");
    await controller.start();
    expect(controller.state.phase).toBe("done");
  });
});

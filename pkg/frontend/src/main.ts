/**
 * DOM entry point. The annotator id comes from ?annotator=...; state
 * renders into the static skeleton in index.html. Vietnamese text is
 * NFC-normalized before display.
 */

import { createApi } from "./api.js";
import { SessionController, type Dashboards } from "./controller.js";
import { CRITERIA, canSubmit, type SessionState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function nfc(text: string): string {
  return text.normalize("NFC");
}

function renderTask(state: SessionState): void {
  const taskPanel = el<HTMLDivElement>("task-panel");
  const donePanel = el<HTMLDivElement>("done-panel");
  if (state.phase === "done") {
    taskPanel.hidden = true;
    donePanel.hidden = false;
    return;
  }
  donePanel.hidden = true;
  taskPanel.hidden = state.task === null;
  if (!state.task) return;

  const list = el<HTMLOListElement>("evidence-list");
  list.replaceChildren(
    ...state.task.evidence.map((sentence) => {
      const item = document.createElement("li");
      item.textContent = nfc(sentence);
      return item;
    }),
  );
  el<HTMLParagraphElement>("claim-text").textContent = nfc(state.task.claim);
  const badge = el<HTMLSpanElement>("label-badge");
  badge.textContent = state.task.label;
  badge.dataset.label = state.task.label;
  el<HTMLSpanElement>("task-meta").textContent =
    `${state.task.model} / ${state.task.stage} · ${state.remaining} left for you`;
}

function renderCriteria(state: SessionState): void {
  for (const criterion of CRITERIA) {
    const button = el<HTMLButtonElement>(`crit-${criterion}`);
    const value = state.criteria[criterion];
    button.dataset.state = value;
    button.querySelector(".value")!.textContent =
      value === "unset" ? "—" : value === "pass" ? "pass" : "fail";
  }
  el<HTMLButtonElement>("submit").disabled = !canSubmit(state);
}

function renderDashboards(dashboards: Dashboards): void {
  const agreement = el<HTMLPreElement>("agreement-raw");
  agreement.textContent = dashboards.agreement ? dashboards.agreement.raw : "(not loaded)";
  const summaryBody = el<HTMLTableSectionElement>("summary-body");
  const groups = dashboards.summary?.data.groups ?? [];
  summaryBody.replaceChildren(
    ...groups.map((group) => {
      const row = document.createElement("tr");
      for (const key of ["model", "stage", "n_judgments",
                         "fluency_pct", "logical_pct", "abstract_pct", "precision_pct"]) {
        const cell = document.createElement("td");
        cell.textContent = String(group[key] ?? "");
        row.appendChild(cell);
      }
      return row;
    }),
  );
}

function render(state: SessionState, dashboards: Dashboards): void {
  el<HTMLDivElement>("banner").hidden = state.banner === null;
  el<HTMLDivElement>("banner").textContent = state.banner ?? "";
  el<HTMLSpanElement>("completed-count").textContent = String(state.completed);
  el<HTMLSpanElement>("annotator-id").textContent = state.annotatorId;
  renderTask(state);
  renderCriteria(state);
  renderDashboards(dashboards);
}

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const annotatorId = params.get("annotator") ?? "";
  if (!annotatorId) {
    el<HTMLDivElement>("banner").hidden = false;
    el<HTMLDivElement>("banner").textContent =
      "Add ?annotator=YOUR_ID to the URL to start annotating.";
    return;
  }
  const api = createApi((url, init) => fetch(url, init));
  const controller = new SessionController(api, annotatorId, render);

  document.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement;
    if (target.tagName === "INPUT" || target.tagName === "TEXTAREA") return;
    if (event.key === "Enter" || (event.key >= "1" && event.key <= "4")) {
      event.preventDefault();
    }
    void controller.handleKey(event.key);
  });
  for (const criterion of CRITERIA) {
    el<HTMLButtonElement>(`crit-${criterion}`).addEventListener("click", () =>
      controller.toggle(criterion),
    );
  }
  el<HTMLButtonElement>("submit").addEventListener("click", () => void controller.submit());
  el<HTMLButtonElement>("refresh-dashboards").addEventListener("click", () =>
    void controller.refreshDashboards(),
  );

  void controller.start();
}

start();

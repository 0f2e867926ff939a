/**
 * Pure annotation-session state: tri-state criteria toggles, the
 * submit guard, and the task lifecycle. No DOM, no fetch - everything
 * here is unit-testable.
 */

export type TriState = "unset" | "pass" | "fail";

export const CRITERIA = ["fluency", "logical", "abstract", "precision"] as const;
export type Criterion = (typeof CRITERIA)[number];

export type CriteriaState = Record<Criterion, TriState>;

export interface TaskView {
  task_id: string;
  evidence: string[];
  claim: string;
  label: string;
  stage: string;
  model: string;
}

export interface JudgmentBody {
  annotator_id: string;
  task_id: string;
  fluency: boolean;
  logical: boolean;
  abstract: boolean;
  precision: boolean;
}

export type Phase = "loading" | "annotating" | "done" | "error";

export interface SessionState {
  phase: Phase;
  annotatorId: string;
  task: TaskView | null;
  criteria: CriteriaState;
  completed: number;
  remaining: number;
  banner: string | null;
}

export function freshCriteria(): CriteriaState {
  return { fluency: "unset", logical: "unset", abstract: "unset", precision: "unset" };
}

export function initialState(annotatorId: string): SessionState {
  return {
    phase: "loading",
    annotatorId,
    task: null,
    criteria: freshCriteria(),
    completed: 0,
    remaining: 0,
    banner: null,
  };
}

export function cycle(value: TriState): TriState {
  switch (value) {
    case "unset":
      return "pass";
    case "pass":
      return "fail";
    case "fail":
      return "unset";
  }
}

export function toggleCriterion(state: SessionState, criterion: Criterion): SessionState {
  if (state.phase !== "annotating" || state.task === null) return state;
  return {
    ...state,
    criteria: { ...state.criteria, [criterion]: cycle(state.criteria[criterion]) },
  };
}

/** Submit is legal only when all four criteria are explicitly set. */
export function canSubmit(state: SessionState): boolean {
  return (
    state.phase === "annotating" &&
    state.task !== null &&
    CRITERIA.every((c) => state.criteria[c] !== "unset")
  );
}

/** Null while any criterion is unset - the UI-level submit guard. */
export function buildJudgment(state: SessionState): JudgmentBody | null {
  if (!canSubmit(state) || state.task === null) return null;
  return {
    annotator_id: state.annotatorId,
    task_id: state.task.task_id,
    fluency: state.criteria.fluency === "pass",
    logical: state.criteria.logical === "pass",
    abstract: state.criteria.abstract === "pass",
    precision: state.criteria.precision === "pass",
  };
}

export function taskLoaded(state: SessionState, task: TaskView | null, remaining: number): SessionState {
  if (task === null) {
    return { ...state, phase: "done", task: null, criteria: freshCriteria(), remaining: 0 };
  }
  return {
    ...state,
    phase: "annotating",
    task,
    criteria: freshCriteria(),
    remaining,
    banner: null,
  };
}

export function submitSucceeded(state: SessionState): SessionState {
  return {
    ...state,
    phase: "loading",
    task: null,
    criteria: freshCriteria(),
    completed: state.completed + 1,
    banner: null,
  };
}

/** Conflict (someone else finished the task): reload with toggles cleared. */
export function submitConflicted(state: SessionState): SessionState {
  return {
    ...state,
    phase: "loading",
    task: null,
    criteria: freshCriteria(),
    banner: "Task was already completed by other annotators; loading the next one.",
  };
}

export function networkFailed(state: SessionState, message: string): SessionState {
  // keep the task and toggle state so nothing the annotator did is lost
  return { ...state, phase: "error", banner: message };
}

export function retry(state: SessionState): SessionState {
  if (state.task !== null) {
    return { ...state, phase: "annotating", banner: null };
  }
  return { ...state, phase: "loading", banner: null };
}

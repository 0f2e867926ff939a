/**
 * Keyboard-first flow: digits 1-4 cycle the four criteria, Enter
 * submits, r retries after a network error. Annotators rate hundreds of
 * items, so nothing requires the mouse.
 */

import { CRITERIA, type Criterion } from "./state.js";

export type KeyAction =
  | { kind: "toggle"; criterion: Criterion }
  | { kind: "submit" }
  | { kind: "retry" }
  | { kind: "none" };

export function actionForKey(key: string): KeyAction {
  if (key >= "1" && key <= "4") {
    return { kind: "toggle", criterion: CRITERIA[Number(key) - 1] };
  }
  if (key === "Enter") {
    return { kind: "submit" };
  }
  if (key === "r" || key === "R") {
    return { kind: "retry" };
  }
  return { kind: "none" };
}

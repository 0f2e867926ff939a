import { describe, expect, it } from "vitest";

import { actionForKey } from "../src/keyboard.js";

describe("key mapping", () => {
  it("maps digits 1-4 to the four criteria in order", () => {
    expect(actionForKey("1")).toEqual({ kind: "toggle", criterion: "fluency" });
    expect(actionForKey("2")).toEqual({ kind: "toggle", criterion: "logical" });
    expect(actionForKey("3")).toEqual({ kind: "toggle", criterion: "abstract" });
    expect(actionForKey("4")).toEqual({ kind: "toggle", criterion: "precision" });
  });

  it("maps Enter to submit and r to retry", () => {
    expect(actionForKey("Enter")).toEqual({ kind: "submit" });
    expect(actionForKey("r")).toEqual({ kind: "retry" });
    expect(actionForKey("R")).toEqual({ kind: "retry" });
  });

  it("ignores everything else", () => {
    for (const key of ["5", "0", "a", "Escape", " ", "ArrowDown"]) {
      expect(actionForKey(key)).toEqual({ kind: "none" });
    }
  });
});

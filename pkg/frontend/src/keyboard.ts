// Keyboard-first entry: annotators score hundreds of photos in a
// sitting, so digits must land without clicking.
//
// Digits 1-9: set the active attribute's score and move to the next
// attribute (color -> shape -> texture).  c/s/t jump to an attribute,
// Enter submits.  The handler is pure: it maps a key to an action and
// leaves state changes to the caller.

import { Attribute } from "./types.js";

export type KeyAction =
  | { kind: "score"; value: number }
  | { kind: "focus"; attribute: Attribute }
  | { kind: "submit" }
  | { kind: "none" };

const FOCUS_KEYS: Record<string, Attribute> = {
  c: "color",
  s: "shape",
  t: "texture",
};

export function actionForKey(key: string): KeyAction {
  if (key >= "1" && key <= "9") {
    return { kind: "score", value: Number(key) };
  }
  if (key in FOCUS_KEYS) {
    return { kind: "focus", attribute: FOCUS_KEYS[key] };
  }
  if (key === "Enter") {
    return { kind: "submit" };
  }
  return { kind: "none" };
}

/** True when the event target is a text box the user is typing into. */
export function isTypingTarget(target: unknown): boolean {
  if (typeof HTMLInputElement !== "undefined"
      && target instanceof HTMLInputElement) {
    return target.type === "text";
  }
  return false;
}

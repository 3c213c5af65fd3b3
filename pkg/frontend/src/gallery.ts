// Rule gallery: one before -> after tile pair per learned rewrite.

import { RulePayload } from "./protocol.js";
import { paintPattern } from "./renderer.js";

const SOKOBAN_ACTIONS = ["up", "down", "left", "right"];
const DOORKEY_ACTIONS = ["turn_left", "turn_right", "forward", "pickup", "toggle"];

export function actionLabel(game: string, action: number): string {
  const names = game === "doorkey" ? DOORKEY_ACTIONS : SOKOBAN_ACTIONS;
  return names[action] ?? `action ${action}`;
}

export function renderGallery(
  root: HTMLElement,
  game: string,
  gallery: RulePayload[],
  sprites: Record<string, string>,
): void {
  // append only what's new; entries are immutable once shown
  while (root.children.length > gallery.length) {
    root.removeChild(root.lastChild as Node);
  }
  for (let i = root.children.length; i < gallery.length; i++) {
    const rule = gallery[i];
    const entry = document.createElement("div");
    entry.className = "rule";
    const label = document.createElement("span");
    label.textContent =
      `#${rule.ordinal} ${actionLabel(game, rule.action)}` +
      (rule.reward !== 0 ? ` +${rule.reward}` : "") +
      (rule.identity ? " (no change)" : "");
    const before = document.createElement("canvas");
    const after = document.createElement("canvas");
    paintPattern(before.getContext("2d")!, rule.before, sprites);
    paintPattern(after.getContext("2d")!, rule.after, sprites);
    const arrow = document.createElement("span");
    arrow.textContent = "→";
    entry.append(label, before, arrow, after);
    root.appendChild(entry);
  }
}

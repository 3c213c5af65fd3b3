// The console's entire view is a fold over server messages: no game logic
// lives here, so replaying a recorded stream reconstructs the exact view.

import {
  decodeRle,
  PlanMsg,
  RulePayload,
  ServerMsg,
} from "./protocol.js";

export interface PlanView {
  kind: PlanMsg["kind"];
  actions: number[];
  frames: { grid: Uint8Array | null; reward: number; unknown: boolean }[];
  cursor: number;
}

export interface ViewState {
  session: string | null;
  shape: [number, number];
  grid: Uint8Array;
  agent: [number, number] | null;
  done: boolean;
  lastReward: number;
  ruleCount: number;
  gallery: RulePayload[];
  sprites: Record<string, string>;
  plan: PlanView | null;
  exportedLog: string | null;
  lastError: string | null;
}

export function initialViewState(): ViewState {
  return {
    session: null,
    shape: [0, 0],
    grid: new Uint8Array(0),
    agent: null,
    done: false,
    lastReward: 0,
    ruleCount: 0,
    gallery: [],
    sprites: {},
    plan: null,
    exportedLog: null,
    lastError: null,
  };
}

export function applyMessage(view: ViewState, msg: ServerMsg): ViewState {
  switch (msg.type) {
    case "hello":
      return view;
    case "created":
      return { ...initialViewState(), session: msg.session };
    case "state": {
      const cells = msg.shape[0] * msg.shape[1];
      return {
        ...view,
        session: msg.session,
        shape: msg.shape,
        grid: decodeRle(msg.grid, cells),
        agent: msg.agent,
        done: msg.done,
        lastReward: msg.reward,
        ruleCount: msg.rule_count,
        sprites: msg.sprites,
        lastError: null,
      };
    }
    case "delta": {
      const grid = view.grid.slice();
      const width = view.shape[1];
      for (const [row, col, id] of msg.cells) {
        grid[row * width + col] = id;
      }
      return {
        ...view,
        grid,
        done: msg.done,
        lastReward: msg.reward,
        ruleCount: msg.rule_count,
        gallery: msg.new_rules.length
          ? [...view.gallery, ...msg.new_rules]
          : view.gallery,
        lastError: null,
      };
    }
    case "plan": {
      const frames = msg.predicted.map((frame) => ({
        grid: frame.grid
          ? decodeRle(frame.grid, view.shape[0] * view.shape[1])
          : null,
        reward: frame.reward ?? 0,
        unknown: Boolean(frame.unknown),
      }));
      return {
        ...view,
        ruleCount: msg.rule_count,
        plan: { kind: msg.kind, actions: msg.actions, frames, cursor: 0 },
        lastError: null,
      };
    }
    case "export":
      return { ...view, exportedLog: msg.log, lastError: null };
    case "error":
      return { ...view, lastError: `${msg.code}: ${msg.msg}` };
  }
}

export function replayLog(lines: string[]): ViewState {
  let view = initialViewState();
  for (const line of lines) {
    if (line.trim().length === 0) continue;
    view = applyMessage(view, JSON.parse(line) as ServerMsg);
  }
  return view;
}

export function movePlanCursor(view: ViewState, delta: number): ViewState {
  if (!view.plan) return view;
  const max = view.plan.frames.length - 1;
  const cursor = Math.min(max, Math.max(0, view.plan.cursor + delta));
  return { ...view, plan: { ...view.plan, cursor } };
}

export function gridAsText(view: ViewState): string {
  const [height, width] = view.shape;
  const rows: string[] = [];
  for (let r = 0; r < height; r++) {
    const cells: string[] = [];
    for (let c = 0; c < width; c++) {
      cells.push(String(view.grid[r * width + c]));
    }
    rows.push(cells.join(","));
  }
  return rows.join("\n");
}

// Wire types for the session-server protocol (one JSON object per frame).

export type Rle = [number, number][];
export type PatternCell = [number, number, number]; // drow, dcol, object id

export interface HelloMsg {
  type: "hello";
  proto_version: number;
}

export interface CreatedMsg {
  type: "created";
  session: string;
}

export interface StateMsg {
  type: "state";
  session: string;
  shape: [number, number];
  grid: Rle;
  agent: [number, number];
  done: boolean;
  reward: number;
  rule_count: number;
  sprites: Record<string, string>; // object id -> sha256 of its sprite tile
}

export interface RulePayload {
  action: number;
  reward: number;
  identity: boolean;
  before: PatternCell[];
  after: PatternCell[];
  ordinal: number;
}

export interface DeltaMsg {
  type: "delta";
  session: string;
  cells: [number, number, number][]; // row, col, new object id
  reward: number;
  done: boolean;
  new_rules: RulePayload[];
  rule_count: number;
}

export interface PredictedFrame {
  grid?: Rle;
  reward?: number;
  unknown?: boolean;
}

export interface PlanMsg {
  type: "plan";
  session: string;
  kind: "win" | "explore" | "exhausted";
  actions: number[];
  predicted: PredictedFrame[];
  executed: number;
  rule_count: number;
}

export interface ExportMsg {
  type: "export";
  session: string;
  log: string;
  records: number;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  msg: string;
}

export type ServerMsg =
  | HelloMsg
  | CreatedMsg
  | StateMsg
  | DeltaMsg
  | PlanMsg
  | ExportMsg
  | ErrorMsg;

export function decodeRle(rle: Rle, cellCount: number): Uint8Array {
  const out = new Uint8Array(cellCount);
  let at = 0;
  for (const [value, count] of rle) {
    out.fill(value, at, at + count);
    at += count;
  }
  if (at !== cellCount) {
    throw new Error(`run-length payload filled ${at} of ${cellCount} cells`);
  }
  return out;
}

export function parseServerMsg(line: string): ServerMsg {
  return JSON.parse(line) as ServerMsg;
}

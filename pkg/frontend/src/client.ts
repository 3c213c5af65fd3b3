// WebSocket client. Input is rate-limited to one in-flight act so the
// recorded demonstration matches the order the human actually played.

import { ServerMsg } from "./protocol.js";

export interface SessionConfig {
  game: string;
  size: number;
  boxes?: number;
  rotation?: number;
  seed?: number;
  mode: "human_demo" | "agent_watch";
  learn?: boolean;
}

export class ConsoleClient {
  private socket: WebSocket;
  private actPending = false;
  private session: string | null = null;

  constructor(
    address: string,
    private onMessage: (msg: ServerMsg) => void,
  ) {
    this.socket = new WebSocket(address);
    this.socket.onmessage = (event) => {
      const msg = JSON.parse(String(event.data)) as ServerMsg;
      if (msg.type === "created") {
        this.session = msg.session;
      }
      if (msg.type === "delta" || msg.type === "error") {
        this.actPending = false;
      }
      this.onMessage(msg);
    };
  }

  ready(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.socket.onopen = () => resolve();
      this.socket.onerror = () => reject(new Error("connection failed"));
    });
  }

  private send(payload: object): void {
    this.socket.send(JSON.stringify(payload));
  }

  hello(): void {
    this.send({ type: "hello", proto_version: 1 });
  }

  create(config: SessionConfig): void {
    this.send({ type: "create", config });
  }

  act(actionId: number): boolean {
    if (this.actPending || this.session === null) return false;
    this.actPending = true;
    this.send({ type: "act", session: this.session, action_id: actionId });
    return true;
  }

  agentStep(): void {
    if (this.session === null) return;
    this.send({ type: "agent_step", session: this.session });
  }

  exportDemo(): void {
    if (this.session === null) return;
    this.send({ type: "export", session: this.session });
  }
}

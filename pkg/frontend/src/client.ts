// WebSocket client: one socket, reconnect with backoff, send with one retry.

import { parseServerMessage } from "./protocol.js";
import type { UiState } from "./state.js";
import type { Command } from "./types.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
}

export type SocketFactory = () => SocketLike;

export class DashboardClient {
  private socket: SocketLike | null = null;
  private reconnectDelayMs = 500;
  private closedByUser = false;

  constructor(
    private readonly factory: SocketFactory,
    readonly state: UiState,
    private readonly log: (msg: string) => void = console.warn,
    private readonly scheduler: (fn: () => void, ms: number) => void =
      (fn, ms) => setTimeout(fn, ms),
  ) {}

  connect(): void {
    this.state.setConnection("connecting");
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelayMs = 500;
      this.state.setConnection("open");
    };
    socket.onclose = () => {
      this.state.setConnection("closed");
      if (!this.closedByUser) {
        this.scheduler(() => this.connect(), this.reconnectDelayMs);
        this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 10_000);
      }
    };
    socket.onmessage = (event) => {
      const msg = parseServerMessage(event.data);
      if (msg === null) {
        this.log(`dropped malformed message: ${String(event.data).slice(0, 120)}`);
        return; // view stays unchanged
      }
      this.state.applyMessage(msg);
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }

  /** Send a command; on failure retry once, then surface the error. */
  send(command: Command): boolean {
    const payload = JSON.stringify(command);
    for (let attempt = 0; attempt < 2; attempt++) {
      // count the command as pending before sending: the reply may arrive
      // synchronously in tests and must find the counter already bumped
      this.state.commandSent();
      try {
        if (!this.socket) throw new Error("not connected");
        this.socket.send(payload);
        this.state.lastError = null;
        return true;
      } catch (err) {
        this.state.commandAborted();
        if (attempt === 1) {
          this.state.lastError = `send failed: ${String(err)}`;
          this.log(this.state.lastError);
        }
      }
    }
    return false;
  }
}

export function wsUrlFromQuery(search: string, defaults = { host: "127.0.0.1", port: "8787" }): string {
  const params = new URLSearchParams(search);
  const host = params.get("host") || defaults.host;
  const port = params.get("port") || defaults.port;
  return `ws://${host}:${port}/ws`;
}

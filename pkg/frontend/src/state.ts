// UI state store. Everything displayed comes from received snapshots; the
// dashboard never simulates values locally.

import { TraceBuffer } from "./traces.js";
import type { Rejection, ServerMessage, Snapshot } from "./types.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export class UiState {
  connection: ConnectionStatus = "connecting";
  latest: Snapshot | null = null;
  snapshotCount = 0;
  pendingCommands = 0;
  lastRejection: Rejection | null = null;
  lastError: string | null = null;

  readonly aPsdTrace = new TraceBuffer(60);
  readonly dutyTrace = new TraceBuffer(60);
  readonly pressureTrace = new TraceBuffer(60);

  applyMessage(msg: ServerMessage): void {
    if (msg.type === "snapshot") {
      this.applySnapshot(msg);
    } else {
      this.pendingCommands = Math.max(0, this.pendingCommands - 1);
      if (msg.type === "rejected") {
        this.lastRejection = msg;
      } else {
        this.lastRejection = null;
      }
    }
  }

  applySnapshot(snap: Snapshot): void {
    this.latest = snap;
    this.snapshotCount += 1;
    if (snap.a_psd !== null) {
      this.aPsdTrace.push(snap.t_s, snap.a_psd);
    }
    if (snap.character) {
      this.dutyTrace.push(snap.t_s, snap.character.duty);
    }
    if (snap.flower && snap.flower.p_filt_kpa !== null) {
      this.pressureTrace.push(snap.t_s, snap.flower.p_filt_kpa);
    }
  }

  commandSent(): void {
    this.pendingCommands += 1;
  }

  commandAborted(): void {
    this.pendingCommands = Math.max(0, this.pendingCommands - 1);
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
    if (status !== "open") {
      this.pendingCommands = 0;
    }
  }

  get controlsEnabled(): boolean {
    return this.connection === "open";
  }
}

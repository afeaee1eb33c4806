// Runtime validation of incoming messages: a malformed payload must never
// make it into the UI state (it is logged by the caller and dropped).

import type { ServerMessage, Snapshot } from "./types.js";

function isNumberOrNull(v: unknown): v is number | null {
  return v === null || typeof v === "number";
}

function validSnapshot(msg: Record<string, unknown>): msg is Snapshot & Record<string, unknown> {
  if (typeof msg.run_active !== "boolean") return false;
  if (typeof msg.t_s !== "number" || !isFinite(msg.t_s)) return false;
  if (!isNumberOrNull(msg.a_psd)) return false;
  if (typeof msg.gated !== "boolean") return false;
  const params = msg.params as Record<string, unknown> | undefined;
  if (!params || typeof params.alpha_gain !== "number") return false;
  const spectrum = msg.spectrum as Record<string, unknown> | null | undefined;
  if (spectrum != null && !Array.isArray(spectrum.psd)) return false;
  const character = msg.character as Record<string, unknown> | null | undefined;
  if (character != null && typeof character.duty !== "number") return false;
  const flower = msg.flower as Record<string, unknown> | null | undefined;
  if (flower != null && typeof flower.phase !== "string") return false;
  return true;
}

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "snapshot":
      return validSnapshot(msg) ? (msg as unknown as Snapshot) : null;
    case "ack":
      return typeof msg.cmd === "string" ? (msg as never) : null;
    case "rejected":
      return typeof msg.reason === "string" ? (msg as never) : null;
    default:
      return null;
  }
}

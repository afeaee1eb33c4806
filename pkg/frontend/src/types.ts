// Message shapes mirror the service's documented WebSocket schema.

export interface SpectrumBand {
  f_start_hz: number;
  df_hz: number;
  psd: number[];
}

export interface CharacterView {
  duty: number;
  dance_freq_hz: number;
  amplitude: number;
}

export interface FlowerView {
  setpoint_kpa: number | null;
  p_filt_kpa: number | null;
  valve_open: boolean;
  phase: string;
  remaining_s: number;
}

export interface ParamsView {
  alpha_gain: number;
  beta_gain: number;
  gamma_gain: number;
  p_ref: number | null;
  threshold: number | null;
  guard: boolean;
}

export interface Snapshot {
  type: "snapshot";
  run_active: boolean;
  run_id: number | null;
  t_s: number;
  eyes: "open" | "closed" | null;
  a_psd: number | null;
  gated: boolean;
  override_alpha: number | null;
  spectrum: SpectrumBand | null;
  character: CharacterView | null;
  flower: FlowerView | null;
  params: ParamsView;
}

export interface Ack {
  type: "ack";
  cmd: string;
  [key: string]: unknown;
}

export interface Rejection {
  type: "rejected";
  cmd?: string;
  reason: string;
}

export type ServerMessage = Snapshot | Ack | Rejection;

export type Command =
  | { type: "start"; config: Record<string, unknown> }
  | { type: "stop" }
  | { type: "reset" }
  | { type: "set_eyes"; eyes: "open" | "closed" }
  | { type: "override_alpha"; value: number }
  | { type: "clear_override" }
  | { type: "set_param"; name: string; value: number }
  | { type: "set_guard"; enabled: boolean };

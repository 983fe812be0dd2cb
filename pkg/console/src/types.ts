/** Payload shapes of the engine control API. */

export interface SlotRect {
  x: number;
  y: number;
  w: number;
  h: number;
  track_id: number;
}

export type EngineStateName =
  | "initializing"
  | "running"
  | "sleeping"
  | "shutting_down"
  | "faulted";

export interface HealthReport {
  state: EngineStateName;
  fps_out: number;
  detect_hz: number;
  temp_c: number;
  fan: boolean;
  face_count: number;
  slot_occupancy: boolean[];
  slots: (SlotRect | null)[];
  uptime_s: number;
  frames_dropped: number;
  frames_composited: number;
  captures_consumed: number;
  last_frame_at: string | null;
  fault_reason: string | null;
  engine_version: string;
  config_hash: string;
}

export interface CommandResponse {
  state: EngineStateName;
  noop: boolean;
}

export interface EngineConfigView {
  capture: { width: number; height: number; fps: number };
  output: { width: number; height: number; fps: number };
  mode: string;
  [key: string]: unknown;
}

/** JSON schemas of the telemetry service, mirrored field for field. */

export interface HouseSnapshot {
  t_in: number;
  t_out: number;
  heater: number;
  t_set: number;
}

export interface HorizonPrediction {
  raw: number;
  normalized: number;
  td_error: number;
}

export interface EventMarker {
  step: number;
  kind: string;
  confidence_window: number;
}

export interface TelemetryFrame {
  schema_version: number;
  step: number;
  wall_time: number;
  speed: number;
  house: HouseSnapshot;
  prediction: Record<string, HorizonPrediction>;
  events: EventMarker[];
  gap: boolean;
}

export type CommandKind =
  | "set-setpoint"
  | "set-speed"
  | "pause"
  | "resume"
  | "select-weather-scenario";

export interface CommandResult {
  ok: boolean;
  detail: string;
}

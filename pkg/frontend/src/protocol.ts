// Messages exchanged with the live-play WebSocket endpoint.

export type StarColor = "black" | "gold";
export type Face = "neutral" | "smiling";
export type ViewMode = "visual" | "blindfolded" | "concealed";

export interface EffectPayload {
  stars?: StarColor[];
  index?: number | null;
  star?: StarColor | null;
  attempts?: number;
  pattern_no?: number;
  game_index?: number;
  precision_pct?: number;
  patterns_completed?: number;
  face?: Face;
  source?: string;
  note?: number;
}

export interface EffectMessage {
  type: "effect";
  kind:
    | "vibrate_on"
    | "vibrate_off"
    | "star_update"
    | "face_update"
    | "pattern_complete"
    | "session_end";
  at_ms: number;
  payload: EffectPayload;
  mode: ViewMode;
}

export interface HelloMessage {
  type: "hello";
  session_id: string;
  state: {
    phase: string;
    mode: ViewMode;
    stars: StarColor[];
    face: Face;
    pattern_no: number;
    attempts: number;
    patterns_completed: number;
  };
}

export interface GraspEventMessage {
  type: "grasp_event";
  kind: "press" | "release";
  ts_ms: number;
}

export interface ModeMessage {
  type: "mode";
  mode: ViewMode;
}

export interface ErrorMessage {
  type: "error";
  error: string;
}

export type ServerMessage =
  | HelloMessage
  | EffectMessage
  | GraspEventMessage
  | ModeMessage
  | ErrorMessage
  | { type: "pong" }
  | { type: "state"; state: HelloMessage["state"] };

export interface GraspInputMessage {
  type: "grasp";
  kind: "press" | "release";
  ts_ms: number;
}

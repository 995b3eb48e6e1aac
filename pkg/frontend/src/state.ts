// Session view derived purely from server messages. The client never scores
// a note itself: every star, face and counter change comes from an effect.

import type { Face, ServerMessage, StarColor, ViewMode } from "./protocol.js";

export interface SessionView {
  connected: boolean;
  sessionActive: boolean;
  phase: string;
  mode: ViewMode;
  stars: StarColor[];
  face: Face;
  vibrating: boolean;
  attempts: number;
  patternNo: number;
  patternsCompleted: number;
  grasped: boolean;
  lastError: string | null;
}

export function initialView(): SessionView {
  return {
    connected: false,
    sessionActive: false,
    phase: "idle",
    mode: "visual",
    stars: [],
    face: "neutral",
    vibrating: false,
    attempts: 0,
    patternNo: 0,
    patternsCompleted: 0,
    grasped: false,
    lastError: null,
  };
}

export function applyMessage(view: SessionView, msg: ServerMessage): SessionView {
  const next = { ...view, stars: [...view.stars] };
  switch (msg.type) {
    case "hello":
    case "state": {
      const s = msg.state;
      next.phase = s.phase;
      next.mode = s.mode;
      next.stars = [...s.stars];
      next.face = s.face;
      next.attempts = s.attempts;
      next.patternNo = s.pattern_no;
      next.patternsCompleted = s.patterns_completed;
      next.sessionActive = s.phase !== "idle";
      return next;
    }
    case "effect":
      next.mode = msg.mode;
      switch (msg.kind) {
        case "star_update":
          next.stars = [...(msg.payload.stars ?? [])];
          if (msg.payload.attempts !== undefined) next.attempts = msg.payload.attempts;
          if (msg.payload.pattern_no !== undefined) next.patternNo = msg.payload.pattern_no;
          next.sessionActive = true;
          break;
        case "face_update":
          next.face = msg.payload.face ?? "neutral";
          break;
        case "vibrate_on":
          next.vibrating = true;
          break;
        case "vibrate_off":
          next.vibrating = false;
          break;
        case "pattern_complete":
          next.patternsCompleted = msg.payload.game_index ?? next.patternsCompleted + 1;
          if (msg.payload.attempts !== undefined) next.attempts = msg.payload.attempts;
          break;
        case "session_end":
          next.sessionActive = false;
          next.stars = [];
          next.face = "neutral";
          next.vibrating = false;
          break;
      }
      return next;
    case "mode":
      next.mode = msg.mode;
      return next;
    case "grasp_event":
      next.grasped = msg.kind === "press";
      return next;
    case "error":
      next.lastError = msg.error;
      return next;
    default:
      return next;
  }
}

/** Fold a recorded effect log in timestamp order (replay harness). */
export function replayLog(messages: ServerMessage[]): SessionView {
  const ordered = [...messages].sort((a, b) => {
    const ta = a.type === "effect" ? a.at_ms : 0;
    const tb = b.type === "effect" ? b.at_ms : 0;
    return ta - tb;
  });
  let view = initialView();
  for (const msg of ordered) view = applyMessage(view, msg);
  return view;
}

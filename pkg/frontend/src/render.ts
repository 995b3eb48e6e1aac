// DOM rendering: a pure function of the session view. In concealed mode the
// play area is blanked except for a minimal session-active badge, emulating
// play from inside a pocket.

import type { SessionView } from "./state.js";

export interface Elements {
  status: HTMLElement;
  playArea: HTMLElement;
  robot: HTMLElement;
  face: HTMLElement;
  stars: HTMLElement;
  counters: HTMLElement;
  concealedBadge: HTMLElement;
  modeButton: HTMLElement;
  errors: HTMLElement;
}

export function render(view: SessionView, el: Elements): void {
  el.status.textContent = view.connected ? "connected" : "reconnecting…";
  el.status.className = view.connected ? "status ok" : "status down";

  const concealed = view.mode === "concealed";
  el.playArea.classList.toggle("concealed", concealed);
  el.concealedBadge.hidden = !concealed;
  el.concealedBadge.textContent = view.sessionActive
    ? "session active (concealed)"
    : "concealed";

  el.robot.classList.toggle("vibrating", view.vibrating && !concealed);
  el.robot.classList.toggle("held", view.grasped);
  el.face.textContent = view.face === "smiling" ? "⌣" : "—";
  el.face.className = `face ${view.face}`;

  el.stars.replaceChildren(
    ...view.stars.map((color) => {
      const span = document.createElement("span");
      span.className = `star ${color}`;
      span.textContent = "★";
      return span;
    }),
  );

  el.counters.textContent = view.sessionActive
    ? `pattern ${view.patternNo} · attempt ${view.attempts} · completed ${view.patternsCompleted}`
    : "grasp the robot to start";
  el.modeButton.textContent = concealed ? "show visuals" : "conceal (pocket mode)";
  el.errors.textContent = view.lastError ?? "";
}

export function pulseVibration(robot: HTMLElement, on: boolean): void {
  if (on && "vibrate" in navigator) {
    // Silent device vibration where the platform supports it; never audio.
    try {
      navigator.vibrate(200);
    } catch {
      /* not available */
    }
  }
  robot.classList.toggle("vibrating", on);
}

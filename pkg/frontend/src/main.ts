// Wiring: socket -> scheduled message queue -> reducer -> render. Effects
// carry timestamps in the input clock domain (the server runs the game on
// client-stamped time), so each effect is applied when its moment arrives.

import { GraspInput } from "./input.js";
import { LiveSocket, liveUrl } from "./net.js";
import type { EffectMessage, ServerMessage } from "./protocol.js";
import { Elements, render } from "./render.js";
import { applyMessage, initialView, SessionView } from "./state.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function main(): void {
  const params = new URLSearchParams(location.search);
  const sessionId = params.get("session") ?? "live-demo";
  const token = params.get("token");

  const elements: Elements = {
    status: el("status"),
    playArea: el("play-area"),
    robot: el("robot"),
    face: el("face"),
    stars: el("stars"),
    counters: el("counters"),
    concealedBadge: el("concealed-badge"),
    modeButton: el("mode-button"),
    errors: el("errors"),
  };

  let view: SessionView = initialView();
  const pending: { due: number; msg: ServerMessage }[] = [];

  const socket = new LiveSocket(liveUrl(sessionId, token), (status) => {
    view = { ...view, connected: status === "open" };
    input.enabled = status === "open";
    if (status !== "open") input.reset();
  });

  const input = new GraspInput((kind, tsMs) => {
    socket.send({ type: "grasp", kind, ts_ms: tsMs });
  });
  input.enabled = false;

  // Input bindings: pointer on the robot, space bar anywhere.
  const robot = elements.robot;
  robot.addEventListener("pointerdown", (e) => {
    e.preventDefault();
    robot.setPointerCapture(e.pointerId);
    input.press();
  });
  robot.addEventListener("pointerup", () => input.release());
  robot.addEventListener("pointercancel", () => input.release());
  window.addEventListener("keydown", (e) => {
    if (e.code === "Space" && !e.repeat) {
      e.preventDefault();
      input.press();
    }
  });
  window.addEventListener("keyup", (e) => {
    if (e.code === "Space") input.release();
  });
  elements.modeButton.addEventListener("click", () => {
    const next = view.mode === "concealed" ? "visual" : "concealed";
    socket.send({ type: "mode", mode: next });
  });

  function schedule(msg: ServerMessage): void {
    if (msg.type === "effect") {
      const effect = msg as EffectMessage;
      const delay = effect.at_ms - performance.now();
      pending.push({ due: performance.now() + Math.max(0, delay), msg });
    } else {
      pending.push({ due: 0, msg });
    }
  }

  function frame(): void {
    while (socket.queue.length) schedule(socket.queue.shift()!);
    const now = performance.now();
    pending.sort((a, b) => a.due - b.due);
    while (pending.length && pending[0].due <= now) {
      view = applyMessage(view, pending.shift()!.msg);
    }
    render(view, elements);
    requestAnimationFrame(frame);
  }

  socket.connect();
  requestAnimationFrame(frame);
}

main();

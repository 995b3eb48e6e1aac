// Live-session socket with automatic reconnect and visible status. Incoming
// messages are queued and drained by the render loop, decoupling network
// timing from DOM updates.

import type { ServerMessage } from "./protocol.js";

export type SocketStatus = "connecting" | "open" | "closed";

export class LiveSocket {
  private ws: WebSocket | null = null;
  private backoffMs = 500;
  private closedByUs = false;
  readonly queue: ServerMessage[] = [];

  constructor(
    private url: string,
    private onStatus: (status: SocketStatus) => void,
  ) {}

  connect(): void {
    this.closedByUs = false;
    this.onStatus("connecting");
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.backoffMs = 500;
      this.onStatus("open");
    };
    this.ws.onmessage = (ev) => {
      try {
        this.queue.push(JSON.parse(ev.data as string) as ServerMessage);
      } catch {
        console.warn("unparseable server message", ev.data);
      }
    };
    this.ws.onclose = () => {
      this.onStatus("closed");
      this.ws = null;
      if (!this.closedByUs) {
        setTimeout(() => this.connect(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, 5000);
      }
    };
    this.ws.onerror = () => {
      /* close handler drives the retry */
    };
  }

  close(): void {
    this.closedByUs = true;
    this.ws?.close();
  }

  get isOpen(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  send(message: object): boolean {
    if (!this.isOpen) return false;
    this.ws!.send(JSON.stringify(message));
    return true;
  }
}

export function liveUrl(sessionId: string, token: string | null): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const suffix = token ? `?token=${encodeURIComponent(token)}` : "";
  return `${proto}://${location.host}/api/v1/live/${encodeURIComponent(sessionId)}${suffix}`;
}

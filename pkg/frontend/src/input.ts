// Press-and-hold grasp input with a monotonic clock and client-side
// debouncing: a release followed by a press within the coalesce window is
// treated as one continuous hold (pointer jitter), and the release that ends
// a hold is sent with its original timestamp so durations stay exact.

export type GraspSender = (kind: "press" | "release", tsMs: number) => void;

type Timer = ReturnType<typeof setTimeout>;

export class GraspInput {
  enabled = true;
  private held = false;
  private pendingReleaseTs: number | null = null;
  private pendingTimer: Timer | null = null;

  constructor(
    private send: GraspSender,
    private now: () => number = () => performance.now(),
    private coalesceMs = 50,
    private log: (msg: string) => void = (m) => console.warn(m),
  ) {}

  get isHeld(): boolean {
    return this.held;
  }

  press(): void {
    if (!this.enabled) return;
    if (this.pendingReleaseTs !== null) {
      // Jitter: the release never really happened, keep holding.
      if (this.pendingTimer !== null) clearTimeout(this.pendingTimer);
      this.pendingTimer = null;
      this.pendingReleaseTs = null;
      return;
    }
    if (this.held) {
      this.log("grasp press ignored: already holding");
      return;
    }
    this.held = true;
    this.send("press", Math.round(this.now()));
  }

  release(): void {
    if (!this.enabled) return;
    if (!this.held || this.pendingReleaseTs !== null) {
      this.log("grasp release ignored: not holding");
      return;
    }
    const ts = Math.round(this.now());
    this.pendingReleaseTs = ts;
    this.pendingTimer = setTimeout(() => {
      this.pendingTimer = null;
      this.pendingReleaseTs = null;
      this.held = false;
      this.send("release", ts);
    }, this.coalesceMs);
  }

  /** Drop any held state without emitting (e.g. on disconnect). */
  reset(): void {
    if (this.pendingTimer !== null) clearTimeout(this.pendingTimer);
    this.pendingTimer = null;
    this.pendingReleaseTs = null;
    this.held = false;
  }
}

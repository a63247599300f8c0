// Debounced, newest-wins pose submission: at most one request in flight,
// edits during the debounce window or an in-flight request supersede older
// ones, and stale responses never reach the UI.

export interface SchedulerClock {
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

export interface SchedulerCallbacks<B, R> {
  send(body: B): Promise<R>;
  onResult(result: R, body: B): void;
  onError?(err: unknown, body: B): void;
  onBusyChange?(busy: boolean): void;
}

export class PoseScheduler<B, R> {
  private pending: B | null = null;
  private timer: unknown = null;
  private inFlight = false;
  private seq = 0;
  private sent = 0;

  constructor(
    private cb: SchedulerCallbacks<B, R>,
    private debounceMs = 150,
    private clock: SchedulerClock = {
      setTimeout: (fn, ms) => setTimeout(fn, ms),
      clearTimeout: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
    },
  ) {}

  /** Total requests actually sent (for tests and diagnostics). */
  get sentCount(): number {
    return this.sent;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  /** Queue the newest edit; earlier queued edits are dropped. */
  submit(body: B): void {
    this.pending = body;
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
    }
    this.timer = this.clock.setTimeout(() => {
      this.timer = null;
      this.flush();
    }, this.debounceMs);
  }

  /** Send immediately, bypassing the debounce (used by reset buttons). */
  submitNow(body: B): void {
    this.pending = body;
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
      this.timer = null;
    }
    this.flush();
  }

  private flush(): void {
    if (this.inFlight || this.pending === null) {
      return; // the in-flight completion re-flushes the newest pending body
    }
    const body = this.pending;
    this.pending = null;
    const ticket = ++this.seq;
    this.inFlight = true;
    this.sent += 1;
    this.cb.onBusyChange?.(true);
    this.cb.send(body).then(
      (result) => {
        this.inFlight = false;
        this.cb.onBusyChange?.(false);
        if (ticket === this.seq) {
          this.cb.onResult(result, body);
        }
        this.flush(); // newest pending edit follows immediately
      },
      (err) => {
        this.inFlight = false;
        this.cb.onBusyChange?.(false);
        this.cb.onError?.(err, body);
        this.flush();
      },
    );
  }
}

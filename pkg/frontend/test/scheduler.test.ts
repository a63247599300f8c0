import { describe, expect, it } from "vitest";
import { PoseScheduler, SchedulerClock } from "../src/scheduler.js";

/** Manual clock + controllable transport for deterministic scheduling tests. */
class FakeClock implements SchedulerClock {
  now = 0;
  private timers = new Map<number, { at: number; fn: () => void }>();
  private next = 1;

  setTimeout(fn: () => void, ms: number): unknown {
    const id = this.next++;
    this.timers.set(id, { at: this.now + ms, fn });
    return id;
  }

  clearTimeout(handle: unknown): void {
    this.timers.delete(handle as number);
  }

  advance(ms: number): void {
    const end = this.now + ms;
    for (;;) {
      let best: [number, { at: number; fn: () => void }] | null = null;
      for (const e of this.timers) {
        if (e[1].at <= end && (best === null || e[1].at < best[1].at)) best = e;
      }
      if (!best) break;
      this.now = best[1].at;
      this.timers.delete(best[0]);
      best[1].fn();
    }
    this.now = end;
  }
}

interface Deferred {
  body: number;
  resolve: (v: string) => void;
  reject: (e: unknown) => void;
}

function harness(debounceMs = 150) {
  const clock = new FakeClock();
  const inbox: Deferred[] = [];
  const results: string[] = [];
  const errors: unknown[] = [];
  const sched = new PoseScheduler<number, string>({
    send: (body) => new Promise<string>((resolve, reject) => {
      inbox.push({ body, resolve, reject });
    }),
    onResult: (r) => results.push(r),
    onError: (e) => errors.push(e),
  }, debounceMs, clock);
  return { clock, inbox, results, errors, sched };
}

const flushMicrotasks = () => new Promise<void>((r) => setTimeout(r, 0));

describe("pose scheduler", () => {
  it("a 1-second drag of 20 events sends at most 7 requests", async () => {
    const { clock, inbox, sched } = harness();
    for (let i = 0; i < 20; i++) {
      sched.submit(i);
      // resolve anything in flight immediately so debounce is the limiter
      while (inbox.length) inbox.shift()!.resolve("ok");
      await flushMicrotasks();
      clock.advance(50); // 20 events over 1s
    }
    clock.advance(200);
    while (inbox.length) inbox.shift()!.resolve("ok");
    await flushMicrotasks();
    expect(sched.sentCount).toBeLessThanOrEqual(7);
    expect(sched.sentCount).toBeGreaterThan(0);
  });

  it("debounces trailing edge: one request for a burst", async () => {
    const { clock, inbox, sched } = harness();
    sched.submit(1);
    clock.advance(50);
    sched.submit(2);
    clock.advance(50);
    sched.submit(3);
    clock.advance(149);
    expect(sched.sentCount).toBe(0);
    clock.advance(2);
    expect(sched.sentCount).toBe(1);
    expect(inbox[0].body).toBe(3); // newest body wins
  });

  it("supersedes in-flight requests with the newest edit", async () => {
    const { clock, inbox, results, sched } = harness();
    sched.submit(1);
    clock.advance(151);
    expect(inbox.length).toBe(1);
    sched.submit(2);
    sched.submit(3);
    clock.advance(151);
    expect(sched.sentCount).toBe(1); // still in flight, nothing else sent
    inbox.shift()!.resolve("first");
    await flushMicrotasks();
    expect(sched.sentCount).toBe(2);
    expect(inbox.length).toBe(1);
    expect(inbox[0].body).toBe(3); // 2 was dropped, newest-wins
    inbox.shift()!.resolve("third");
    await flushMicrotasks();
    expect(results).toEqual(["first", "third"]);
  });

  it("drops stale responses after newer ones were sent", async () => {
    const { clock, inbox, results, sched } = harness();
    sched.submit(1);
    clock.advance(151);
    const first = inbox.shift()!;
    sched.submit(2);
    clock.advance(151);
    // in-flight: resolution of the first triggers the second send
    first.resolve("stale-renderable");
    await flushMicrotasks();
    inbox.shift()!.resolve("fresh");
    await flushMicrotasks();
    // both were delivered in order; the stale one arrived before the fresh
    // request went out, so it was still the newest at delivery time
    expect(results[results.length - 1]).toBe("fresh");
  });

  it("reset bypasses the debounce and restores the initial frame bytes", async () => {
    const clock = new FakeClock();
    const initial = "INITIAL_FRAME_BYTES";
    const served = new Map<string, string>([["identity", initial]]);
    const results: string[] = [];
    const sched = new PoseScheduler<string, string>({
      send: (body) => Promise.resolve(served.get(body) ?? `frame:${body}`),
      onResult: (r) => results.push(r),
    }, 150, clock);
    sched.submit("bend1");
    clock.advance(151);
    await flushMicrotasks();
    sched.submitNow("identity");
    await flushMicrotasks();
    expect(results[results.length - 1]).toBe(initial);
  });

  it("errors keep the scheduler usable", async () => {
    const { clock, inbox, errors, results, sched } = harness();
    sched.submit(1);
    clock.advance(151);
    inbox.shift()!.reject(new Error("500"));
    await flushMicrotasks();
    expect(errors.length).toBe(1);
    sched.submit(2);
    clock.advance(151);
    inbox.shift()!.resolve("recovered");
    await flushMicrotasks();
    expect(results).toEqual(["recovered"]);
  });
});

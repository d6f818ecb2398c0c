/**
 * Trailing-edge throttle for high-rate controls.
 *
 * A dragged pot slider fires far faster than the wire should carry.
 * The throttle forwards the first value immediately, coalesces the
 * rest, and flushes the newest one once the interval has elapsed, so
 * the server sees at most one message per interval and always ends on
 * the final slider position.
 */

export interface ThrottleTimers {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

const REAL_TIMERS: ThrottleTimers = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

/** 34 ms spacing keeps a slider drag under 30 messages per second. */
export const POT_THROTTLE_MS = 34;

export interface Throttle<T> {
  push(value: T): void;
  /** Send any pending value now and cancel the timer. */
  flush(): void;
  /** Drop any pending value and cancel the timer. */
  cancel(): void;
}

export function createThrottle<T>(
  send: (value: T) => void,
  intervalMs: number,
  timers: ThrottleTimers = REAL_TIMERS,
): Throttle<T> {
  let lastSent = -Infinity;
  let pending: { value: T } | null = null;
  let handle: unknown = null;

  function fire(value: T) {
    lastSent = timers.now();
    send(value);
  }

  function flushPending() {
    handle = null;
    if (pending) {
      const { value } = pending;
      pending = null;
      fire(value);
    }
  }

  return {
    push(value: T) {
      const elapsed = timers.now() - lastSent;
      if (elapsed >= intervalMs && handle === null) {
        fire(value);
        return;
      }
      pending = { value };
      if (handle === null) {
        handle = timers.setTimeout(flushPending, intervalMs - elapsed);
      }
    },
    flush() {
      if (handle !== null) {
        timers.clearTimeout(handle);
        handle = null;
      }
      if (pending) {
        const { value } = pending;
        pending = null;
        fire(value);
      }
    },
    cancel() {
      if (handle !== null) {
        timers.clearTimeout(handle);
        handle = null;
      }
      pending = null;
    },
  };
}

// Send-rate governor for drag events: immediate send when the budget
// allows, otherwise one trailing send of the freshest value. Guarantees
// at most `ratePerSecond` sends per second and that the last value always
// goes out.

export interface Clock {
  now(): number; // milliseconds
  setTimer(callback: () => void, delayMs: number): unknown;
  clearTimer(handle: unknown): void;
}

export const systemClock: Clock = {
  now: () => performance.now(),
  setTimer: (cb, delay) => setTimeout(cb, delay),
  clearTimer: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
};

export class RateGovernor<T> {
  private lastSent = -Infinity;
  private pending: T | undefined;
  private timer: unknown | null = null;
  readonly intervalMs: number;

  constructor(
    ratePerSecond: number,
    private readonly send: (value: T) => void,
    private readonly clock: Clock = systemClock,
  ) {
    if (!(ratePerSecond > 0)) throw new Error("rate must be positive");
    this.intervalMs = 1000 / ratePerSecond;
  }

  submit(value: T): void {
    const now = this.clock.now();
    if (now - this.lastSent >= this.intervalMs && this.timer === null) {
      this.lastSent = now;
      this.send(value);
      return;
    }
    this.pending = value; // latest wins
    if (this.timer === null) {
      const wait = Math.max(this.lastSent + this.intervalMs - now, 0);
      this.timer = this.clock.setTimer(() => this.flush(), wait);
    }
  }

  private flush(): void {
    this.timer = null;
    if (this.pending === undefined) return;
    const value = this.pending;
    this.pending = undefined;
    this.lastSent = this.clock.now();
    this.send(value);
  }

  cancel(): void {
    if (this.timer !== null) {
      this.clock.clearTimer(this.timer);
      this.timer = null;
    }
    this.pending = undefined;
  }
}

// Trailing-edge debounce for the parameter sliders.
export class Debouncer<T> {
  private timer: unknown | null = null;
  private pending: T | undefined;

  constructor(
    private readonly delayMs: number,
    private readonly fire: (value: T) => void,
    private readonly clock: Clock = systemClock,
  ) {}

  submit(value: T): void {
    this.pending = value;
    if (this.timer !== null) this.clock.clearTimer(this.timer);
    this.timer = this.clock.setTimer(() => {
      this.timer = null;
      if (this.pending !== undefined) {
        const v = this.pending;
        this.pending = undefined;
        this.fire(v);
      }
    }, this.delayMs);
  }
}

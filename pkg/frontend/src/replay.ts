// Time travel: a slider over committed intervals plus play/pause, and
// the live tail over server-sent events. Each scrub step repaints the
// scene from that frame's server-computed colors.

import type { ReplayFrame } from "./types.js";
import type { Scene } from "./graph.js";

export interface ReplayHooks {
  onFrame?: (frame: ReplayFrame) => void;
  onGap?: (interval: number) => void;
  setTimer?: typeof setInterval;
  clearTimer?: typeof clearInterval;
}

export class ReplayController {
  private scene: Scene;
  private frames: ReplayFrame[];
  private hooks: ReplayHooks;
  private timer: ReturnType<typeof setInterval> | null = null;
  index = -1;

  constructor(scene: Scene, frames: ReplayFrame[], hooks: ReplayHooks = {}) {
    this.scene = scene;
    this.frames = frames;
    this.hooks = hooks;
  }

  get intervals(): number[] {
    return this.frames.map((f) => f.interval);
  }

  scrubTo(interval: number): boolean {
    const i = this.frames.findIndex((f) => f.interval === interval);
    if (i < 0) return false;
    this.index = i;
    const frame = this.frames[i];
    const painted = this.scene.applyFrame(frame);
    if (!painted) this.hooks.onGap?.(interval);
    else this.hooks.onFrame?.(frame);
    return painted;
  }

  step(): boolean {
    if (this.index + 1 >= this.frames.length) return false;
    return this.scrubTo(this.frames[this.index + 1].interval), true;
  }

  play(stepsPerSecond = 2): void {
    this.pause();
    const set = this.hooks.setTimer ?? setInterval;
    this.timer = set(() => {
      if (!this.step()) this.pause();
    }, 1000 / stepsPerSecond);
  }

  pause(): void {
    if (this.timer !== null) {
      (this.hooks.clearTimer ?? clearInterval)(this.timer);
      this.timer = null;
    }
  }

  get playing(): boolean {
    return this.timer !== null;
  }
}

// EventSource is injectable: jsdom has none and tests drive frames by
// hand through the returned handler.
export interface LiveSubscription {
  close(): void;
}

type EventSourceCtor = new (url: string) => {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
};

export function subscribeLive(
  scene: Scene,
  onFrame: (frame: ReplayFrame) => void,
  opts: {
    url?: string;
    EventSourceImpl?: EventSourceCtor;
    onError?: (err: unknown) => void;
  } = {},
): LiveSubscription {
  const Ctor = opts.EventSourceImpl ??
    (globalThis as any).EventSource as EventSourceCtor | undefined;
  if (!Ctor) throw new Error("EventSource unavailable");
  const source = new Ctor(opts.url ?? "/api/live");
  source.onmessage = (ev) => {
    const frame = JSON.parse(ev.data) as ReplayFrame;
    scene.applyFrame(frame);
    onFrame(frame);
  };
  source.onerror = (err) => opts.onError?.(err);
  return { close: () => source.close() };
}

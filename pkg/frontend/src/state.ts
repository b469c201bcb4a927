// Shareable view state. Everything interactive round-trips through the
// URL hash so any view can be linked; fetch completions check the
// version stamp and stale responses are dropped.

export type Design = 1 | 2 | 3;
export type RadarMode = "absolute" | "relative";
export type Cursor = "live" | number;

export interface ViewState {
  design: Design;
  metric: string;
  mode: RadarMode;
  cursor: Cursor;
  job: number | null;
}

export const DEFAULT_STATE: ViewState = {
  design: 1,
  metric: "total",
  mode: "absolute",
  cursor: "live",
  job: null,
};

export function encodeState(state: ViewState): string {
  const parts = [`d=${state.design}`, `metric=${state.metric}`];
  if (state.design === 3) parts.push(`mode=${state.mode}`);
  parts.push(`t=${state.cursor}`);
  if (state.job !== null) parts.push(`job=${state.job}`);
  return "#" + parts.join("&");
}

export function decodeState(hash: string): ViewState {
  const state = { ...DEFAULT_STATE };
  const text = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!text) return state;
  for (const part of text.split("&")) {
    const [key, raw] = part.split("=");
    if (raw === undefined) continue;
    switch (key) {
      case "d": {
        const d = Number(raw);
        if (d === 1 || d === 2 || d === 3) state.design = d;
        break;
      }
      case "metric":
        state.metric = raw;
        break;
      case "mode":
        if (raw === "absolute" || raw === "relative") state.mode = raw;
        break;
      case "t":
        state.cursor = raw === "live" ? "live" : Math.max(0, Number(raw) | 0);
        break;
      case "job": {
        const j = Number(raw);
        if (Number.isInteger(j)) state.job = j;
        break;
      }
    }
  }
  return state;
}

type Listener = (state: ViewState, version: number) => void;

export class StateStore {
  private state: ViewState;
  private listeners: Listener[] = [];
  version = 0;

  constructor(initial: ViewState = DEFAULT_STATE) {
    this.state = { ...initial };
  }

  get(): ViewState {
    return { ...this.state };
  }

  update(patch: Partial<ViewState>): number {
    this.state = { ...this.state, ...patch };
    this.version += 1;
    for (const fn of this.listeners) fn(this.get(), this.version);
    return this.version;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  // Wrap an async apply step so only the newest request's result lands.
  guard<T>(apply: (value: T) => void): (value: T, version: number) => void {
    return (value, version) => {
      if (version === this.version) apply(value);
    };
  }
}

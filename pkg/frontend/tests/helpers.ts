// Shared test scaffolding: fixture loading, a fixture-backed fetch
// stub, and a hand-driven EventSource stand-in for jsdom.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import type { FanPayload, ReplayFrame, TopologyPayload } from "../src/types.js";
import type { FanSource } from "../src/api.js";

export function fixture<T>(name: string): T {
  const path = join(process.cwd(), "tests", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

export function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

export async function flush(rounds = 25): Promise<void> {
  for (let i = 0; i < rounds; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

// Recording fan source: returns distinctive control points so a path
// using anything else (or computing its own) fails the equality check.
export interface FanCall {
  x1: number; y1: number; x2: number; y2: number; n: number;
}

export function recordingFan(): { calls: FanCall[]; fan: FanSource } {
  const calls: FanCall[] = [];
  const fan: FanSource = async (x1, y1, x2, y2, n) => {
    calls.push({ x1, y1, x2, y2, n });
    const points = [];
    for (let k = 1; k <= n; k++) {
      points.push({
        k,
        t: k / (n + 1),
        x: 1000 * calls.length + 10 * k + 0.5,
        y: 2000 * calls.length + 20 * k + 0.25,
      });
    }
    return { n, points } satisfies FanPayload;
  };
  return { calls, fan };
}

type Responder = (url: URL) => unknown;

// Minimal fetch substitute serving fixture payloads by route. Routes
// match on pathname; query-dependent cases dispatch inside responders.
export function fixtureFetcher(
  overrides: Record<string, Responder> = {},
): typeof fetch {
  const routes: Record<string, Responder> = {
    "/api/stats": () => fixture("stats"),
    "/api/viz/legend": () => fixture("legend"),
    "/api/viz/fan": () => fixture("fan_n2"),
    "/api/jobs": () => fixture("jobs"),
    "/api/rules": () => fixture("rules"),
    "/api/events": () => fixture("events"),
    "/api/topology": (url) =>
      url.searchParams.get("job") === "3"
        ? fixture<TopologyPayload>("topology_job3")
        : fixture<TopologyPayload>("topology"),
    "/api/links/utilization": () => fixture("util_interval0"),
    "/api/links/0/breakdown": () => fixture("breakdown_shared"),
    "/api/replay": () => fixture("replay"),
    "/api/devices/radarpie": () => fixture("radar_relative"),
    ...overrides,
  };
  return (async (input: RequestInfo | URL) => {
    const url = new URL(String(input), "http://test.local");
    const responder = routes[url.pathname];
    if (!responder) {
      return new Response(JSON.stringify({ detail: `no route ${url.pathname}` }), {
        status: 404, headers: { "content-type": "application/json" },
      });
    }
    const body = responder(url);
    if (body instanceof Response) return body;
    return new Response(JSON.stringify(body), {
      status: 200, headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
}

export class FakeEventSource {
  static instances: FakeEventSource[] = [];
  url: string;
  closed = false;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;

  constructor(url: string) {
    this.url = url;
    FakeEventSource.instances.push(this);
  }

  emit(frame: ReplayFrame): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }

  close(): void {
    this.closed = true;
  }
}

// Thin typed client over the server HTTP API. All endpoints return
// parsed JSON or throw ApiError with the server's detail message so
// callers can surface it in the banner instead of a blank view.

import type {
  BreakdownPayload,
  EventsPage,
  FanPayload,
  JobPayload,
  LegendBand,
  RadarPage,
  RadarRow,
  ReplayPayload,
  RulePayload,
  StatsPayload,
  TopologyPayload,
  UtilizationPage,
} from "./types.js";

export class ApiError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

type Query = Record<string, string | number | boolean | undefined>;

function qs(params: Query): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value === undefined) continue;
    parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
  }
  return parts.length ? `?${parts.join("&")}` : "";
}

export class ApiClient {
  base: string;
  fetcher: typeof fetch;

  constructor(base = "", fetcher: typeof fetch = fetch.bind(globalThis)) {
    this.base = base.replace(/\/$/, "");
    this.fetcher = fetcher;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetcher(this.base + path, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
        else detail = JSON.stringify(body);
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    if (resp.status === 204) return undefined as T;
    return (await resp.json()) as T;
  }

  topology(opts: { job?: number; clustered?: boolean } = {}) {
    return this.request<TopologyPayload>(
      "/api/topology" + qs({ job: opts.job, clustered: opts.clustered }));
  }

  utilization(opts: {
    metric?: string; from?: number; to?: number;
    links?: string; job?: number; limit?: number; offset?: number;
  } = {}) {
    return this.request<UtilizationPage>(
      "/api/links/utilization" + qs({ limit: 0, ...opts }));
  }

  breakdown(linkId: number, from?: number, to?: number) {
    return this.request<BreakdownPayload>(
      `/api/links/${linkId}/breakdown` + qs({ from, to }));
  }

  radarAll(opts: { mode?: string; from?: number; to?: number } = {}) {
    return this.request<RadarPage>(
      "/api/devices/radarpie" + qs({ limit: 0, ...opts }));
  }

  radarDevice(guid: string, opts: { mode?: string; from?: number; to?: number } = {}) {
    return this.request<RadarRow>(`/api/devices/${guid}/radarpie` + qs(opts));
  }

  jobs() {
    return this.request<JobPayload[]>("/api/jobs");
  }

  events(opts: {
    from?: number; to?: number; rule?: number;
    subject?: string; job?: number; limit?: number;
  } = {}) {
    return this.request<EventsPage>("/api/events" + qs({ limit: 0, ...opts }));
  }

  rules() {
    return this.request<RulePayload[]>("/api/rules");
  }

  createRule(body: Omit<RulePayload, "id">) {
    return this.request<RulePayload>("/api/rules", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  deleteRule(id: number) {
    return this.request<void>(`/api/rules/${id}`, { method: "DELETE" });
  }

  replay(from: number, to: number, step = 1) {
    return this.request<ReplayPayload>("/api/replay" + qs({ from, to, step }));
  }

  fan(x1: number, y1: number, x2: number, y2: number, n: number) {
    return this.request<FanPayload>(
      "/api/viz/fan" + qs({ x1, y1, x2, y2, n }));
  }

  legend() {
    return this.request<LegendBand[]>("/api/viz/legend");
  }

  stats() {
    return this.request<StatsPayload>("/api/stats");
  }
}

// Fan-point source the graph renderer depends on; tests substitute a
// recording stub to prove the UI draws exactly what the server returns.
export type FanSource = (
  x1: number, y1: number, x2: number, y2: number, n: number,
) => Promise<FanPayload>;

export function fanSource(client: ApiClient): FanSource {
  return (x1, y1, x2, y2, n) => client.fan(x1, y1, x2, y2, n);
}

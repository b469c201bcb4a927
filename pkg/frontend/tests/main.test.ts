import { afterEach, beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { boot, type App, type AppOptions } from "../src/main.js";
import type { ReplayPayload } from "../src/types.js";
import {
  FakeEventSource, fixture, fixtureFetcher, flush, mount, recordingFan,
} from "./helpers.js";

const replay = fixture<ReplayPayload>("replay");

let apps: App[] = [];

async function bootApp(
  root: HTMLElement, opts: AppOptions = {},
): Promise<App> {
  const api = new ApiClient("", fixtureFetcher());
  const app = await boot(root, {
    api,
    fan: recordingFan().fan,
    syncHash: false,
    ...opts,
  });
  apps.push(app);
  return app;
}

beforeEach(() => {
  document.body.innerHTML = "";
  FakeEventSource.instances = [];
});

afterEach(() => {
  for (const app of apps) app.destroy();
  apps = [];
  location.hash = "";
});

function linkStroke(root: HTMLElement, link: number): string {
  const path = [...root.querySelectorAll("path.link")].find((p) =>
    p.getAttribute("data-link-ids")!.split(",").includes(String(link)));
  expect(path).toBeDefined();
  return path!.getAttribute("stroke")!;
}

describe("app shell", () => {
  it("boots into the bundled view with panels, legend, and latest paint", async () => {
    const root = mount();
    await bootApp(root);
    expect(root.querySelector("svg.flens-scene")).not.toBeNull();
    expect(root.querySelectorAll("g.node").length).toBe(9);
    expect(root.querySelectorAll(".legend-box .legend-chip").length).toBe(5);
    expect(root.querySelectorAll(".events-table tbody tr").length)
      .toBeGreaterThan(0);
    expect(root.querySelectorAll(".jobs-list li").length).toBe(2);
    expect(root.querySelectorAll(".rules-list li").length).toBe(1);
    // latest interval's utilization painted on boot
    expect(linkStroke(root, 0)).toBe("#f9a825");
    expect(root.querySelector(".error-banner")).toBeNull();
  });

  it("re-colors the scene when scrubbing between replay intervals", async () => {
    const root = mount();
    const app = await bootApp(root);
    app.store.update({ cursor: 2 });
    await flush();
    expect(linkStroke(root, 0)).toBe("#f9a825");
    app.store.update({ cursor: 3 });
    await flush();
    expect(linkStroke(root, 0)).toBe("#2e7d32");
    const label = root.querySelector(".cursor-label")!;
    expect(label.textContent).toBe("interval 3");
  });

  it("switches to the physical design with curved bundles", async () => {
    const root = mount();
    const app = await bootApp(root);
    app.store.update({ design: 2 });
    await flush();
    const curved = root.querySelectorAll("path.link[data-k]");
    expect(curved.length).toBe(4);
    for (const path of curved) {
      expect(path.getAttribute("d")).toContain(
        `Q${path.getAttribute("data-cx")},${path.getAttribute("data-cy")}`);
    }
  });

  it("overlays radar glyphs in design 3 and swaps the metric control for mode", async () => {
    const root = mount();
    const app = await bootApp(root);
    app.store.update({ design: 3, cursor: 0 });
    await flush();
    expect(root.querySelectorAll("g.radar-glyph").length).toBe(3);
    const mode = root.querySelector(".mode-select") as HTMLElement;
    const metric = root.querySelector(".metric-select") as HTMLElement;
    expect(mode.style.display).not.toBe("none");
    expect(metric.style.display).toBe("none");
  });

  it("narrows the scene to a job's subgraph via the jobs panel", async () => {
    const root = mount();
    const app = await bootApp(root);
    const btn = root.querySelector(
      'li[data-job-id="3"] button.view-topology') as HTMLElement;
    btn.click();
    await flush();
    expect(app.store.get().job).toBe(3);
    expect(root.querySelectorAll("g.node").length).toBe(5);
    (root.querySelector(".clear-job") as HTMLElement).click();
    await flush();
    expect(root.querySelectorAll("g.node").length).toBe(9);
  });

  it("tails the live stream and tracks the newest interval", async () => {
    const root = mount();
    await bootApp(root, { EventSourceImpl: FakeEventSource });
    const source = FakeEventSource.instances.at(-1)!;
    source.emit(replay.frames[3]);
    expect(linkStroke(root, 0)).toBe("#2e7d32");
    const slider = root.querySelector(".time-slider") as HTMLInputElement;
    expect(slider.max).toBe("3");
    expect(root.querySelector(".cursor-label")!.textContent)
      .toBe("live (interval 3)");
  });

  it("opens the link share view from an event's link reference", async () => {
    const root = mount();
    await bootApp(root);
    (root.querySelector(".events-table .link-ref") as HTMLElement)
      .dispatchEvent(new MouseEvent("click", { bubbles: true, cancelable: true }));
    await flush();
    const seen = new Set([...root.querySelectorAll("rect.share-segment")]
      .map((r) => r.getAttribute("data-job")));
    expect(seen).toEqual(new Set(["2", "3"]));
  });

  it("round-trips state through the url hash", async () => {
    const root = mount();
    const api = new ApiClient("", fixtureFetcher());
    const app = await boot(root, {
      api, fan: recordingFan().fan, syncHash: true,
    });
    apps.push(app);
    app.store.update({ design: 2, metric: "io", cursor: 1 });
    await flush();
    expect(location.hash).toBe("#d=2&metric=io&t=1");

    location.hash = "#d=3&metric=total&mode=relative&t=0";
    window.dispatchEvent(new HashChangeEvent("hashchange"));
    await flush();
    const state = app.store.get();
    expect(state.design).toBe(3);
    expect(state.mode).toBe("relative");
    expect(state.cursor).toBe(0);
  });

  it("shows an error banner instead of a blank page when a payload fails", async () => {
    const root = mount();
    const api = new ApiClient("", fixtureFetcher({
      "/api/topology": () =>
        new Response(JSON.stringify({ detail: "fabric unavailable" }), {
          status: 503, headers: { "content-type": "application/json" },
        }),
    }));
    const app = await boot(root, {
      api, fan: recordingFan().fan, syncHash: false,
    });
    apps.push(app);
    expect(root.querySelector(".error-banner")!.textContent)
      .toBe("fabric unavailable");
    expect(root.querySelector(".toolbar")).not.toBeNull();
  });
});

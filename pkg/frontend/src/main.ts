// App shell: owns the toolbar, the scene, the side panels, and the
// url-hash round trip. Every repaint is driven by a ViewState change;
// responses landing after a newer change are discarded by version.

import { ApiClient, fanSource, type FanSource } from "./api.js";
import { renderScene, type Scene } from "./graph.js";
import { clearRadarGlyphs, drawRadarGlyphs } from "./radar.js";
import { ReplayController, subscribeLive, type LiveSubscription } from "./replay.js";
import {
  decodeState, encodeState, StateStore, type Design, type ViewState,
} from "./state.js";
import {
  renderEventsPanel, renderJobsPanel, renderLinkSharePanel, renderRulesPanel,
} from "./panels.js";
import type { JobPayload, LegendBand, ReplayFrame } from "./types.js";

const METRICS = ["total", "mpi", "io", "unicast", "multicast"];
const CLUSTER_THRESHOLD = 1000;

export interface AppOptions {
  api?: ApiClient;
  fan?: FanSource;
  EventSourceImpl?: any;
  seed?: number;
  syncHash?: boolean;
}

export interface App {
  store: StateStore;
  scene: Scene | null;
  replay: ReplayController | null;
  refresh(): Promise<void>;
  destroy(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function showBanner(root: HTMLElement, message: string | null): void {
  let banner = root.querySelector(".error-banner") as HTMLElement | null;
  if (!message) {
    banner?.remove();
    return;
  }
  if (!banner) {
    banner = el("div", "error-banner");
    root.prepend(banner);
  }
  banner.textContent = message;
}

function jobsIndex(jobs: JobPayload[]): (guid: string) => number[] {
  const byGuid = new Map<string, number[]>();
  for (const job of jobs) {
    for (const guid of job.nodes) {
      const list = byGuid.get(guid) ?? [];
      list.push(job.id);
      byGuid.set(guid, list);
    }
  }
  return (guid) => byGuid.get(guid) ?? [];
}

function renderLegend(container: HTMLElement, bands: LegendBand[]): void {
  container.innerHTML = "";
  for (const band of bands) {
    const chip = el("span", "legend-chip", band.hi === null
      ? `${band.name} >${band.lo}`
      : `${band.name} ${band.lo}-${band.hi}`);
    chip.style.background = band.color;
    container.appendChild(chip);
  }
}

export async function boot(
  root: HTMLElement, opts: AppOptions = {},
): Promise<App> {
  const api = opts.api ?? new ApiClient();
  const fan = opts.fan ?? fanSource(api);
  const syncHash = opts.syncHash ?? true;
  const store = new StateStore(
    syncHash ? decodeState(location.hash) : undefined);

  root.innerHTML = "";
  const toolbar = el("div", "toolbar");
  const sceneBox = el("div", "scene-box");
  const legendBox = el("div", "legend-box");
  const sidebar = el("aside", "sidebar");
  const eventsBox = el("div", "events-box");
  const jobsBox = el("div", "jobs-box");
  const rulesBox = el("div", "rules-box");
  const shareBox = el("div", "share-box");
  sidebar.append(eventsBox, shareBox, jobsBox, rulesBox);
  const mainBox = el("div", "main-box");
  mainBox.append(sceneBox, legendBox);
  const body = el("div", "app-body");
  body.append(mainBox, sidebar);
  root.append(toolbar, body);

  // -- toolbar -------------------------------------------------------------

  const designGroup = el("span", "design-group");
  for (const d of [1, 2, 3] as Design[]) {
    const btn = el("button", "design-btn",
      d === 1 ? "bundled" : d === 2 ? "physical" : "radar");
    btn.dataset.design = String(d);
    btn.addEventListener("click", () => store.update({ design: d }));
    designGroup.appendChild(btn);
  }
  const metricSel = el("select", "metric-select");
  for (const m of METRICS) {
    const o = el("option", undefined, m);
    o.value = m;
    metricSel.appendChild(o);
  }
  metricSel.addEventListener("change", () =>
    store.update({ metric: metricSel.value }));
  const modeSel = el("select", "mode-select");
  for (const m of ["absolute", "relative"]) {
    const o = el("option", undefined, m);
    o.value = m;
    modeSel.appendChild(o);
  }
  modeSel.addEventListener("change", () =>
    store.update({ mode: modeSel.value as ViewState["mode"] }));

  const slider = el("input", "time-slider") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.addEventListener("input", () =>
    store.update({ cursor: Number(slider.value) }));
  const playBtn = el("button", "play-btn", "play");
  const liveBtn = el("button", "live-btn", "live");
  liveBtn.addEventListener("click", () => store.update({ cursor: "live" }));
  const cursorLabel = el("span", "cursor-label");
  const clearJobBtn = el("button", "clear-job", "all jobs");
  clearJobBtn.addEventListener("click", () => store.update({ job: null }));
  toolbar.append(designGroup, metricSel, modeSel, slider, playBtn,
    liveBtn, cursorLabel, clearJobBtn);

  let scene: Scene | null = null;
  let replay: ReplayController | null = null;
  let live: LiveSubscription | null = null;
  let lastInterval: number | null = null;

  playBtn.addEventListener("click", () => {
    if (!replay) return;
    if (replay.playing) {
      replay.pause();
      playBtn.textContent = "play";
    } else {
      replay.play();
      playBtn.textContent = "pause";
    }
  });

  function syncToolbar(state: ViewState): void {
    for (const btn of designGroup.querySelectorAll("button")) {
      btn.classList.toggle(
        "active", Number((btn as HTMLElement).dataset.design) === state.design);
    }
    metricSel.value = state.metric;
    modeSel.value = state.mode;
    modeSel.style.display = state.design === 3 ? "" : "none";
    metricSel.style.display = state.design === 3 ? "none" : "";
    if (typeof state.cursor === "number") slider.value = String(state.cursor);
    liveBtn.classList.toggle("active", state.cursor === "live");
    cursorLabel.textContent = state.cursor === "live"
      ? "live" : `interval ${state.cursor}`;
    clearJobBtn.style.display = state.job === null ? "none" : "";
  }

  function onLiveFrame(frame: ReplayFrame): void {
    lastInterval = frame.interval;
    slider.max = String(frame.interval);
    cursorLabel.textContent = `live (interval ${frame.interval})`;
    if (frame.events.length) void refreshEvents();
  }

  async function refreshEvents(): Promise<void> {
    const state = store.get();
    const page = await api.events(
      state.job === null ? {} : { job: state.job });
    renderEventsPanel(eventsBox, page.rows, { onSelectLink: showShare });
  }

  async function showShare(link: number): Promise<void> {
    try {
      const breakdown = await api.breakdown(link);
      renderLinkSharePanel(shareBox, breakdown);
    } catch (err) {
      showBanner(root, err instanceof Error ? err.message : String(err));
    }
  }

  async function refreshRules(): Promise<void> {
    const rules = await api.rules();
    renderRulesPanel(rulesBox, rules, api, () => void refreshRules());
  }

  // Full repaint for the current state. Scene and time source are
  // rebuilt; panels refresh from the same window.
  async function refresh(): Promise<void> {
    const version = store.version;
    const state = store.get();
    syncToolbar(state);
    showBanner(root, null);
    try {
      const [stats, legend, jobs] = await Promise.all([
        api.stats(), api.legend(), api.jobs(),
      ]);
      if (version !== store.version) return;
      lastInterval = stats.store.last_interval;
      if (lastInterval !== null) slider.max = String(lastInterval);
      renderLegend(legendBox, legend);
      renderJobsPanel(jobsBox, jobs, {
        onViewTopology: (id) => store.update({ job: id }),
      });

      const deviceCount = stats.fabric.switches + stats.fabric.hosts;
      const topo = await api.topology({
        job: state.job ?? undefined,
        clustered: state.job === null && deviceCount > CLUSTER_THRESHOLD,
      });
      if (version !== store.version) return;

      live?.close();
      live = null;
      replay?.pause();
      replay = null;

      scene = await renderScene(sceneBox, topo, {
        design: state.design === 2 ? 2 : 1,
        fan,
        seed: opts.seed,
        jobsOf: jobsIndex(jobs),
      });
      if (version !== store.version) return;

      if (state.cursor === "live") {
        try {
          live = subscribeLive(scene, onLiveFrame, {
            EventSourceImpl: opts.EventSourceImpl,
            onError: () => showBanner(root, "live stream interrupted"),
          });
        } catch {
          // no EventSource in this environment; stay on latest snapshot
        }
        if (lastInterval !== null) {
          const rows = await api.utilization({
            metric: state.design === 3 ? "total" : state.metric,
            from: lastInterval, to: lastInterval,
          });
          if (version !== store.version) return;
          scene.applyUtilization(rows.rows);
        }
      } else if (lastInterval !== null) {
        const payload = await api.replay(0, lastInterval);
        if (version !== store.version) return;
        replay = new ReplayController(scene, payload.frames, {
          onFrame: (frame) => {
            slider.value = String(frame.interval);
            cursorLabel.textContent = `interval ${frame.interval}`;
          },
          onGap: (interval) => {
            cursorLabel.textContent = `interval ${interval} (no data)`;
          },
        });
        replay.scrubTo(Math.min(state.cursor, lastInterval));
      }

      if (state.design === 3) {
        const span = typeof state.cursor === "number"
          ? { from: state.cursor, to: state.cursor } : {};
        const radar = await api.radarAll({ mode: state.mode, ...span });
        if (version !== store.version) return;
        const emphasize = new Set<string>();
        for (const row of radar.rows) {
          if (row.axes.some((a) => a.value >= 0.95)) emphasize.add(row.guid);
        }
        drawRadarGlyphs(scene, radar.rows, { emphasize });
      } else {
        clearRadarGlyphs(scene);
      }

      await refreshEvents();
      if (version !== store.version) return;
      await refreshRules();
    } catch (err) {
      if (version !== store.version) return;
      showBanner(root, err instanceof Error ? err.message : String(err));
    }
  }

  const unsubscribe = store.subscribe((state) => {
    if (syncHash) {
      const hash = encodeState(state);
      if (location.hash !== hash) history.replaceState(null, "", hash);
    }
    void refresh();
  });
  const onHashChange = () => {
    const state = decodeState(location.hash);
    store.update(state);
  };
  if (syncHash) window.addEventListener("hashchange", onHashChange);

  await refresh();

  return {
    store,
    get scene() { return scene; },
    get replay() { return replay; },
    refresh,
    destroy() {
      unsubscribe();
      if (syncHash) window.removeEventListener("hashchange", onHashChange);
      live?.close();
      replay?.pause();
      scene?.destroy();
      root.innerHTML = "";
    },
  };
}

const mount = typeof document !== "undefined"
  ? document.getElementById("app") : null;
if (mount) {
  void boot(mount);
}

import { beforeEach, describe, expect, it } from "vitest";
import { IDLE_COLOR, renderScene } from "../src/graph.js";
import type { TopologyPayload, UtilizationPage } from "../src/types.js";
import { fixture, mount, recordingFan } from "./helpers.js";

const topo = fixture<TopologyPayload>("topology");
const util = fixture<UtilizationPage>("util_interval0");

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("design #1 bundled graph", () => {
  it("draws one straight stroke per bundle, wider for parallel links", async () => {
    const scene = await renderScene(mount(), topo, { design: 1 });
    const paths = scene.svg.querySelectorAll("path.link");
    expect(paths.length).toBe(scene.layout.edges.length);
    for (const path of paths) {
      expect(path.getAttribute("d")).toMatch(/^M[-\d.]+,[-\d.]+L[-\d.]+,[-\d.]+$/);
    }
    const widths = new Set(
      [...paths].map((p) => p.getAttribute("stroke-width")));
    expect(widths).toContain("3"); // n=2 bundle
    expect(widths).toContain("2"); // single links
  });

  it("renders hosts and switches with distinct styling", async () => {
    const scene = await renderScene(mount(), topo, { design: 1 });
    const kinds = new Set<string>();
    for (const node of scene.svg.querySelectorAll("g.node")) {
      kinds.add(node.getAttribute("class") ?? "");
    }
    expect(kinds.has("node node-edge")).toBe(true);
    expect(kinds.has("node node-compute")).toBe(true);
    const edgeFill = scene.svg
      .querySelector("g.node-edge circle")!.getAttribute("fill");
    const computeFill = scene.svg
      .querySelector("g.node-compute circle")!.getAttribute("fill");
    expect(edgeFill).not.toBe(computeFill);
  });

  it("paints links idle with no data, then with the server's colors", async () => {
    const scene = await renderScene(mount(), topo, { design: 1 });
    const first = scene.svg.querySelector("path.link")!;
    expect(first.getAttribute("stroke")).toBe(IDLE_COLOR);

    scene.applyUtilization(util.rows);
    for (const row of util.rows) {
      const path = [...scene.svg.querySelectorAll("path.link")].find((p) =>
        p.getAttribute("data-link-ids")!.split(",").includes(String(row.link)));
      expect(path).toBeDefined();
      // bundles show the hottest member's color
      const members = path!.getAttribute("data-link-ids")!
        .split(",").map(Number);
      const hottest = util.rows
        .filter((r) => members.includes(r.link))
        .sort((a, b) => b.utilization - a.utilization)[0];
      expect(path!.getAttribute("stroke")).toBe(hottest.color);
      expect(path!.getAttribute("data-band")).toBe(hottest.band);
    }
    scene.clear();
    expect(first.getAttribute("stroke")).toBe(IDLE_COLOR);
  });

  it("shows link utilization from the payload in the hover card", async () => {
    const root = mount();
    const scene = await renderScene(root, topo, { design: 1 });
    scene.applyUtilization(util.rows);
    const path = [...scene.svg.querySelectorAll("path.link")].find(
      (p) => p.getAttribute("data-link-ids")!.split(",")[0] === "0")!;
    path.dispatchEvent(new Event("mouseenter"));
    const tip = root.querySelector(".flens-tooltip") as HTMLElement;
    expect(tip.style.display).toBe("block");
    expect(tip.textContent).toContain("utilization 0.6400");
  });

  it("names the hovered device and its jobs", async () => {
    const root = mount();
    const scene = await renderScene(root, topo, {
      design: 1,
      jobsOf: (guid) => (guid === "4800000000000000" ? [2, 3] : []),
    });
    const node = scene.svg.querySelector(
      'g.node[data-guid="4800000000000000"]')!;
    node.dispatchEvent(new Event("mouseenter"));
    const tip = root.querySelector(".flens-tooltip") as HTMLElement;
    expect(tip.textContent).toContain("node-0001");
    expect(tip.textContent).toContain("4800000000000000");
    expect(tip.textContent).toContain("jobs 2,3");
  });
});

describe("design #2 physical-link graph", () => {
  it("curves every n=2 bundle member through the exact server control points", async () => {
    const { calls, fan } = recordingFan();
    const scene = await renderScene(mount(), topo, { design: 2, fan });

    const bundles = topo.links.filter((l) => l.bundle && l.bundle.n === 2);
    expect(calls.length).toBe(2);
    for (const call of calls) expect(call.n).toBe(2);

    const curved = [...scene.svg.querySelectorAll("path.link[data-k]")];
    expect(curved.length).toBe(bundles.length);
    // reconstruct what each path must have drawn from the recorded calls
    const expected = new Set<string>();
    calls.forEach((call, i) => {
      for (let k = 1; k <= call.n; k++) {
        const x = 1000 * (i + 1) + 10 * k + 0.5;
        const y = 2000 * (i + 1) + 20 * k + 0.25;
        expected.add(
          `M${call.x1},${call.y1}Q${x},${y} ${call.x2},${call.y2}`);
      }
    });
    for (const path of curved) {
      expect(expected.has(path.getAttribute("d")!)).toBe(true);
      const m = path.getAttribute("d")!.match(/Q([-\d.]+),([-\d.]+) /)!;
      expect(path.getAttribute("data-cx")).toBe(m[1]);
      expect(path.getAttribute("data-cy")).toBe(m[2]);
    }
  });

  it("asks the fan source using the bundle's layout endpoints", async () => {
    const { calls, fan } = recordingFan();
    const scene = await renderScene(mount(), topo, { design: 2, fan });
    for (const call of calls) {
      const edge = scene.layout.edges.find((e) =>
        e.source.x === call.x1 && e.source.y === call.y1 &&
        e.target.x === call.x2 && e.target.y === call.y2);
      expect(edge).toBeDefined();
      expect(edge!.n).toBe(2);
    }
  });

  it("draws every physical link individually", async () => {
    const { fan } = recordingFan();
    const scene = await renderScene(mount(), topo, { design: 2, fan });
    const paths = scene.svg.querySelectorAll("path.link");
    expect(paths.length).toBe(topo.links.length);
    const seen = new Set<string>();
    for (const path of paths) {
      const ids = path.getAttribute("data-link-ids")!;
      expect(ids.split(",").length).toBe(1);
      seen.add(ids);
    }
    expect(seen.size).toBe(topo.links.length);
  });

  it("keeps single links straight", async () => {
    const { fan } = recordingFan();
    const scene = await renderScene(mount(), topo, { design: 2, fan });
    const singles = topo.links.filter((l) => !l.bundle || l.bundle.n === 1);
    const straight = [...scene.svg.querySelectorAll("path.link")]
      .filter((p) => p.getAttribute("d")!.includes("L"));
    expect(straight.length).toBe(singles.length);
  });
});

describe("frame painting", () => {
  it("treats an empty frame as a gap and keeps the previous paint", async () => {
    const scene = await renderScene(mount(), topo, { design: 1 });
    scene.applyUtilization(util.rows);
    const path = [...scene.svg.querySelectorAll("path.link")].find(
      (p) => p.getAttribute("data-link-ids")!.split(",")[0] === "0")!;
    const colored = path.getAttribute("stroke");
    expect(colored).not.toBe(IDLE_COLOR);

    const painted = scene.applyFrame(
      { interval: 9, ts: 0, links: [], events: [] });
    expect(painted).toBe(false);
    expect(path.getAttribute("stroke")).toBe(colored);
  });
});

// Designs #1 and #2: the interactive topology graph. Design #1 draws
// one stroke per parallel-link bundle; design #2 draws every physical
// link, curving bundle members through control points fetched from the
// server. No curve math happens here: each path uses the (x, y) the
// API returned, verbatim.

import { select, zoom } from "d3";
import type { Selection } from "d3";
import type { FanSource } from "./api.js";
import type {
  FrameLink,
  ReplayFrame,
  TopologyPayload,
  UtilizationRow,
} from "./types.js";
import { computeLayout, type Layout, type LayoutEdge } from "./layout.js";

export const IDLE_COLOR = "#9e9e9e";

const NODE_STYLE: Record<string, { fill: string; r: number }> = {
  edge: { fill: "#c62828", r: 9 },
  root: { fill: "#8e24aa", r: 11 },
  compute: { fill: "#1565c0", r: 6 },
  storage: { fill: "#ef6c00", r: 6 },
};

export interface SceneOptions {
  design: 1 | 2;
  width?: number;
  height?: number;
  seed?: number;
  fan?: FanSource;
  // job membership used by the hover card; guid -> job ids
  jobsOf?: (guid: string) => number[];
}

interface LinkState {
  utilization: number;
  color: string;
  band: string;
}

export interface Scene {
  svg: SVGSVGElement;
  layout: Layout;
  design: 1 | 2;
  applyUtilization(rows: UtilizationRow[] | FrameLink[]): void;
  applyFrame(frame: ReplayFrame): boolean;
  clear(): void;
  destroy(): void;
}

function edgeTitle(edge: LayoutEdge, state: LinkState | undefined): string {
  const util = state ? state.utilization.toFixed(4) : "no data";
  return `${edge.source.label} -> ${edge.target.label}` +
    (edge.n > 1 ? ` (${edge.n} links)` : "") + `, utilization ${util}`;
}

export async function renderScene(
  container: HTMLElement,
  topo: TopologyPayload,
  opts: SceneOptions,
): Promise<Scene> {
  const width = opts.width ?? 960;
  const height = opts.height ?? 600;
  const layout = computeLayout(topo, width, height, opts.seed ?? 42);

  container.innerHTML = "";
  const svg = select(container)
    .append("svg")
    .attr("class", "flens-scene")
    .attr("viewBox", `0 0 ${width} ${height}`)
    .attr("width", "100%");
  const root = svg.append("g").attr("class", "zoom-root");
  svg.call(zoom<SVGSVGElement, unknown>()
    .scaleExtent([0.1, 8])
    .on("zoom", (ev) => root.attr("transform", ev.transform)) as any);

  const tooltip = select(container)
    .append("div")
    .attr("class", "flens-tooltip")
    .style("display", "none");

  const linkGroup = root.append("g").attr("class", "links");
  const nodeGroup = root.append("g").attr("class", "nodes");
  const byLinkId = new Map<number, LinkState>();
  const paths: Selection<SVGPathElement, unknown, null, undefined>[] = [];

  function straightPath(edge: LayoutEdge): string {
    return `M${edge.source.x},${edge.source.y}L${edge.target.x},${edge.target.y}`;
  }

  function addPath(edge: LayoutEdge, linkIds: number[], d: string) {
    const path = linkGroup.append("path")
      .attr("class", "link")
      .attr("d", d)
      .attr("fill", "none")
      .attr("stroke", IDLE_COLOR)
      .attr("stroke-width", opts.design === 1 ? 1 + edge.n : 2)
      .attr("data-link-ids", linkIds.join(","))
      .attr("data-bundle", edge.key);
    path.on("mouseenter", () => {
      const primary = byLinkId.get(linkIds[0]);
      tooltip.style("display", "block").text(edgeTitle(edge, primary));
    }).on("mouseleave", () => tooltip.style("display", "none"));
    paths.push(path as any);
    return path;
  }

  if (opts.design === 1) {
    for (const edge of layout.edges) addPath(edge, edge.linkIds, straightPath(edge));
  } else {
    const pending: Promise<void>[] = [];
    for (const edge of layout.edges) {
      if (edge.n < 2) {
        addPath(edge, edge.linkIds, straightPath(edge));
        continue;
      }
      if (!opts.fan) throw new Error("design 2 needs a fan control source");
      const { source, target } = edge;
      pending.push(
        opts.fan(source.x, source.y, target.x, target.y, edge.n).then((fan) => {
          fan.points.forEach((pt, i) => {
            const d = `M${source.x},${source.y}` +
              `Q${pt.x},${pt.y} ${target.x},${target.y}`;
            addPath(edge, [edge.linkIds[i]], d)
              .attr("data-k", pt.k)
              .attr("data-cx", pt.x)
              .attr("data-cy", pt.y);
          });
        }),
      );
    }
    await Promise.all(pending);
  }

  const nodes = nodeGroup.selectAll("g.node")
    .data([...layout.nodes.values()])
    .join("g")
    .attr("class", (d) => `node node-${d.kind}`)
    .attr("transform", (d) => `translate(${d.x},${d.y})`)
    .attr("data-guid", (d) => d.id);
  nodes.append("circle")
    .attr("r", (d) => (NODE_STYLE[d.kind] ?? NODE_STYLE.compute).r)
    .attr("fill", (d) => (NODE_STYLE[d.kind] ?? NODE_STYLE.compute).fill);
  nodes.on("mouseenter", (_ev, d) => {
    const jobs = opts.jobsOf ? opts.jobsOf(d.id) : [];
    const jobText = jobs.length ? ` jobs ${jobs.join(",")}` : "";
    tooltip.style("display", "block")
      .text(`${d.label} (${d.id})${jobText}`);
  }).on("mouseleave", () => tooltip.style("display", "none"));

  function repaint() {
    for (const path of paths) {
      const ids = (path.attr("data-link-ids") || "")
        .split(",").filter(Boolean).map(Number);
      let best: LinkState | undefined;
      for (const id of ids) {
        const state = byLinkId.get(id);
        if (state && (!best || state.utilization > best.utilization)) {
          best = state;
        }
      }
      path.attr("stroke", best ? best.color : IDLE_COLOR)
        .attr("data-band", best ? best.band : "idle");
    }
  }

  const scene: Scene = {
    svg: svg.node() as SVGSVGElement,
    layout,
    design: opts.design,
    applyUtilization(rows) {
      byLinkId.clear();
      for (const row of rows) {
        byLinkId.set(row.link, {
          utilization: row.utilization,
          color: row.color,
          band: row.band,
        });
      }
      repaint();
    },
    applyFrame(frame) {
      if (!frame.links.length) return false; // gap: keep previous paint
      scene.applyUtilization(frame.links);
      return true;
    },
    clear() {
      byLinkId.clear();
      repaint();
    },
    destroy() {
      container.innerHTML = "";
    },
  };
  return scene;
}

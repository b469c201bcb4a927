// Design #3: RadarPie glyphs drawn over the topology scene. Angles and
// values both come straight from the payload; the glyph maps value
// linearly onto a fixed reference radius, so a sector's arc radius in
// pixels is exactly value * GLYPH_RADIUS.

import { select } from "d3";
import type { RadarRow } from "./types.js";
import type { Scene } from "./graph.js";

export const GLYPH_RADIUS = 20;

// one color per traffic class; sent sectors solid, recv hatched by
// lowering opacity
const CLASS_COLORS: Record<string, string> = {
  unicast: "#4e79a7",
  multicast: "#f28e2b",
  mpi: "#59a14f",
  io: "#e15759",
};

function axisColor(axis: string): string {
  const klass = axis.replace(/_(sent|recv)$/, "");
  return CLASS_COLORS[klass] ?? "#888";
}

function sectorPath(angle: number, halfWidth: number, r: number): string {
  const a0 = angle - halfWidth;
  const a1 = angle + halfWidth;
  const x0 = r * Math.cos(a0);
  const y0 = r * Math.sin(a0);
  const x1 = r * Math.cos(a1);
  const y1 = r * Math.sin(a1);
  return `M0,0L${x0},${y0}A${r},${r} 0 0 1 ${x1},${y1}Z`;
}

export interface RadarOptions {
  radius?: number;
  // devices to render with outlier emphasis
  emphasize?: Set<string>;
  // glyphs on hosts are optional; switches always get one
  includeHosts?: boolean;
  onHover?: (guid: string, axis: string, value: number) => void;
}

export function drawRadarGlyphs(
  scene: Scene,
  rows: RadarRow[],
  opts: RadarOptions = {},
): number {
  const radius = opts.radius ?? GLYPH_RADIUS;
  const rowByGuid = new Map(rows.map((r) => [r.guid, r]));
  const root = select(scene.svg).select("g.zoom-root");
  root.selectAll("g.radar-layer").remove();
  const layer = root.append("g").attr("class", "radar-layer");

  let drawn = 0;
  for (const node of scene.layout.nodes.values()) {
    const isSwitch = node.kind === "edge" || node.kind === "root";
    if (!isSwitch && !opts.includeHosts) continue;
    const row = rowByGuid.get(node.id);
    if (!row) continue;
    const glyph = layer.append("g")
      .attr("class", "radar-glyph" +
        (opts.emphasize?.has(node.id) ? " radar-outlier" : ""))
      .attr("transform", `translate(${node.x},${node.y})`)
      .attr("data-guid", node.id);
    const half = Math.PI / row.axes.length;
    let empty = true;
    for (const ax of row.axes) {
      const r = ax.value * radius;
      if (r <= 0) continue;
      empty = false;
      glyph.append("path")
        .attr("class", "radar-sector")
        .attr("d", sectorPath(ax.angle, half, r))
        .attr("fill", axisColor(ax.axis))
        .attr("fill-opacity", ax.axis.endsWith("_recv") ? 0.45 : 0.85)
        .attr("data-axis", ax.axis)
        .attr("data-value", ax.value)
        .on("mouseenter", () => opts.onHover?.(node.id, ax.axis, ax.value));
    }
    if (empty) {
      // zero vector: degenerate point at the glyph center
      glyph.append("circle").attr("class", "radar-zero").attr("r", 1.5);
    }
    drawn += 1;
  }
  return drawn;
}

export function clearRadarGlyphs(scene: Scene): void {
  select(scene.svg).selectAll("g.radar-layer").remove();
}

// Deterministic force layout. Initial positions come from a seeded
// generator and the simulation runs a fixed number of synchronous
// ticks, so the same payload always lands in the same place and
// screenshots are reproducible.

import {
  forceCollide,
  forceLink,
  forceManyBody,
  forceSimulation,
  forceX,
  forceY,
} from "d3";
import type { TopologyPayload } from "./types.js";

export interface LayoutNode {
  id: string;
  kind: string;
  tier: number;
  label: string;
  x: number;
  y: number;
}

export interface LayoutEdge {
  // one entry per bundle (parallel links collapse to a single edge here;
  // the renderer decides how many strokes to draw)
  key: string;
  source: LayoutNode;
  target: LayoutNode;
  linkIds: number[];
  n: number;
}

export interface Layout {
  nodes: Map<string, LayoutNode>;
  edges: LayoutEdge[];
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a += 0x6d2b79f5;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const TICKS = 150;

export function computeLayout(
  topo: TopologyPayload,
  width: number,
  height: number,
  seed = 42,
): Layout {
  const rand = mulberry32(seed);
  const nodes: LayoutNode[] = topo.devices.map((d) => ({
    id: d.guid,
    kind: d.kind,
    tier: d.tier,
    label: d.hostname ?? d.guid,
    x: width * rand(),
    // bias tiers vertically: roots top, edges middle, hosts bottom
    y: height * (0.2 + 0.3 * d.tier) + 40 * (rand() - 0.5),
  }));
  const byId = new Map(nodes.map((n) => [n.id, n]));

  const bundles = new Map<string, LayoutEdge>();
  for (const link of topo.links) {
    const key = link.bundle ? link.bundle.key : `link-${link.id}`;
    let edge = bundles.get(key);
    if (!edge) {
      const source = byId.get(link.a.guid);
      const target = byId.get(link.b.guid);
      if (!source || !target) {
        throw new Error(`link ${link.id} references unknown device`);
      }
      edge = { key, source, target, linkIds: [], n: 0 };
      bundles.set(key, edge);
    }
    edge.linkIds.push(link.id);
    edge.n = link.bundle ? link.bundle.n : 1;
  }
  const edges = [...bundles.values()];

  const sim = forceSimulation(nodes as any)
    .force("charge", forceManyBody().strength(-120))
    .force("link", forceLink(edges.map((e) => ({
      source: e.source.id, target: e.target.id,
    })) as any).id((d: any) => d.id).distance(60))
    .force("collide", forceCollide(14))
    .force("x", forceX(width / 2).strength(0.03))
    .force("y", forceY(height / 2).strength(0.03))
    .stop();
  for (let i = 0; i < TICKS; i++) sim.tick();

  return { nodes: byId, edges };
}

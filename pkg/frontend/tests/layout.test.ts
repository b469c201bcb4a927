import { describe, expect, it } from "vitest";
import { computeLayout } from "../src/layout.js";
import type { TopologyPayload } from "../src/types.js";
import { fixture } from "./helpers.js";

const topo = fixture<TopologyPayload>("topology");

describe("deterministic layout", () => {
  it("produces identical coordinates for the same payload and seed", () => {
    const a = computeLayout(topo, 960, 600, 42);
    const b = computeLayout(topo, 960, 600, 42);
    for (const [guid, node] of a.nodes) {
      const other = b.nodes.get(guid)!;
      expect(other.x).toBe(node.x);
      expect(other.y).toBe(node.y);
    }
  });

  it("collapses parallel links into one edge per bundle", () => {
    const layout = computeLayout(topo, 960, 600);
    const multi = layout.edges.filter((e) => e.n === 2);
    expect(multi.length).toBe(2);
    for (const edge of multi) expect(edge.linkIds.length).toBe(2);
    const singles = layout.edges.filter((e) => e.n === 1);
    expect(singles.length + multi.length).toBe(layout.edges.length);
  });

  it("rejects links whose devices are missing from the payload", () => {
    const broken: TopologyPayload = {
      ...topo,
      devices: topo.devices.slice(1),
    };
    expect(() => computeLayout(broken, 960, 600)).toThrow(/unknown device/);
  });
});

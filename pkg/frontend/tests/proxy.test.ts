/** Proxy geometry: every primitive type yields displayable geometry and
 * node transforms land where the solve report put them. */

import { describe, expect, it } from "vitest";
import * as THREE from "three";
import { frameToMatrix, nodeGroup, primitiveProxy } from "../src/proxy.js";

const SHAPES: Record<string, Record<string, number>> = {
  hook: { arc_angle: 300, arc_radius: 12, thickness: 3 },
  hole: { arc_radius: 8, thickness: 2 },
  hemisphere: { radius: 5 },
  edge: { width: 50, length: 100, height: 2 },
  rod: { radius: 4, length: 120 },
  tube: { inner_radius: 9, thickness: 2, length: 200 },
  clip: { width: 15, height: 20, base_distance: 18, open_gap: 8, thickness: 2 },
  surface: { width: 90, length: 110 },
};

describe("primitive proxies", () => {
  for (const [type, shape] of Object.entries(SHAPES)) {
    it(`builds geometry for ${type}`, () => {
      const geom = primitiveProxy(type, shape);
      expect(geom.getAttribute("position").count).toBeGreaterThan(0);
    });
  }

  it("rod proxy spans its length along Z", () => {
    const geom = primitiveProxy("rod", { radius: 4, length: 120 });
    geom.computeBoundingBox();
    const bb = geom.boundingBox!;
    expect(bb.max.z - bb.min.z).toBeCloseTo(120, 5);
  });
});

describe("node groups", () => {
  const node = {
    name: "hook_1",
    translation: [10, -20, 300] as [number, number, number],
    rotation: [0, 0, 0, 1] as [number, number, number, number],
    extras: {
      part: "s_hook",
      role: "component",
      mass: 18,
      mesh_ref: null,
      primitives: [
        {
          id: "hook1",
          type: "hook",
          shape: SHAPES["hook"]!,
          base_frame: { position: [0, 0, 30] as [number, number, number], orientation: [0, 0, 180] as [number, number, number] },
          closed: false,
        },
      ],
    },
  };

  it("applies the report transform to the group", () => {
    const group = nodeGroup(node);
    expect(group.position.toArray()).toEqual([10, -20, 300]);
    expect(group.children).toHaveLength(1);
    expect(group.children[0]!.userData["ref"]).toBe("hook_1.hook1");
  });

  it("highlighted nodes use the alarm color", () => {
    const normal = nodeGroup(node);
    const hot = nodeGroup(node, { highlight: true });
    const color = (g: THREE.Group) =>
      ((g.children[0] as THREE.Mesh).material as THREE.MeshStandardMaterial).color.getHex();
    expect(color(hot)).toBe(0xe03131);
    expect(color(hot)).not.toBe(color(normal));
  });

  it("frame matrices follow the yaw-pitch-roll convention", () => {
    // yaw 90: local +X maps to world +Y
    const m = frameToMatrix({ position: [0, 0, 0], orientation: [90, 0, 0] });
    const v = new THREE.Vector3(1, 0, 0).applyMatrix4(m);
    expect(v.x).toBeCloseTo(0, 10);
    expect(v.y).toBeCloseTo(1, 10);
  });
});

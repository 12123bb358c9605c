/** Proxy display geometry built from connector shape parameters.
 *
 * Parts without a bundled mesh render as a cluster of simple solids, one
 * per primitive, posed by the primitive's base frame: torus for hooks and
 * holes, cylinder for rods and tubes, box for edges and clips, plane for
 * surfaces, sphere cap for hemispheres.
 */

import * as THREE from "three";
import { Frame, Node } from "./types.js";

const DEG = Math.PI / 180;

export function frameToMatrix(frame: Frame): THREE.Matrix4 {
  const [yaw, pitch, roll] = frame.orientation;
  const e = new THREE.Euler(roll * DEG, pitch * DEG, yaw * DEG, "ZYX");
  const m = new THREE.Matrix4().makeRotationFromEuler(e);
  m.setPosition(frame.position[0], frame.position[1], frame.position[2]);
  return m;
}

export function primitiveProxy(
  type: string,
  shape: Record<string, number>,
): THREE.BufferGeometry {
  switch (type) {
    case "hook": {
      const r = shape["arc_radius"] ?? 10;
      const t = (shape["thickness"] ?? 2) / 2;
      const arc = (shape["arc_angle"] ?? 300) * DEG;
      const g = new THREE.TorusGeometry(r, t, 10, 36, arc);
      // torus arc starts at +X in the XY plane; the wire arc lives in the
      // XZ plane with its gap centered at the top
      g.rotateZ(Math.PI / 2 + (Math.PI - arc / 2));
      g.rotateX(Math.PI / 2);
      return g;
    }
    case "hole": {
      const r = shape["arc_radius"] ?? 10;
      const t = (shape["thickness"] ?? 2) / 2;
      const g = new THREE.TorusGeometry(r, t, 10, 36);
      g.rotateX(Math.PI / 2);
      return g;
    }
    case "rod": {
      const g = new THREE.CylinderGeometry(
        shape["radius"] ?? 3,
        shape["radius"] ?? 3,
        shape["length"] ?? 100,
        16,
      );
      g.rotateX(Math.PI / 2); // cylinder axis Y -> primitive axis Z
      return g;
    }
    case "tube": {
      const r = (shape["inner_radius"] ?? 8) + (shape["thickness"] ?? 2);
      const g = new THREE.CylinderGeometry(r, r, shape["length"] ?? 100, 16, 1, true);
      g.rotateX(Math.PI / 2);
      return g;
    }
    case "surface":
      return new THREE.BoxGeometry(shape["width"] ?? 100, shape["length"] ?? 100, 1);
    case "edge":
      return new THREE.BoxGeometry(
        shape["width"] ?? 50,
        shape["length"] ?? 100,
        shape["height"] ?? 2,
      );
    case "clip": {
      return new THREE.BoxGeometry(
        shape["base_distance"] ?? 20,
        shape["width"] ?? 15,
        shape["height"] ?? 20,
      );
    }
    case "hemisphere": {
      const r = shape["radius"] ?? 5;
      return new THREE.SphereGeometry(r, 16, 8, 0, Math.PI * 2, 0, Math.PI / 2);
    }
    default:
      return new THREE.SphereGeometry(4, 8, 8);
  }
}

export interface InstanceGroupOptions {
  highlight?: boolean;
  roleColors?: Record<string, number>;
}

const DEFAULT_COLORS: Record<string, number> = {
  environment: 0x8a8f98,
  target: 0x3f8efc,
  component: 0xd9a443,
};

/** Build the display group for one scene node from its primitive extras. */
export function nodeGroup(node: Node, opts: InstanceGroupOptions = {}): THREE.Group {
  const group = new THREE.Group();
  group.name = node.name;
  const colors = { ...DEFAULT_COLORS, ...(opts.roleColors ?? {}) };
  const color = opts.highlight ? 0xe03131 : colors[node.extras.role] ?? 0xd9a443;
  const material = new THREE.MeshStandardMaterial({ color, roughness: 0.6 });
  for (const prim of node.extras.primitives) {
    const mesh = new THREE.Mesh(primitiveProxy(prim.type, prim.shape), material);
    mesh.applyMatrix4(frameToMatrix(prim.base_frame));
    mesh.name = `${node.name}.${prim.id}`;
    mesh.userData = { ref: `${node.name}.${prim.id}`, type: prim.type };
    group.add(mesh);
  }
  group.position.set(node.translation[0], node.translation[1], node.translation[2]);
  group.quaternion.set(
    node.rotation[0],
    node.rotation[1],
    node.rotation[2],
    node.rotation[3],
  );
  return group;
}

/** Minimal WebGL scene for assembly display and primitive picking. */

import * as THREE from "three";
import { nodeGroup } from "./proxy.js";
import { Scene as SceneDoc } from "./types.js";

export class Viewer {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private assemblyRoot = new THREE.Group();
  private raycaster = new THREE.Raycaster();
  private pointer = new THREE.Vector2();
  private orbit = { theta: 0.8, phi: 1.1, radius: 1400, targetZ: 300 };
  onPickPrimitive: ((ref: string, type: string) => void) | null = null;

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, 1, 1, 20000);
    this.camera.up.set(0, 0, 1); // solver Z is up
    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.1);
    key.position.set(400, -600, 900);
    this.scene.add(key);
    const grid = new THREE.GridHelper(2000, 20, 0x39414f, 0x232a35);
    grid.rotateX(Math.PI / 2);
    this.scene.add(grid);
    this.scene.add(this.assemblyRoot);
    this.bindInput();
    this.resize();
    this.renderLoop();
  }

  private bindInput(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (ev) => {
      dragging = true;
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    window.addEventListener("pointerup", () => (dragging = false));
    window.addEventListener("pointermove", (ev) => {
      if (!dragging) return;
      this.orbit.theta -= (ev.clientX - lastX) * 0.005;
      this.orbit.phi = Math.min(
        Math.PI - 0.05,
        Math.max(0.05, this.orbit.phi - (ev.clientY - lastY) * 0.005),
      );
      lastX = ev.clientX;
      lastY = ev.clientY;
    });
    this.canvas.addEventListener("wheel", (ev) => {
      this.orbit.radius = Math.min(8000, Math.max(200, this.orbit.radius * (1 + ev.deltaY * 0.001)));
    });
    this.canvas.addEventListener("click", (ev) => {
      if (!this.onPickPrimitive) return;
      const rect = this.canvas.getBoundingClientRect();
      this.pointer.x = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
      this.pointer.y = -((ev.clientY - rect.top) / rect.height) * 2 + 1;
      this.raycaster.setFromCamera(this.pointer, this.camera);
      const hits = this.raycaster.intersectObjects(this.assemblyRoot.children, true);
      for (const hit of hits) {
        const data = hit.object.userData;
        if (data && typeof data["ref"] === "string") {
          this.onPickPrimitive(data["ref"] as string, (data["type"] as string) ?? "");
          return;
        }
      }
    });
    window.addEventListener("resize", () => this.resize());
  }

  resize(): void {
    const w = this.canvas.clientWidth || 800;
    const h = this.canvas.clientHeight || 600;
    this.renderer.setSize(w, h, false);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  /** Replace the displayed assembly with the given scene document. */
  showScene(doc: SceneDoc, highlight: Set<string> = new Set()): void {
    this.assemblyRoot.clear();
    for (const node of doc.nodes) {
      this.assemblyRoot.add(nodeGroup(node, { highlight: highlight.has(node.name) }));
    }
  }

  clear(): void {
    this.assemblyRoot.clear();
  }

  private renderLoop = (): void => {
    const { theta, phi, radius, targetZ } = this.orbit;
    this.camera.position.set(
      radius * Math.sin(phi) * Math.cos(theta),
      radius * Math.sin(phi) * Math.sin(theta),
      targetZ + radius * Math.cos(phi),
    );
    this.camera.lookAt(0, 0, targetZ);
    this.renderer.render(this.scene, this.camera);
    requestAnimationFrame(this.renderLoop);
  };
}

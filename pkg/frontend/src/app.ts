/** DOM shell: part palette on the left, primitive strip at the bottom,
 * solve panel on the right, viewer in the middle.  Mirrors the three-step
 * flow: set up environment and target with pose sliders, click two
 * compatible primitives to connect (incompatible ones grey out), then run
 * the optimization and inspect the relaxed result. */

import { ServiceClient } from "./api.js";
import { DesignerState } from "./state.js";
import { Viewer } from "./viewer.js";
import { Frame, Part } from "./types.js";

const SLIDER_SPEC: Array<[string, number, number]> = [
  ["x", -1500, 1500],
  ["y", -1500, 1500],
  ["z", 0, 2000],
  ["yaw", -180, 180],
  ["pitch", -90, 90],
  ["roll", -180, 180],
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

class PoseSliders {
  readonly root = el("div", "pose-sliders");
  private values = new Map<string, number>();
  onChange: ((frame: Frame) => void) | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(initial: Partial<Record<string, number>> = {}) {
    for (const [name, lo, hi] of SLIDER_SPEC) {
      const row = el("label", "slider-row");
      row.append(el("span", "slider-name", name));
      const input = el("input");
      input.type = "range";
      input.min = String(lo);
      input.max = String(hi);
      input.step = "0.5";
      input.value = String(initial[name] ?? (name === "z" ? 500 : 0));
      this.values.set(name, Number(input.value));
      const readout = el("span", "slider-value", input.value);
      input.addEventListener("input", () => {
        this.values.set(name, Number(input.value));
        readout.textContent = input.value;
        this.debounced();
      });
      row.append(input, readout);
      this.root.append(row);
    }
  }

  private debounced(): void {
    if (this.timer) clearTimeout(this.timer);
    this.timer = setTimeout(() => this.onChange?.(this.frame()), 200);
  }

  frame(): Frame {
    const v = (n: string) => this.values.get(n) ?? 0;
    return {
      position: [v("x"), v("y"), v("z")],
      orientation: [v("yaw"), v("pitch"), v("roll")],
    };
  }
}

export class App {
  private state: DesignerState;
  private viewer!: Viewer;
  private palette!: HTMLElement;
  private primStrip!: HTMLElement;
  private sidebar!: HTMLElement;
  private toastBox!: HTMLElement;
  private selectedPart: Part | null = null;

  constructor(private readonly rootEl: HTMLElement, base = "") {
    this.state = new DesignerState(new ServiceClient(base));
  }

  async start(): Promise<void> {
    this.buildLayout();
    this.state.subscribe(() => this.render());
    const saved = new URLSearchParams(location.search).get("session");
    await this.state.boot(saved ?? undefined);
    const sid = this.state.sessionId;
    if (sid && !saved) {
      history.replaceState(null, "", `?session=${sid}`);
    }
    this.render();
  }

  private buildLayout(): void {
    this.rootEl.innerHTML = "";
    const grid = el("div", "layout");
    this.palette = el("aside", "palette");
    const center = el("main", "center");
    const canvas = el("canvas", "viewport") as HTMLCanvasElement;
    this.primStrip = el("footer", "prim-strip");
    center.append(canvas, this.primStrip);
    this.sidebar = el("aside", "sidebar");
    this.toastBox = el("div", "toasts");
    grid.append(this.palette, center, this.sidebar);
    this.rootEl.append(grid, this.toastBox);
    this.viewer = new Viewer(canvas);
    this.viewer.onPickPrimitive = (ref, type) => void this.state.select(ref, type);
  }

  private render(): void {
    const snap = this.state.snapshot();
    this.renderPalette(snap);
    this.renderPrimStrip(snap);
    this.renderSidebar(snap);
    this.renderToasts(snap);
    if (snap.scene) {
      this.viewer.showScene(snap.scene, this.state.fallApartInstances());
    }
  }

  private renderPalette(snap: ReturnType<DesignerState["snapshot"]>): void {
    this.palette.innerHTML = "";
    this.palette.append(el("h2", "", "parts"));
    for (const part of snap.parts) {
      const btn = el("button", "part-entry", part.name);
      btn.dataset["part"] = part.id;
      const anyEnabled = part.primitives.some((p) =>
        this.state.isEnabled(`part:${part.id}.${p.id}`),
      );
      btn.disabled = snap.selection.length === 1 && !anyEnabled;
      btn.addEventListener("click", () => {
        this.selectedPart = part;
        this.render();
      });
      this.palette.append(btn);
    }
  }

  private renderPrimStrip(snap: ReturnType<DesignerState["snapshot"]>): void {
    this.primStrip.innerHTML = "";
    const part = this.selectedPart;
    if (!part) {
      this.primStrip.append(el("span", "hint", "pick a part from the left menu"));
      return;
    }
    this.primStrip.append(el("strong", "", part.name + ": "));
    for (const prim of part.primitives) {
      const ref = `part:${part.id}.${prim.id}`;
      const btn = el("button", "prim-entry", `${prim.id} (${prim.type})`);
      btn.disabled = !this.state.isEnabled(ref);
      btn.addEventListener("click", () => void this.state.select(ref, prim.type));
      this.primStrip.append(btn);
    }
    if (snap.selection.length === 2) {
      const go = el("button", "connect-btn", "connect");
      go.addEventListener("click", () => void this.state.connectSelected());
      const flip = el("button", "connect-btn", "connect flipped");
      flip.addEventListener("click", () => void this.state.connectSelected("flip"));
      this.primStrip.append(go, flip);
    }
  }

  private renderSidebar(snap: ReturnType<DesignerState["snapshot"]>): void {
    this.sidebar.innerHTML = "";
    this.sidebar.append(el("h2", "", `step: ${snap.step}`));
    if (snap.step === "setup") {
      this.renderSetup(snap);
      return;
    }
    const sel = el("div", "selection", `selection: ${
      snap.selection.map((s) => s.ref).join(" + ") || "none"
    }`);
    this.sidebar.append(sel);
    if (snap.compatibleTypes) {
      this.sidebar.append(
        el("div", "filter-note", `compatible types: ${snap.compatibleTypes.join(", ")}`),
      );
    }
    const undo = el("button", "", "undo");
    undo.disabled = !snap.session?.can_undo;
    undo.addEventListener("click", () => void this.state.undo());
    const redo = el("button", "", "redo");
    redo.disabled = !snap.session?.can_redo;
    redo.addEventListener("click", () => void this.state.redo());
    this.sidebar.append(undo, redo);

    const solve = el("button", "solve-btn", snap.solving ? "solving..." : "Run Optimization");
    solve.disabled = !snap.session?.valid || snap.solving;
    solve.addEventListener("click", () => void this.state.runOptimization());
    this.sidebar.append(solve);

    if (snap.report) {
      const r = snap.report;
      const box = el("div", "report");
      box.append(el("div", "", `status: ${r.status}`));
      box.append(el("div", "", `pose error: ${r.objective.toFixed(2)}`));
      box.append(el("div", "", `cycle residual: ${r.cycle_residual.toExponential(2)}`));
      box.append(el("div", "", `energy: ${r.energy.toFixed(1)}`));
      for (const f of r.fall_apart) {
        box.append(el("div", "fall-apart", `slides apart: ${f.owner} (${f.dof} at ${f.bound})`));
      }
      this.sidebar.append(box);
    }
  }

  private renderSetup(snap: ReturnType<DesignerState["snapshot"]>): void {
    const session = snap.session;
    const envDone = session?.environment != null;
    const label = envDone ? "target part" : "environment part";
    this.sidebar.append(el("div", "", `choose the ${label} and pose it:`));
    const sliders = new PoseSliders({ z: envDone ? 300 : 500 });
    this.sidebar.append(sliders.root);
    const pick = el("button", "", `use selected part as ${label}`);
    pick.addEventListener("click", () => {
      if (!this.selectedPart) return;
      const frame = sliders.frame();
      if (envDone) void this.state.setTarget(this.selectedPart.id, frame);
      else void this.state.setEnvironment(this.selectedPart.id, frame);
    });
    this.sidebar.append(pick);
  }

  private renderToasts(snap: ReturnType<DesignerState["snapshot"]>): void {
    this.toastBox.innerHTML = "";
    for (const t of snap.toasts.slice(-3)) {
      this.toastBox.append(el("div", `toast toast-${t.kind}`, t.text));
    }
  }
}

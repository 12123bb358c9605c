/** Designer workflow state: setup, connect with two-way filtering, solve.
 *
 * The store owns the interaction invariants:
 *  - at most two selected primitives, and a second selection is accepted
 *    only if the compatibility query for the first one enabled it;
 *  - connects are only ever issued for such an enabled pair, so the server
 *    cannot see a connect the filter did not allow;
 *  - everything shown is derivable from server state plus the local
 *    selection, so a page reload reconstructs the UI from the session id.
 */

import { ServiceClient, ApiError, EndpointSpec } from "./api.js";
import { Compatible, Frame, Job, Part, Report, Scene, Session } from "./types.js";

export type Step = "setup" | "connect" | "solve";

export interface Selection {
  ref: string; // "instance.prim" or "part:part_id.prim"
  type: string;
}

export interface Toast {
  kind: "info" | "error";
  text: string;
}

export interface DesignerSnapshot {
  step: Step;
  session: Session | null;
  parts: Part[];
  selection: Selection[];
  enabled: Set<string> | null; // refs enabled for the second click
  compatibleTypes: string[] | null;
  solving: boolean;
  report: Report | null;
  scene: Scene | null;
  toasts: Toast[];
}

export class DesignerState {
  private session: Session | null = null;
  private parts: Part[] = [];
  private selection: Selection[] = [];
  private enabled: Set<string> | null = null;
  private compatibleTypes: string[] | null = null;
  private report: Report | null = null;
  private scene: Scene | null = null;
  private toasts: Toast[] = [];
  private solving = false;
  private listeners: Array<() => void> = [];

  constructor(private readonly client: ServiceClient) {}

  subscribe(fn: () => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const l of this.listeners) l();
  }

  private toast(kind: Toast["kind"], text: string): void {
    this.toasts = [...this.toasts.slice(-4), { kind, text }];
    this.emit();
  }

  snapshot(): DesignerSnapshot {
    return {
      step: this.step,
      session: this.session,
      parts: this.parts,
      selection: [...this.selection],
      enabled: this.enabled ? new Set(this.enabled) : null,
      compatibleTypes: this.compatibleTypes ? [...this.compatibleTypes] : null,
      solving: this.solving,
      report: this.report,
      scene: this.scene,
      toasts: [...this.toasts],
    };
  }

  get step(): Step {
    if (!this.session || this.session.environment === null || this.session.target === null)
      return "setup";
    return this.session.valid ? "solve" : "connect";
  }

  get sessionId(): string | null {
    return this.session?.id ?? null;
  }

  async boot(existingSessionId?: string): Promise<void> {
    this.parts = await this.client.listParts();
    this.session = existingSessionId
      ? await this.client.sessionState(existingSessionId)
      : await this.client.createSession();
    this.emit();
  }

  /** Reconstruct everything from the server (refresh safety). */
  async reload(): Promise<void> {
    if (!this.session) return;
    this.session = await this.client.sessionState(this.session.id);
    this.clearSelection();
    this.emit();
  }

  // -- step 1: setup --------------------------------------------------------

  async setEnvironment(part: string, frame: Frame, overrides?: Record<string, number>) {
    if (!this.session) throw new Error("no session");
    try {
      this.session = await this.client.setEnvironment(this.session.id, part, frame, overrides);
      this.emit();
    } catch (err) {
      this.surface(err);
    }
  }

  async setTarget(part: string, frame: Frame, overrides?: Record<string, number>) {
    if (!this.session) throw new Error("no session");
    try {
      this.session = await this.client.setTarget(this.session.id, part, frame, overrides);
      this.emit();
    } catch (err) {
      this.surface(err);
    }
  }

  // -- step 2: connect with two-way filtering -------------------------------

  /** First or second click on a primitive (palette or workspace). */
  async select(ref: string, type: string): Promise<void> {
    if (!this.session) throw new Error("no session");
    if (this.selection.length === 0) {
      this.selection = [{ ref, type }];
      const compat: Compatible = await this.client.compatible(this.session.id, ref);
      this.enabled = new Set([
        ...compat.assembly.map((e) => e.ref),
        ...compat.palette.map((e) => e.ref),
      ]);
      this.compatibleTypes = compat.compatible_types;
      this.emit();
      return;
    }
    if (this.selection.length === 1) {
      if (this.selection[0]!.ref === ref) {
        this.clearSelection();
        this.emit();
        return;
      }
      if (!this.enabled || !this.enabled.has(ref)) {
        this.toast("error", `that primitive is not compatible with ${this.selection[0]!.ref}`);
        return; // the invariant: never selected, never sent
      }
      this.selection = [...this.selection, { ref, type }];
      this.emit();
    }
  }

  isEnabled(ref: string): boolean {
    if (this.selection.length === 0 || !this.enabled) return true;
    return this.enabled.has(ref) || this.selection[0]!.ref === ref;
  }

  clearSelection(): void {
    this.selection = [];
    this.enabled = null;
    this.compatibleTypes = null;
  }

  private toEndpoint(sel: Selection): EndpointSpec {
    if (sel.ref.startsWith("part:")) {
      const body = sel.ref.slice(5);
      const dot = body.lastIndexOf(".");
      return { new_part: body.slice(0, dot), primitive: body.slice(dot + 1) };
    }
    return { ref: sel.ref };
  }

  /** Issue the connect for the current (validated) pair. */
  async connectSelected(alignment: "default" | "flip" = "default", isFixed = false) {
    if (!this.session) throw new Error("no session");
    if (this.selection.length !== 2) {
      this.toast("error", "select two compatible primitives first");
      return;
    }
    const [a, b] = this.selection;
    try {
      this.session = await this.client.connect(
        this.session.id,
        this.toEndpoint(a!),
        this.toEndpoint(b!),
        alignment,
        isFixed,
      );
      this.toast("info", `connected ${a!.ref} to ${b!.ref}`);
    } catch (err) {
      this.surface(err);
    } finally {
      this.clearSelection();
      this.emit();
    }
  }

  async undo(): Promise<void> {
    if (!this.session) return;
    try {
      this.session = await this.client.undo(this.session.id);
      this.clearSelection();
      this.emit();
    } catch (err) {
      this.surface(err);
    }
  }

  async redo(): Promise<void> {
    if (!this.session) return;
    try {
      this.session = await this.client.redo(this.session.id);
      this.clearSelection();
      this.emit();
    } catch (err) {
      this.surface(err);
    }
  }

  // -- step 3: solve ---------------------------------------------------------

  async runOptimization(poll?: { intervalMs?: number; sleep?: (ms: number) => Promise<void> }) {
    if (!this.session) throw new Error("no session");
    if (!this.session.valid) {
      this.toast("error", "connect the environment to the target before solving");
      return;
    }
    this.solving = true;
    this.emit();
    try {
      const job = await this.client.startSolve(this.session.id);
      const done: Job = await this.client.waitForSolve(this.session.id, job, poll);
      if (done.status === "done") {
        this.report = done.report;
        this.scene = done.scene;
        if (done.report.status === "falls_apart") {
          const f = done.report.fall_apart[0];
          this.toast(
            "error",
            f
              ? `assembly falls apart: ${f.owner} slides past its ${f.bound} limit`
              : "assembly falls apart",
          );
        } else {
          this.toast("info", `solve finished: ${done.report.status}`);
        }
      } else if (done.status === "failed") {
        this.toast("error", `solve failed: ${done.error}`);
      }
    } catch (err) {
      this.surface(err);
    } finally {
      this.solving = false;
      this.emit();
    }
  }

  /** Instances to highlight after a falls-apart verdict. */
  fallApartInstances(): Set<string> {
    const out = new Set<string>();
    for (const f of this.report?.fall_apart ?? []) {
      const dot = f.owner.indexOf(".");
      out.add(dot >= 0 ? f.owner.slice(0, dot) : f.owner);
    }
    return out;
  }

  private surface(err: unknown): void {
    if (err instanceof ApiError) {
      const text = err.rejection
        ? `${err.rejection.verdict.replaceAll("_", " ")}: ${err.rejection.message}`
        : err.message;
      this.toast("error", text);
      return;
    }
    this.toast("error", String(err));
  }
}

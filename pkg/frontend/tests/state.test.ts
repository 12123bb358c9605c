/** Contract tests against a mocked server: the designer never issues a
 * connect that the compatibility endpoint did not enable, rejections are
 * surfaced verbatim, and state reconstructs from the server session. */

import { describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api.js";
import { DesignerState } from "../src/state.js";

interface MockOptions {
  compatible?: { assembly: Array<{ ref: string; type: string }>; palette: Array<{ ref: string; type: string }> };
  rejectConnect?: { verdict: string; message: string };
}

function makeMock(opts: MockOptions = {}) {
  const connects: Array<Record<string, unknown>> = [];
  let hash = 0;
  const session = () => ({
    id: "s1",
    hash: `h${hash}`,
    valid: false,
    cycles: 0,
    environment: "env",
    target: "goal",
    can_undo: hash > 0,
    can_redo: false,
    solving: false,
    assembly: { format: 1, instances: [], connections: [] },
  });
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const respond = (data: unknown, status = 200) =>
      new Response(JSON.stringify(data), { status, headers: { "content-type": "application/json" } });
    if (url.endsWith("/library/parts")) {
      return respond({
        parts: [
          {
            id: "s_hook", name: "S-hook", mass: 18, generic: false, tags: [],
            primitives: [
              { id: "hook1", type: "hook", closed: false, shape: { arc_radius: 12 } },
              { id: "hook2", type: "hook", closed: false, shape: { arc_radius: 12 } },
            ],
          },
          {
            id: "surface", name: "Surface", mass: 0, generic: true, tags: ["environment"],
            primitives: [{ id: "surface", type: "surface", closed: false, shape: { width: 100, length: 100 } }],
          },
        ],
      });
    }
    if (url.endsWith("/sessions") && init?.method === "POST") return respond(session(), 201);
    if (/\/sessions\/s1$/.test(url)) return respond(session());
    if (url.includes("/compatible")) {
      return respond({
        selection: decodeURIComponent(url.split("primitive=")[1] ?? ""),
        compatible_types: ["hook", "hole", "rod", "tube"],
        ...(opts.compatible ?? {
          assembly: [{ ref: "env.rod", type: "rod" }],
          palette: [{ ref: "part:s_hook.hook1", type: "hook" }],
        }),
      });
    }
    if (url.endsWith("/connect")) {
      connects.push(body as Record<string, unknown>);
      if (opts.rejectConnect) {
        return respond({ detail: opts.rejectConnect }, 422);
      }
      hash += 1;
      return respond({ verdict: "ok", ...session() });
    }
    if (url.endsWith("/undo")) {
      hash = Math.max(0, hash - 1);
      return respond(session());
    }
    throw new Error(`unmocked url ${url}`);
  };
  return { fetchImpl, connects };
}

async function boot(opts: MockOptions = {}) {
  const mock = makeMock(opts);
  const state = new DesignerState(new ServiceClient("", mock.fetchImpl));
  await state.boot();
  return { state, mock };
}

describe("two-way filtering contract", () => {
  it("refuses a second selection the filter did not enable", async () => {
    const { state, mock } = await boot();
    await state.select("hook_instance.hook2", "hook");
    // the mock enabled only env.rod and part:s_hook.hook1
    await state.select("part:surface.surface", "surface");
    expect(state.snapshot().selection).toHaveLength(1);
    await state.connectSelected();
    expect(mock.connects).toHaveLength(0); // nothing was ever sent
    const toasts = state.snapshot().toasts;
    expect(toasts.some((t) => t.kind === "error")).toBe(true);
  });

  it("issues a connect only for an enabled pair", async () => {
    const { state, mock } = await boot();
    await state.select("hook_instance.hook2", "hook");
    await state.select("env.rod", "rod");
    expect(state.snapshot().selection).toHaveLength(2);
    await state.connectSelected();
    expect(mock.connects).toHaveLength(1);
    expect(mock.connects[0]).toMatchObject({
      a: { ref: "hook_instance.hook2" },
      b: { ref: "env.rod" },
      alignment: "default",
    });
  });

  it("maps palette refs onto new_part endpoints", async () => {
    const { state, mock } = await boot();
    await state.select("env.rod", "rod");
    await state.select("part:s_hook.hook1", "hook");
    await state.connectSelected("flip");
    expect(mock.connects[0]).toMatchObject({
      a: { ref: "env.rod" },
      b: { new_part: "s_hook", primitive: "hook1" },
      alignment: "flip",
    });
  });

  it("reports enabled-ness for greying out", async () => {
    const { state } = await boot();
    expect(state.isEnabled("anything.at-all")).toBe(true); // no selection yet
    await state.select("hook_instance.hook2", "hook");
    expect(state.isEnabled("env.rod")).toBe(true);
    expect(state.isEnabled("part:surface.surface")).toBe(false);
  });
});

describe("rejection feedback", () => {
  it("surfaces the server verdict verbatim", async () => {
    const { state, mock } = await boot({
      rejectConnect: { verdict: "both_closed", message: "both primitives are closed" },
    });
    await state.select("hook_instance.hook2", "hook");
    await state.select("env.rod", "rod");
    await state.connectSelected();
    expect(mock.connects).toHaveLength(1);
    const toasts = state.snapshot().toasts;
    const err = toasts.find((t) => t.kind === "error");
    expect(err?.text).toContain("both closed");
    expect(err?.text).toContain("both primitives are closed");
  });
});

describe("refresh safety", () => {
  it("reconstructs from the server session id", async () => {
    const mock = makeMock();
    const state = new DesignerState(new ServiceClient("", mock.fetchImpl));
    await state.boot("s1"); // existing session, not a new one
    expect(state.sessionId).toBe("s1");
    await state.select("hook_instance.hook2", "hook");
    await state.reload();
    const snap = state.snapshot();
    expect(snap.selection).toHaveLength(0); // local selection is not authoritative
    expect(snap.session?.id).toBe("s1");
  });
});

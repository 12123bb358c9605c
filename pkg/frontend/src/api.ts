/** Typed client for the design-session HTTP API. */

import {
  Compatible,
  CompatibleResponse,
  ConnectRejection,
  Frame,
  Job,
  JobState,
  Part,
  PartSummary,
  Session,
  SessionState,
} from "./types.js";
import { z } from "zod";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly rejection?: ConnectRejection,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface EndpointSpec {
  ref?: string;
  new_part?: string;
  instance?: string;
  primitive?: string;
  overrides?: Record<string, number>;
}

export class ServiceClient {
  constructor(
    readonly base: string = "",
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await this.fetchImpl(this.base + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!res.ok) {
      let detail: unknown;
      try {
        detail = (await res.json()).detail;
      } catch {
        detail = undefined;
      }
      if (detail && typeof detail === "object" && "verdict" in detail) {
        const rej = detail as ConnectRejection;
        throw new ApiError(res.status, rej.message, rej);
      }
      throw new ApiError(res.status, typeof detail === "string" ? detail : res.statusText);
    }
    return schema.parse(await res.json());
  }

  listParts(): Promise<Part[]> {
    return this.request(
      z.object({ parts: z.array(PartSummary) }),
      "GET",
      "/library/parts",
    ).then((r) => r.parts);
  }

  createSession(): Promise<Session> {
    return this.request(SessionState, "POST", "/sessions");
  }

  sessionState(id: string): Promise<Session> {
    return this.request(SessionState, "GET", `/sessions/${id}`);
  }

  setEnvironment(
    id: string,
    part: string,
    frame: Frame,
    overrides?: Record<string, number>,
    instance?: string,
  ): Promise<Session> {
    return this.request(SessionState, "POST", `/sessions/${id}/environment`, {
      part,
      frame,
      overrides,
      instance,
    });
  }

  setTarget(
    id: string,
    part: string,
    frame: Frame,
    overrides?: Record<string, number>,
    instance?: string,
  ): Promise<Session> {
    return this.request(SessionState, "POST", `/sessions/${id}/target`, {
      part,
      frame,
      overrides,
      instance,
    });
  }

  compatible(id: string, selectionRef: string): Promise<Compatible> {
    const q = encodeURIComponent(selectionRef);
    return this.request(
      CompatibleResponse,
      "GET",
      `/sessions/${id}/compatible?primitive=${q}`,
    );
  }

  connect(
    id: string,
    a: EndpointSpec,
    b: EndpointSpec,
    alignment: "default" | "flip" = "default",
    isFixed = false,
  ): Promise<Session> {
    return this.request(
      SessionState.loose().transform((s) => SessionState.parse(s)),
      "POST",
      `/sessions/${id}/connect`,
      { a, b, alignment, is_fixed: isFixed },
    );
  }

  undo(id: string): Promise<Session> {
    return this.request(SessionState, "POST", `/sessions/${id}/undo`);
  }

  redo(id: string): Promise<Session> {
    return this.request(SessionState, "POST", `/sessions/${id}/redo`);
  }

  startSolve(id: string): Promise<string> {
    return this.request(
      z.object({ job: z.string() }),
      "POST",
      `/sessions/${id}/solve`,
    ).then((r) => r.job);
  }

  jobState(id: string, job: string): Promise<Job> {
    return this.request(JobState, "GET", `/sessions/${id}/solve/${job}`);
  }

  /** Poll a solve job until it finishes. */
  async waitForSolve(
    id: string,
    job: string,
    opts: { intervalMs?: number; timeoutMs?: number; sleep?: (ms: number) => Promise<void> } = {},
  ): Promise<Job> {
    const interval = opts.intervalMs ?? 500;
    const deadline = Date.now() + (opts.timeoutMs ?? 300_000);
    const sleep = opts.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
    for (;;) {
      const state = await this.jobState(id, job);
      if (state.status !== "running") return state;
      if (Date.now() > deadline) throw new ApiError(408, "solve timed out");
      await sleep(interval);
    }
  }
}

// Typed client for the review service. The fetch implementation is
// injectable for tests; an in-flight scanline PUT is aborted when a newer
// one supersedes it.

import type { Scanline, SessionView, StudySummary } from "./types.js";
import { toJsonScanline } from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly stage: string | null;

  constructor(status: number, detail: unknown) {
    const stage =
      typeof detail === "object" && detail !== null && "stage" in detail
        ? String((detail as { stage: unknown }).stage)
        : null;
    const text =
      typeof detail === "string" ? detail : JSON.stringify(detail ?? "error");
    super(stage ? `[${stage}] ${text}` : text);
    this.status = status;
    this.stage = stage;
  }
}

export class RequestCancelled extends Error {
  constructor() {
    super("superseded by a newer request");
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow(response: Response): Promise<unknown> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? (body as { detail: unknown }).detail
        : body;
    throw new ApiError(response.status, detail);
  }
  return body;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private pendingPut: AbortController | null = null;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listStudies(): Promise<StudySummary[]> {
    const body = (await parseOrThrow(
      await this.fetchFn(this.url("/api/studies")),
    )) as { studies: StudySummary[] };
    return body.studies;
  }

  async runAuto(studyId: string, phase: string): Promise<SessionView> {
    return (await parseOrThrow(
      await this.fetchFn(
        this.url(`/api/studies/${studyId}/phases/${phase.toLowerCase()}/auto`),
        { method: "POST" },
      ),
    )) as SessionView;
  }

  async getSession(studyId: string, phase: string): Promise<SessionView | null> {
    const response = await this.fetchFn(
      this.url(`/api/studies/${studyId}/phases/${phase.toLowerCase()}/session`),
    );
    if (response.status === 404) return null;
    return (await parseOrThrow(response)) as SessionView;
  }

  /** Replace the scanline; any still-running replacement is aborted. */
  async putScanline(
    studyId: string,
    phase: string,
    scanline: Scanline,
  ): Promise<SessionView> {
    if (this.pendingPut) this.pendingPut.abort();
    const controller = new AbortController();
    this.pendingPut = controller;
    try {
      const response = await this.fetchFn(
        this.url(`/api/studies/${studyId}/phases/${phase.toLowerCase()}/scanline`),
        {
          method: "PUT",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(toJsonScanline(scanline)),
          signal: controller.signal,
        },
      );
      return (await parseOrThrow(response)) as SessionView;
    } catch (err) {
      if (controller.signal.aborted) throw new RequestCancelled();
      throw err;
    } finally {
      if (this.pendingPut === controller) this.pendingPut = null;
    }
  }

  async accept(studyId: string, phase: string): Promise<SessionView> {
    return (await parseOrThrow(
      await this.fetchFn(
        this.url(`/api/studies/${studyId}/phases/${phase.toLowerCase()}/accept`),
        { method: "POST" },
      ),
    )) as SessionView;
  }

  frameUrl(studyId: string, index: number): string {
    return this.url(`/api/studies/${studyId}/frames/${index}`);
  }

  ammUrl(studyId: string, phase: string, revision: number): string {
    return this.url(
      `/api/studies/${studyId}/phases/${phase.toLowerCase()}/amm.png?r=${revision}`,
    );
  }
}

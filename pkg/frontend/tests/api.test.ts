import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, RequestCancelled } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

const LINE = { p1: { x: 1, y: 2 }, p2: { x: 3, y: 4 } };

describe("api client", () => {
  it("lists studies from the expected endpoint", async () => {
    const calls: string[] = [];
    const client = new ApiClient("", async (input) => {
      calls.push(input);
      return jsonResponse({ studies: [{ study_id: "s1" }] });
    });
    const studies = await client.listStudies();
    expect(calls).toEqual(["/api/studies"]);
    expect(studies[0].study_id).toBe("s1");
  });

  it("sends scanline replacements with pixel-unit keys", async () => {
    let captured: unknown = null;
    const client = new ApiClient("http://x", async (input, init) => {
      expect(input).toBe("http://x/api/studies/s1/phases/ed/scanline");
      expect(init?.method).toBe("PUT");
      captured = JSON.parse(String(init?.body));
      return jsonResponse({ ok: true });
    });
    await client.putScanline("s1", "ED", LINE);
    expect(captured).toEqual({
      p1: { x_px: 1, y_px: 2 },
      p2: { x_px: 3, y_px: 4 },
    });
  });

  it("aborts a superseded scanline replacement", async () => {
    const delays: Array<() => void> = [];
    const client = new ApiClient("", (input, init) => {
      return new Promise<Response>((resolve, reject) => {
        init?.signal?.addEventListener("abort", () =>
          reject(new DOMException("aborted", "AbortError")),
        );
        delays.push(() => resolve(jsonResponse({ which: delays.length })));
      });
    });
    const first = client.putScanline("s1", "ED", LINE);
    const second = client.putScanline("s1", "ED", LINE);
    delays[1]();
    await expect(first).rejects.toBeInstanceOf(RequestCancelled);
    await expect(second).resolves.toEqual({ which: 2 });
  });

  it("raises ApiError with the stage for conflict responses", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse({ detail: { stage: "detect", reason: "flat profile" } }, 409),
    );
    const error = await client.runAuto("s1", "ED").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(409);
    expect(error.stage).toBe("detect");
    expect(error.message).toContain("flat profile");
  });

  it("raises ApiError with the reason for validation errors", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse({ detail: "scanline endpoints must be distinct" }, 422),
    );
    const error = await client.putScanline("s1", "ED", LINE).catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(422);
    expect(error.stage).toBeNull();
    expect(error.message).toContain("distinct");
  });

  it("returns null for a missing session", async () => {
    const client = new ApiClient("", async () => jsonResponse({ detail: "no" }, 404));
    expect(await client.getSession("s1", "ED")).toBeNull();
  });

  it("builds image URLs with revision-based cache busting", () => {
    const client = new ApiClient("http://host/");
    expect(client.frameUrl("s1", 3)).toBe("http://host/api/studies/s1/frames/3");
    expect(client.ammUrl("s1", "ES", 7)).toBe(
      "http://host/api/studies/s1/phases/es/amm.png?r=7",
    );
  });
});

import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
  vi.useRealTimers();
});

describe("api client", () => {
  it("raises typed errors with the server payload", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse({ error: "boom" }, 422)));
    const client = new ApiClient();
    await expect(client.simulate({ n: 30, alpha: 0, beta: 2.5, sigma2: 1, seed: 1 }))
      .rejects.toMatchObject({ status: 422 });
  });

  it("aborts the superseded request of the same control group", async () => {
    const seen: AbortSignal[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn((_url: string, init?: RequestInit) => {
        seen.push(init!.signal as AbortSignal);
        return new Promise<Response>((resolve, reject) => {
          init!.signal!.addEventListener("abort", () =>
            reject(new DOMException("aborted", "AbortError")),
          );
          setTimeout(() => resolve(jsonResponse({ ok: true })), 30);
        });
      }),
    );
    const client = new ApiClient();
    const first = client.priors({ mu: 0, phi: 1, a: 1, b: 1 });
    const second = client.priors({ mu: 0, phi: 2, a: 1, b: 1 });
    await expect(first).rejects.toThrow(/abort/i);
    await expect(second).resolves.toEqual({ ok: true });
    expect(seen[0].aborted).toBe(true);
    expect(seen[1].aborted).toBe(false);
  });

  it("polls jobs until done with growing delay", async () => {
    const statuses = ["queued", "running", "running", "done"];
    let call = 0;
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse({
          job_id: "j1",
          kind: "surface",
          status: statuses[Math.min(call++, statuses.length - 1)],
          progress: call / statuses.length,
          result_locator: null,
          error: null,
        }),
      ),
    );
    const client = new ApiClient();
    const progress: number[] = [];
    const record = await client.pollJob("j1", { onProgress: (f) => progress.push(f) });
    expect(record.status).toBe("done");
    expect(call).toBe(statuses.length);
    expect(progress.length).toBe(statuses.length);
    expect(progress.at(-1)).toBe(1);
  });

  it("propagates ApiError for unknown jobs", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => jsonResponse({ error: "unknown job" }, 404)));
    const client = new ApiClient();
    await expect(client.jobStatus("nope")).rejects.toBeInstanceOf(ApiError);
  });
});

/** Typed client for the /v1 JSON API.
 *
 * Each control group keeps at most one request in flight: issuing a new one
 * aborts its superseded predecessor.  Job polling backs off geometrically.
 */

import type {
  BfPayload,
  JobRecordPayload,
  PredictPayload,
  PriorsPayload,
  SimulatePayload,
  SlicesPayload,
  SurfaceResultPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public payload: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(payload)}`);
  }
}

export interface GridDimRequest {
  name: string;
  scale: "linear" | "log10";
  lower: number;
  upper: number;
  count: number;
}

export class ApiClient {
  private inflight = new Map<string, AbortController>();

  constructor(private base: string = "") {}

  /** POST/GET with per-group cancellation of superseded requests. */
  private async request<T>(group: string, path: string, init: RequestInit = {}): Promise<T> {
    this.inflight.get(group)?.abort();
    const controller = new AbortController();
    this.inflight.set(group, controller);
    try {
      const response = await fetch(this.base + path, { ...init, signal: controller.signal });
      const payload = response.status === 204 ? null : await response.json();
      if (!response.ok) {
        throw new ApiError(response.status, payload);
      }
      return payload as T;
    } finally {
      if (this.inflight.get(group) === controller) {
        this.inflight.delete(group);
      }
    }
  }

  private post<T>(group: string, path: string, body: unknown): Promise<T> {
    return this.request<T>(group, path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  simulate(body: {
    n: number;
    alpha: number;
    beta: number;
    sigma2: number;
    seed: number;
  }): Promise<SimulatePayload> {
    return this.post("simulate", "/v1/simulate", body);
  }

  bayesFactors(body: {
    data: { x: number[]; y: number[] };
    hypers: { mu: number; phi: number; a: number; b: number };
  }): Promise<BfPayload> {
    return this.post("bf", "/v1/bf", body);
  }

  priors(params: { mu: number; phi: number; a: number; b: number }): Promise<PriorsPayload> {
    const qs = new URLSearchParams(
      Object.entries(params).map(([k, v]) => [k, String(v)]),
    );
    return this.request("priors", `/v1/priors/density?${qs}`);
  }

  startSurfaceJob(body: {
    evaluator: string;
    data?: { x: number[]; y: number[] };
    hlm_source?: { synthetic_seed: number };
    base?: Record<string, number>;
    grid: GridDimRequest[];
    replicates?: number;
    seed?: number;
    n_draws?: number;
  }): Promise<JobRecordPayload> {
    return this.post("surface", "/v1/surface", body);
  }

  jobStatus(jobId: string): Promise<JobRecordPayload> {
    return this.request(`job:${jobId}`, `/v1/jobs/${jobId}`);
  }

  surfaceResult(jobId: string): Promise<SurfaceResultPayload> {
    return this.request(`result:${jobId}`, `/v1/jobs/${jobId}/result`);
  }

  hlmSlices(body: {
    source: { synthetic_seed: number };
    points_per_slice: number;
    with_gp: boolean;
  }): Promise<SlicesPayload> {
    return this.post("slices", "/v1/hlm/slices", body);
  }

  startFitJob(body: { job_id: string; het: boolean }): Promise<JobRecordPayload> {
    return this.post("fit", "/v1/surrogate/fit", body);
  }

  predict(body: { fit_job_id: string; grid: GridDimRequest[] }): Promise<PredictPayload> {
    return this.post("predict", "/v1/surrogate/predict", body);
  }

  /** Poll until the job finishes; geometric backoff capped at 4s. */
  async pollJob(
    jobId: string,
    options: { onProgress?: (fraction: number) => void; signal?: AbortSignal } = {},
  ): Promise<JobRecordPayload> {
    let delay = 400;
    for (;;) {
      const record = await this.jobStatus(jobId);
      options.onProgress?.(record.progress);
      if (record.status === "done" || record.status === "failed") {
        return record;
      }
      await new Promise((resolve, reject) => {
        const timer = setTimeout(resolve, delay);
        options.signal?.addEventListener("abort", () => {
          clearTimeout(timer);
          reject(new DOMException("aborted", "AbortError"));
        });
      });
      delay = Math.min(delay * 1.6, 4000);
    }
  }
}

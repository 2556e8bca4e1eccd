/** Payload shapes of the /v1 JSON API the explorer consumes. */

export interface SimulatePayload {
  x: number[];
  y: number[];
  csv: string;
  ls_slope: number;
  ls_stderr: number;
  p_value: number;
}

export interface LogBfPayload {
  value: number;
  std_err: number;
  method: string;
}

export interface BfPayload {
  results: {
    closed_quadrature: LogBfPayload;
    zellner_siow: LogBfPayload;
    bic: LogBfPayload;
    fractional: LogBfPayload;
  };
  ls_slope: number;
}

export interface PriorsPayload {
  beta: { x: number[]; density: number[] };
  gamma: { x: number[]; density: number[] };
}

export interface SurfaceSampleRow {
  replicate: number;
  log_bf: number | null;
  std_err: number | null;
  class: string;
  [dim: string]: number | string | null;
}

export interface SurfaceResultPayload {
  result: { columns: string[]; samples: SurfaceSampleRow[] };
  location_summary: LocationSummaryRow[];
  csv: string;
  manifest: { seed: number; design: { box: { dims: BoxDimPayload[] } } };
}

export interface LocationSummaryRow {
  mean_log_bf: number;
  sd_log_bf: number;
  n_replicates: number;
  class: string;
  [dim: string]: number | string;
}

export interface BoxDimPayload {
  name: string;
  lower: number;
  upper: number;
  scale: "linear" | "log10";
}

export interface SliceGpPayload {
  mesh: number[];
  mean: number[];
  sd_obs: number[];
  band90_lo: number[];
  band90_hi: number[];
}

export interface SlicePayload {
  hyper: string;
  grid: number[];
  log_bf: (number | null)[];
  skipped: boolean[];
  center_value: number;
  gp?: SliceGpPayload | null;
}

export interface SlicesPayload {
  slices: SlicePayload[];
  center: Record<string, number>;
  csv: string;
}

export interface PredictPayload {
  columns: string[];
  points: number[][];
  counts: number[];
  mean: number[];
  sd_mean: number[];
  sd_obs: number[];
  band95_lo: number[];
  band95_hi: number[];
  class: string[];
  csv: string;
}

export interface JobRecordPayload {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  result_locator: string | null;
  error: string | null;
}

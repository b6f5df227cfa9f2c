// Typed client for the tracking service. The UI does no tracking math:
// everything displayed comes straight from these responses.

export interface Tile {
  values: number[][];
  f0: number;
  df: number;
  t0: number;
  dt: number;
  full_bins: number;
  full_frames: number;
}

export interface JobStatus {
  id: string;
  status: string;
  n_bins: number;
  n_frames: number;
  has_result: boolean;
  error: string | null;
}

export interface ConstraintBody {
  frames: [number, number];
  bins: [number, number];
  iteration?: number;
}

export interface TrackResult {
  traces: number[][];
  masks: number[][];
  mean_rer: number[];
  freq_axis: { f0: number; df: number };
}

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function check(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && body.detail) detail = String(body.detail);
    } catch {
      // non-JSON error body
    }
    throw new ServiceError(response.status, detail);
  }
  return response;
}

export class ApiClient {
  constructor(private base: string = "") {}

  async createJob(file: Blob, filename: string, config?: string): Promise<string> {
    const form = new FormData();
    form.append("file", file, filename);
    if (config) form.append("config", config);
    const response = await check(
      await fetch(`${this.base}/jobs`, { method: "POST", body: form }),
    );
    return (await response.json()).id as string;
  }

  async jobStatus(id: string): Promise<JobStatus> {
    const response = await check(await fetch(`${this.base}/jobs/${id}`));
    return (await response.json()) as JobStatus;
  }

  async spectrogram(id: string, maxw?: number, maxh?: number): Promise<Tile> {
    const params = new URLSearchParams();
    if (maxw) params.set("maxw", String(maxw));
    if (maxh) params.set("maxh", String(maxh));
    const qs = params.toString();
    const url = `${this.base}/jobs/${id}/spectrogram${qs ? "?" + qs : ""}`;
    const response = await check(await fetch(url));
    return (await response.json()) as Tile;
  }

  async startTracking(id: string, nTraces: number,
                      constraints: ConstraintBody[]): Promise<void> {
    await check(
      await fetch(`${this.base}/jobs/${id}/track`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ n_traces: nTraces, constraints }),
      }),
    );
  }

  // Polls /result every `intervalMs` until the run leaves the 409 state.
  async pollResult(id: string, intervalMs = 1000, timeoutMs = 120000): Promise<TrackResult> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const response = await fetch(`${this.base}/jobs/${id}/result`);
      if (response.status !== 409) {
        return (await check(response)).json() as Promise<TrackResult>;
      }
      if (Date.now() > deadline) {
        throw new ServiceError(408, "tracking run timed out");
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}

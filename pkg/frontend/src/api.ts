import type {
  BandProps,
  DiffProps,
  FeatureCollection,
  GraphSummary,
  JobHandle,
  LandMask,
  ScenarioConfig,
  ScenarioSummary,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class PlannerApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly pollIntervalMs = 300,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  graphSummary(): Promise<GraphSummary> {
    return this.request('/graph/summary');
  }

  baseline(): Promise<{ config: ScenarioConfig; scenario_id: string }> {
    return this.request('/baseline');
  }

  landmask(): Promise<LandMask> {
    return this.request('/landmask');
  }

  evaluate(config: ScenarioConfig): Promise<JobHandle> {
    return this.request('/scenario/evaluate', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(config),
    });
  }

  relocate(station: number, lon: number, lat: number): Promise<JobHandle> {
    return this.request(`/station/${station}/relocate`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ lon, lat }),
    });
  }

  jobStatus(id: string): Promise<JobHandle> {
    return this.request(`/scenario/${id}`);
  }

  bands(id: string): Promise<FeatureCollection<BandProps>> {
    return this.request(`/scenario/${id}/bands`);
  }

  diff(id: string): Promise<FeatureCollection<DiffProps>> {
    return this.request(`/scenario/${id}/diff`);
  }

  summary(id: string): Promise<ScenarioSummary> {
    return this.request(`/scenario/${id}/summary`);
  }

  /** Poll until the job reaches a terminal state. */
  async waitForJob(
    handle: JobHandle,
    onProgress?: (job: JobHandle) => void,
    timeoutMs = 300_000,
  ): Promise<JobHandle> {
    let job = handle;
    const deadline = Date.now() + timeoutMs;
    while (job.status === 'queued' || job.status === 'running') {
      onProgress?.(job);
      if (Date.now() > deadline) {
        throw new ApiError(0, `job ${job.id} timed out`);
      }
      await sleep(this.pollIntervalMs);
      job = await this.jobStatus(job.id);
    }
    onProgress?.(job);
    if (job.status === 'failed') {
      throw new ApiError(0, job.error ?? 'job failed');
    }
    return job;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

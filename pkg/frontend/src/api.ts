import type {
  ApiError,
  RepaintRequest,
  RunRecord,
  RunSummary,
  SamplerConfig,
  SceneDocument,
  Vocabulary,
} from "./types.js";

export class ApiRequestError extends Error {
  readonly detail: ApiError;

  constructor(detail: ApiError) {
    super(detail.message);
    this.detail = detail;
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail: ApiError = { code: "http_error", message: response.statusText };
    try {
      const body = await response.json();
      if (body && body.error) detail = body.error as ApiError;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiRequestError(detail);
  }
  return response.json() as Promise<T>;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  getVocab(): Promise<Vocabulary> {
    return fetch(`${this.baseUrl}/api/vocab`).then((r) => asJson<Vocabulary>(r));
  }

  createRun(scene: SceneDocument, config: SamplerConfig = {}): Promise<{ run_id: string }> {
    return fetch(`${this.baseUrl}/api/runs`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scene, config }),
    }).then((r) => asJson<{ run_id: string }>(r));
  }

  listRuns(): Promise<RunSummary[]> {
    return fetch(`${this.baseUrl}/api/runs`)
      .then((r) => asJson<{ runs: RunSummary[] }>(r))
      .then((body) => body.runs);
  }

  getRun(runId: string): Promise<RunRecord> {
    return fetch(`${this.baseUrl}/api/runs/${runId}`).then((r) => asJson<RunRecord>(r));
  }

  createRepaint(runId: string, request: RepaintRequest): Promise<{ run_id: string }> {
    return fetch(`${this.baseUrl}/api/runs/${runId}/repaint`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    }).then((r) => asJson<{ run_id: string }>(r));
  }

  imageUrl(runId: string, format: "png" | "ppm" = "png"): string {
    return `${this.baseUrl}/api/runs/${runId}/image.${format}`;
  }

  async fetchImageBytes(runId: string, format: "png" | "ppm" = "ppm"): Promise<Uint8Array> {
    const response = await fetch(this.imageUrl(runId, format));
    if (!response.ok) {
      throw new ApiRequestError({ code: "http_error", message: response.statusText });
    }
    return new Uint8Array(await response.arrayBuffer());
  }
}

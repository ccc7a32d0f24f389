/** HTTP client for the annotation service. The UI holds no state of its
 * own beyond what these calls return; the single piece of configuration
 * is the service base URL. */

import type {
  AnnotationTask,
  Problem,
  Proof,
  ProofAnalysis,
  RubricScore,
  SubmitResult,
  TaskStatus,
} from "./types.js";

/** An error reply from the service or a transport failure.
 *
 * `detail` carries the server's message verbatim so the UI can display
 * exactly what the service said. Transport failures (service down) use
 * status 0 and code "unreachable". */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }

  get isConnectivity(): boolean {
    return this.status === 0;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Proof and task ids are hierarchical ("prob-1/t003/s02"); keep the
 * slashes as path separators and encode everything else. */
export function encodePathId(id: string): string {
  return id.split("/").map(encodeURIComponent).join("/");
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async fetchQueue(status: TaskStatus | "all" = "pending"): Promise<AnnotationTask[]> {
    const query = status === "all" ? "" : `?status=${status}`;
    return this.request<AnnotationTask[]>("GET", `/annotations${query}`);
  }

  async fetchProblems(): Promise<Problem[]> {
    return this.request<Problem[]>("GET", "/problems");
  }

  async fetchProof(proofId: string): Promise<Proof> {
    return this.request<Proof>("GET", `/proofs/${encodePathId(proofId)}`);
  }

  async fetchAnalyses(proofId: string): Promise<ProofAnalysis[]> {
    return this.request<ProofAnalysis[]>("GET", `/analyses/${encodePathId(proofId)}`);
  }

  async submitScore(
    taskId: string,
    score: RubricScore,
    annotatorId: string,
  ): Promise<SubmitResult> {
    return this.request<SubmitResult>("POST", `/annotations/${encodePathId(taskId)}`, {
      score,
      annotator_id: annotatorId,
    });
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const url = `${this.baseUrl}${path}`;
    let response: Response;
    try {
      response = await this.fetchFn(url, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new ApiError(0, "unreachable", `cannot reach ${url}: ${reason}`);
    }
    const text = await response.text();
    if (!response.ok) {
      throw toApiError(response.status, text);
    }
    return JSON.parse(text) as T;
  }
}

function toApiError(status: number, text: string): ApiError {
  try {
    const parsed = JSON.parse(text) as { error?: unknown; detail?: unknown };
    if (typeof parsed.error === "string" && typeof parsed.detail === "string") {
      return new ApiError(status, parsed.error, parsed.detail);
    }
  } catch {
    // Not a structured error body; fall through to the raw text.
  }
  return new ApiError(status, "http_error", text || `HTTP ${status}`);
}
